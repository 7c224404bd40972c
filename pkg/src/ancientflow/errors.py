"""Exception type shared by all modules."""


class AncientFlowError(ValueError):
    """Raised when an operation's precondition or numerical check fails.

    ``code`` is a short machine-readable tag such as ``"invalid-time"``;
    ``context`` carries diagnostic values (best-so-far results, residuals,
    the failing time of a run).
    """

    def __init__(self, code, message="", **context):
        self.code = code
        self.context = context
        super().__init__(f"{code}: {message}" if message else code)
