from .errors import AncientFlowError

__version__ = "0.1.0"
