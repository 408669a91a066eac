class DlModelError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatch(DlModelError):
    """Input tensor dimensions do not fit the requested architecture."""


class SingleClass(DlModelError):
    """Training labels contain fewer than two distinct classes."""


class IncompatibleModel(DlModelError):
    """A stored model cannot be applied to the given tensors."""


class CorruptTensorFile(DlModelError):
    """A tensor file fails magic/size validation."""
