"""Exception hierarchy shared across the package."""


class MtcError(Exception):
    """Base class for all package errors."""


class UnreadableFile(MtcError):
    """Capture file has a bad magic number or a truncated file header."""


class TruncatedRecord(MtcError):
    """A packet record was cut off mid-way (tail truncation)."""


class MissingFile(MtcError):
    """A manifest references a capture file that does not exist."""


class DuplicatePath(MtcError):
    """The same capture path is listed twice in one manifest."""


class ManifestError(MtcError):
    """Structurally invalid manifest."""


class EmptyCapture(Warning):
    """A listed capture produced no sessions (warning, not an error)."""


class OneClassOnly(MtcError):
    """Balancing requires both benign and malware sessions."""


class CorruptStore(MtcError):
    """Corpus store failed its magic or checksum validation."""


class InsufficientPayload(MtcError):
    """Session is shorter than the fixed-width byte extractor requires."""


class ShapeMismatch(MtcError):
    """Tensors with inconsistent dims/representation in one file."""


class CorruptTensorFile(MtcError):
    """Tensor file failed magic/structure validation."""


class EmptyTrainingSet(MtcError):
    """Model fitting called with zero samples."""


class DimensionMismatch(MtcError):
    """Query dimensionality differs from training dimensionality."""


class CorruptModelFile(MtcError):
    """Model dump failed its magic or structure validation."""


class LengthMismatch(MtcError):
    """True/predicted label sequences differ in length."""


class UnknownLabel(MtcError):
    """A label outside the declared class list."""


class ClassTooSmall(MtcError):
    """A class has fewer members than the number of folds."""


class UnknownFamily(MtcError):
    """A protocol referenced a malware family absent from the corpus."""


class PluginError(MtcError):
    """An external model plugin failed (nonzero exit or bad output)."""
