"""Exception types shared across the package."""


class ImpairLabError(Exception):
    """Base class for all errors raised by impairlab."""


class NotWavError(ImpairLabError):
    """File is not a RIFF/WAVE container."""


class UnsupportedFormatError(ImpairLabError):
    """WAV file is not mono 16-bit PCM."""


class EmptyAudioError(ImpairLabError):
    """Audio contains zero samples."""


class SilentInputError(ImpairLabError):
    """Operation requires a non-silent signal."""


class SampleRateMismatchError(ImpairLabError):
    """Clips with different sample rates were combined."""


class InvalidRt60Error(ImpairLabError):
    """Reverberation time must be positive."""


class TooShortError(ImpairLabError):
    """Signal is too short for the requested operation."""


class InvalidParamsError(ImpairLabError):
    """Markov loss-model probabilities outside [0, 1]."""


class EmptyTraceError(ImpairLabError):
    """Loss trace has no events or does not cover the clip."""


class OutOfRangeError(ImpairLabError):
    """Parameter outside its allowed range."""


class EmptyCorpusError(ImpairLabError):
    """Dataset synthesis needs at least one source clip."""


class TooManyBandsError(ImpairLabError):
    """Mel filterbank cannot fit the requested number of bands."""


class ShapeMismatchError(ImpairLabError):
    """Tensor shape incompatible with the model or layer."""


class BadLabelError(ImpairLabError):
    """Class label outside 0..n_classes-1."""


class EmptySetError(ImpairLabError):
    """Training or evaluation set is empty."""


class CorruptModelError(ImpairLabError):
    """Model checkpoint failed validation (magic, version or checksum)."""


class BadConfusionError(ImpairLabError):
    """Rater confusion matrix rows must sum to 1."""


class TooSmallError(ImpairLabError):
    """Dataset too small for a stratified split."""


class InvalidGridError(ImpairLabError):
    """Sweep size grid must be strictly increasing."""
