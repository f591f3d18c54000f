"""Exception and warning types shared across the toolkit."""


class StereoGTError(Exception):
    """Base class for all toolkit errors."""


class CalibrationError(StereoGTError):
    """Rotation matrix is not orthonormal / det != +1, or a calibration file is inconsistent."""


class DivergentCalibrationError(CalibrationError):
    """Rotations handed to averaging are separated by more than 90 degrees; the mean is ambiguous."""


class EmptyInputError(StereoGTError):
    """An operation that needs at least one element received an empty sequence."""


class InvalidDepthError(StereoGTError):
    """A depth value was zero or negative where a strictly positive depth is required."""


class InvalidDisparityError(StereoGTError):
    """A disparity value was zero or negative where a strictly positive disparity is required."""


class BehindCameraError(StereoGTError):
    """A point with z <= 0 cannot be projected through a pinhole camera."""


class DimensionError(StereoGTError):
    """Image/map dimensions do not satisfy an operation's requirements."""


class RangeOverflowError(StereoGTError):
    """A disparity rounds to >= 256 and cannot be stored in the 8-bit format."""


class FormatError(StereoGTError):
    """A file is not in one of the supported on-disk formats."""


class NotFoundError(StereoGTError):
    """A dataset file is missing or a sample index is out of range."""


class CorruptDatasetError(StereoGTError):
    """On-disk data contradicts the dataset manifest (e.g. wrong resolution)."""


class PairingError(StereoGTError):
    """Prediction and ground-truth file sets cannot be matched one-to-one."""


class EmptyEvaluationError(StereoGTError):
    """No valid ground-truth pixels are available, so the metric is undefined."""


class SceneSpecError(StereoGTError):
    """A synthetic scene specification is internally inconsistent."""


class EmptyRegistrationWarning(UserWarning):
    """All projected depth pixels fell outside the output image (likely mismatched calibration)."""

    def __init__(self, hit_ratio: float):
        self.hit_ratio = hit_ratio
        super().__init__(
            f"registration produced no in-bounds pixels (hit ratio {hit_ratio:.4f}); "
            "check that rig, intrinsics and output size belong together"
        )
