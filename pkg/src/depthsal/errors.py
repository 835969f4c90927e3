"""Exception types raised across the package."""


class DepthsalError(Exception):
    """Base class for all package errors."""


class ImageReadError(DepthsalError):
    """A raster file could not be read or decoded."""

    def __init__(self, path, reason="cannot read or decode file"):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class UnsupportedBitDepthError(ImageReadError):
    def __init__(self, path, dtype):
        super().__init__(path, f"unsupported bit depth ({dtype}); expected 8 or 16 bit")


class EmptyImageError(ImageReadError):
    def __init__(self, path):
        super().__init__(path, "image has a zero dimension")


class ChannelError(ImageReadError):
    def __init__(self, path, channels):
        super().__init__(path, f"expected a single-channel raster, got {channels} channels")


class ImageWriteError(DepthsalError):
    def __init__(self, path, reason="cannot write file"):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")


class ShapeMismatchError(DepthsalError, ValueError):
    """Two rasters (or per-region vectors) that must agree in size do not."""


class DatasetError(DepthsalError):
    """A dataset directory is inconsistent; ``ids`` lists the offending entries."""

    def __init__(self, message, ids=()):
        self.ids = list(ids)
        if self.ids:
            message = f"{message}: {', '.join(self.ids)}"
        super().__init__(message)
