"""Core raster image type, spectral machinery, periodic convolution and file I/O.

Everything downstream treats an image as a real-valued 2D grid with periodic
boundary conditions, so circular convolution can be computed exactly in the
frequency domain.  Pixel values use the [0, 1] range convention for file
interchange; in-memory values are unconstrained doubles.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as _fft
from PIL import Image as _PILImage, UnidentifiedImageError


class ImageError(Exception):
    """Base class for image-related failures."""


class DimensionError(ImageError):
    """Raised when image or filter dimensions are invalid or inconsistent."""


class UnsupportedFormatError(ImageError):
    """Raised when a file is readable but not a supported image format."""


class CorruptFileError(ImageError):
    """Raised when a file claims a supported format but cannot be decoded."""


class ImageIOError(ImageError):
    """Raised when the underlying file cannot be read or written at all."""


# Luminance weights for RGB inputs (ITU-R BT.601).
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class RasterImage:
    """A real-valued 2D image with double-precision pixels.

    ``data`` is an (height, width) float64 array.  Instances are immutable:
    the wrapped array is set non-writeable at construction.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"image data must be 2D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"image dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("image contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @staticmethod
    def zeros(height: int, width: int) -> "RasterImage":
        return RasterImage(np.zeros((height, width)))

    def norm2(self) -> float:
        """Euclidean norm of the pixel values."""
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class SpectralImage:
    """Complex frequency-domain counterpart of a RasterImage (unitary DFT)."""

    data: np.ndarray
    height: int
    width: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 2:
            raise DimensionError(f"spectrum data must be 2D, got shape {arr.shape}")
        if arr.shape != (self.height, self.width):
            raise DimensionError(
                f"spectrum shape {arr.shape} does not match declared size "
                f"({self.height}, {self.width})"
            )
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)


def dft2(img: RasterImage) -> SpectralImage:
    """Unitary 2D discrete Fourier transform.

    With the unitary convention the transform preserves the L2 norm
    (Parseval), and ``idft2(dft2(x)) == x`` up to rounding.
    """
    spec = _fft.fft2(img.data, norm="ortho")
    return SpectralImage(spec, img.height, img.width)


def idft2(spec: SpectralImage) -> RasterImage:
    """Inverse unitary 2D DFT; returns the real part.

    For spectra arising from real images under conjugate-symmetric filtering
    the imaginary residue is rounding noise and is discarded.
    """
    out = _fft.ifft2(spec.data, norm="ortho")
    return RasterImage(out.real)


def embed_filter(filt: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad ``filt`` to ``shape`` with its origin tap moved to index (0, 0).

    The origin tap of a (kh, kw) kernel sits at ((kh-1)//2, (kw-1)//2), so odd
    kernels are centered exactly and a 2x2 kernel keeps its (0, 0) entry as
    the origin.
    """
    kh, kw = filt.shape
    h, w = shape
    if kh > h or kw > w:
        raise DimensionError(f"filter shape {filt.shape} exceeds image shape {shape}")
    out = np.zeros(shape)
    out[:kh, :kw] = filt
    return np.roll(out, (-((kh - 1) // 2), -((kw - 1) // 2)), axis=(0, 1))


def convolve_periodic(img: RasterImage, filt: RasterImage) -> RasterImage:
    """Circular convolution of ``img`` with ``filt``, computed spectrally.

    The filter is zero-embedded into the image grid with its origin tap at
    the spatial origin, so convolving with a centered unit impulse is the
    identity.
    """
    kernel = embed_filter(filt.data, img.shape)
    out = _fft.irfft2(_fft.rfft2(img.data) * _fft.rfft2(kernel), s=img.shape)
    return RasterImage(out)


def _to_unit(arr: np.ndarray, maxval: int) -> np.ndarray:
    return arr.astype(np.float64) / float(maxval)


def _read_pgm(path: Path) -> np.ndarray:
    """Minimal binary PGM (P5) reader, 8-bit or 16-bit big-endian."""
    raw = path.read_bytes()
    if not raw.startswith(b"P5"):
        raise UnsupportedFormatError(f"{path}: not a binary PGM (P5) file")
    pos = 2
    fields = []
    while len(fields) < 3:
        # skip whitespace and comment lines between header tokens
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise CorruptFileError(f"{path}: truncated PGM header")
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise CorruptFileError(f"{path}: malformed PGM header") from exc
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise CorruptFileError(f"{path}: invalid PGM dimensions or maxval")
    count = width * height
    if maxval < 256:
        expect = count
        fmt = np.uint8
    else:
        expect = 2 * count
        fmt = ">u2"
    body = raw[pos : pos + expect]
    if len(body) != expect:
        raise CorruptFileError(f"{path}: PGM pixel data truncated")
    pixels = np.frombuffer(body, dtype=fmt).reshape(height, width)
    return _to_unit(pixels, maxval)


def load_image(path) -> RasterImage:
    """Load an 8/16-bit grayscale PNG or binary PGM; map samples to [0, 1].

    RGB(A) PNG inputs are converted to luminance with the fixed weights
    0.299/0.587/0.114.
    """
    path = Path(path)
    try:
        raw_head = path.open("rb").read(2)
    except OSError as exc:
        raise ImageIOError(f"cannot read {path}: {exc}") from exc
    if raw_head == b"P5":
        return RasterImage(_read_pgm(path))
    try:
        with _PILImage.open(path) as im:
            if im.format != "PNG":
                raise UnsupportedFormatError(
                    f"{path}: unsupported format {im.format!r} (PNG or PGM expected)"
                )
            im.load()
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.uint16)
                return RasterImage(_to_unit(arr, 65535))
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
                return RasterImage(_to_unit(arr, 255))
            if im.mode in ("RGB", "RGBA"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                luma = (
                    _LUMA_WEIGHTS[0] * rgb[:, :, 0]
                    + _LUMA_WEIGHTS[1] * rgb[:, :, 1]
                    + _LUMA_WEIGHTS[2] * rgb[:, :, 2]
                )
                return RasterImage(luma)
            raise UnsupportedFormatError(f"{path}: unsupported PNG mode {im.mode!r}")
    except UnidentifiedImageError as exc:
        raise CorruptFileError(f"{path}: cannot decode image") from exc
    except OSError as exc:
        raise CorruptFileError(f"{path}: truncated or corrupt image: {exc}") from exc


def save_image(img: RasterImage, path) -> None:
    """Clamp to [0, 1], quantize to 16 bits, write a grayscale PNG.

    The save/load roundtrip error is at most 1/65535 per pixel.
    """
    clipped = np.clip(img.data, 0.0, 1.0)
    quant = np.round(clipped * 65535.0).astype(np.uint16)
    pil = _PILImage.fromarray(quant, mode="I;16")
    try:
        pil.save(Path(path), format="PNG")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc
