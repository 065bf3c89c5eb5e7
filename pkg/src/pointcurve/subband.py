"""Radial bandpass family and weighted-recomposition preprocessing.

The family (F_0 .. F_L) partitions the frequency plane radially: F_0 is a
lowpass, F_1 .. F_L occupy dyadic annuli, and the top band extends to the
Nyquist corner.  Transitions use the classic smooth ramp built from
nu(t) = t^4 (35 - 84 t + 70 t^2 - 20 t^3) blended as sin/cos pairs, so the
squared responses sum to one at every frequency bin by construction and

    f = sum_j F_j * (F_j * f)

holds exactly.  Applying weights to the recomposition suppresses low
frequencies before separation; with the default (0, 0.1, 0.7, 0.7) the DC bin
of the output is exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

from .image import RasterImage, DimensionError


class SubbandError(Exception):
    """Invalid subband family, weight vector, or size mismatch."""


DEFAULT_WEIGHTS = (0.0, 0.1, 0.7, 0.7)


def _meyer_ramp(t: np.ndarray) -> np.ndarray:
    """Smooth 0-to-1 ramp on [0, 1] with vanishing derivatives at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35.0 - 84.0 * t + 70.0 * t**2 - 20.0 * t**3)


def _radial_grid(shape: tuple[int, int]) -> np.ndarray:
    fy = 2.0 * np.pi * np.fft.fftfreq(shape[0])
    fx = 2.0 * np.pi * np.fft.fftfreq(shape[1])
    return np.hypot(fy[:, None], fx[None, :])


@dataclass(frozen=True)
class SubbandFamily:
    """L+1 radial spectral windows on a working grid, squares summing to 1."""

    shape: tuple[int, int]
    bands: int  # L
    responses: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.responses) != self.bands + 1:
            raise SubbandError(
                f"expected {self.bands + 1} responses, got {len(self.responses)}"
            )
        total = sum(r**2 for r in self.responses)
        defect = float(np.max(np.abs(total - 1.0)))
        if defect > 1e-10:
            raise SubbandError(f"squared responses do not sum to 1 (defect {defect:.3e})")


def build_subband_family(shape: tuple[int, int], bands: int) -> SubbandFamily:
    """Construct the radial family for an image shape with L = ``bands``.

    Band j (1-based) is supported on the annulus [pi/2**(L-j+1), pi/2**(L-j-1)]
    with smooth complementary transitions; the top band continues at unit gain
    out to the Nyquist corner and F_0 is the complementary lowpass.
    """
    if bands < 1:
        raise SubbandError(f"bands must be >= 1, got {bands}")
    if min(shape) < 2 ** (bands + 1):
        raise SubbandError(f"shape {shape} too small for {bands} dyadic bands")
    rho = _radial_grid(shape)
    # transition shells [c/2, c] for cutoffs c = pi/2**(L-j), j = 1..L
    cuts = [np.pi / 2 ** (bands - j) for j in range(1, bands + 1)]

    def rise(c):
        t = _meyer_ramp(np.log2(np.maximum(rho, 1e-300) / (c / 2.0)))
        return np.sin(0.5 * np.pi * t)

    def fall(c):
        t = _meyer_ramp(np.log2(np.maximum(rho, 1e-300) / (c / 2.0)))
        return np.cos(0.5 * np.pi * t)

    responses = []
    lowpass = fall(cuts[0])
    responses.append(lowpass)
    for j in range(1, bands + 1):
        r = rise(cuts[j - 1])
        if j < bands:
            r = r * fall(cuts[j])
        responses.append(r)
    fam = SubbandFamily(shape, bands, tuple(responses))
    return fam


def _check_match(img: RasterImage, family: SubbandFamily) -> None:
    if img.shape != family.shape:
        raise DimensionError(
            f"image shape {img.shape} does not match family grid {family.shape}"
        )


def decompose(img: RasterImage, family: SubbandFamily) -> list[RasterImage]:
    """Band pieces f_j obtained by filtering once with each F_j."""
    _check_match(img, family)
    spec = _fft.fft2(img.data)
    return [
        RasterImage(_fft.ifft2(spec * r).real) for r in family.responses
    ]


def recompose(pieces: list[RasterImage], family: SubbandFamily) -> RasterImage:
    """Second filtering pass: sum of F_j * f_j, the exact inverse of decompose."""
    if len(pieces) != family.bands + 1:
        raise SubbandError(
            f"expected {family.bands + 1} pieces, got {len(pieces)}"
        )
    acc = np.zeros(family.shape, dtype=np.complex128)
    for piece, r in zip(pieces, family.responses):
        _check_match(piece, family)
        acc += _fft.fft2(piece.data) * r
    return RasterImage(_fft.ifft2(acc).real)


def check_weights(weights, bands: int, monotone: bool = False) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size != bands + 1:
        raise SubbandError(f"need {bands + 1} weights, got {w.size}")
    if np.any(w < 0.0):
        raise SubbandError("weights must be nonnegative")
    if monotone and np.any(np.diff(w) < 0.0):
        raise SubbandError("weights must be non-decreasing across bands")
    return w


def preprocess(
    img: RasterImage,
    family: SubbandFamily,
    weights,
    monotone: bool = False,
) -> RasterImage:
    """Weighted recomposition sum_j w_j * (F_j * f_j) with f_j = F_j * f.

    All-ones weights reproduce the input; a zero first weight removes the DC
    component exactly.
    """
    _check_match(img, family)
    w = check_weights(weights, family.bands, monotone=monotone)
    spec = _fft.fft2(img.data)
    total = np.zeros(family.shape)
    for wj, r in zip(w, family.responses):
        total += wj * r**2
    return RasterImage(_fft.ifft2(spec * total).real)
