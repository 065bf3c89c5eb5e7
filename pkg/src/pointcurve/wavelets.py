"""Shift-invariant (undecimated) 2D wavelet frame.

The transform is the a-trous cascade: at level j the 1D analysis filters are
upsampled by 2**(j-1) and applied separably along rows and columns, with no
subsampling, so every output plane keeps the input resolution.  A J-level
decomposition of one image yields 3*J + 1 planes.

Analysis uses a (scaling, wavelet) pair (h, g); the synthesis pair is derived
by modulation, ht(n) = (-1)**n * g(n) and gt(n) = (-1)**n * h(n), which for
complementary half-band designs satisfies the no-distortion identity

    conj(H(xi)) * Ht(xi) + conj(G(xi)) * Gt(xi) = 2

at every frequency.  The identity is verified numerically when a spec is
built; synthesis divides by 2 per dimension per level so the roundtrip has
unit gain.  The default pair is the symmetric biorthogonal 9/7 pair, computed
to machine precision from its closed-form factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

from .image import RasterImage, DimensionError

ORIENTATIONS = ("horizontal", "vertical", "diagonal")


class WaveletError(Exception):
    """Invalid wavelet specification or coefficient layout."""


def _poly_conv(*vecs):
    out = np.array([1.0])
    for v in vecs:
        out = np.convolve(out, np.asarray(v, dtype=np.float64))
    return out


def cdf97_filters() -> tuple[np.ndarray, np.ndarray]:
    """Analysis (scaling, wavelet) pair of the 9/7 biorthogonal design.

    Built from the cubic factor of the degree-4 maximally flat half-band
    polynomial: the real root goes to the 7-tap factor, the complex pair to
    the 9-tap factor.  Both filters are symmetric about their center tap and
    normalized to sum sqrt(2).
    """
    # q(y) = 1 + 4y + 10y^2 + 20y^3, y = sin^2(xi/2)
    roots = np.roots([20.0, 10.0, 4.0, 1.0])
    real_mask = np.abs(roots.imag) < 1e-12
    y_r = float(roots[real_mask][0].real)
    y_c = roots[~real_mask][0]

    cos2 = [0.25, 0.5, 0.25]    # cos^2(xi/2)
    sin2 = [-0.25, 0.5, -0.25]  # sin^2(xi/2)

    # 7-tap: sqrt(2) * cos^4 * (y - y_r) / (-y_r)
    h7 = np.sqrt(2.0) / (-y_r) * _poly_conv(cos2, cos2, [-0.25, 0.5 - y_r, -0.25])

    # 9-tap: sqrt(2) * cos^4 * (y^2 - 2 Re(y_c) y + |y_c|^2) / |y_c|^2
    mod2 = float(np.abs(y_c) ** 2)
    quad = _poly_conv(sin2, sin2)
    quad[1:4] += -2.0 * y_c.real * np.asarray(sin2)
    quad[2] += mod2
    h9 = np.sqrt(2.0) / mod2 * _poly_conv(cos2, cos2, quad)

    g7 = modulate(h7)  # wavelet filter paired with the 9-tap scaling filter
    return h9, g7


def modulate(c: np.ndarray) -> np.ndarray:
    """Multiply a centered filter by (-1)**n, n counted from the center tap."""
    c = np.asarray(c, dtype=np.float64)
    n = np.arange(c.size) - (c.size // 2)
    return c * np.where(n % 2 == 0, 1.0, -1.0)


def response_on_grid(coeffs: np.ndarray, n: int) -> np.ndarray:
    """DTFT of a centered odd-length filter sampled at the n DFT frequencies.

    Returns a real array when the filter is symmetric about its center.
    """
    coeffs = np.asarray(coeffs, dtype=np.float64)
    offsets = np.arange(coeffs.size) - (coeffs.size // 2)
    m = np.arange(n)
    resp = np.exp(-2j * np.pi * np.outer(m, offsets) / n) @ coeffs
    if np.allclose(coeffs, coeffs[::-1], rtol=0.0, atol=1e-14):
        return resp.real.copy()
    return resp


@dataclass(frozen=True)
class WaveletSpec:
    """Decomposition depth plus the 1D analysis filter pair.

    Filters must have odd length and are indexed symmetrically around their
    center tap.  The scaling filter must sum to sqrt(2); the derived synthesis
    pair must reconstruct the undecimated scheme exactly (checked at build
    time on a dense frequency grid).
    """

    levels: int
    scaling_filter: np.ndarray = field(default_factory=lambda: cdf97_filters()[0])
    wavelet_filter: np.ndarray = field(default_factory=lambda: cdf97_filters()[1])

    def __post_init__(self):
        if self.levels < 1:
            raise WaveletError(f"levels must be >= 1, got {self.levels}")
        h = np.asarray(self.scaling_filter, dtype=np.float64)
        g = np.asarray(self.wavelet_filter, dtype=np.float64)
        for name, c in (("scaling_filter", h), ("wavelet_filter", g)):
            if c.ndim != 1 or c.size % 2 == 0:
                raise WaveletError(f"{name} must be a 1D odd-length filter")
        if abs(h.sum() - np.sqrt(2.0)) > 1e-10:
            raise WaveletError(
                f"scaling filter must sum to sqrt(2), got {h.sum():.12g}"
            )
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "scaling_filter", h)
        object.__setattr__(self, "wavelet_filter", g)
        err = self._reconstruction_defect()
        if err > 1e-10:
            raise WaveletError(
                f"filter pair fails perfect reconstruction (defect {err:.3e})"
            )

    @property
    def synthesis_scaling(self) -> np.ndarray:
        return modulate(self.wavelet_filter)

    @property
    def synthesis_wavelet(self) -> np.ndarray:
        return modulate(self.scaling_filter)

    def _reconstruction_defect(self, n: int = 1024) -> float:
        ha = response_on_grid(self.scaling_filter, n)
        ga = response_on_grid(self.wavelet_filter, n)
        hs = response_on_grid(self.synthesis_scaling, n)
        gs = response_on_grid(self.synthesis_wavelet, n)
        ident = np.conj(ha) * hs + np.conj(ga) * gs
        return float(np.max(np.abs(ident - 2.0)))

    def _key(self) -> tuple:
        return (self.levels, self.scaling_filter.tobytes(), self.wavelet_filter.tobytes())


@dataclass(frozen=True)
class WaveletCoefficients:
    """Full-resolution planes of an undecimated decomposition.

    ``details`` has shape (3*J, H, W) ordered coarse-to-fine is not assumed:
    plane 3*(j-1) + o holds level j (1-based, fine to coarse) and orientation
    o in the order horizontal, vertical, diagonal.  ``approximation`` is the
    level-J lowpass plane.
    """

    approximation: np.ndarray
    details: np.ndarray
    levels: int

    def __post_init__(self):
        a = np.asarray(self.approximation, dtype=np.float64)
        d = np.asarray(self.details, dtype=np.float64)
        if d.ndim != 3 or d.shape[0] != 3 * self.levels:
            raise WaveletError(
                f"expected {3 * self.levels} detail planes, got shape {d.shape}"
            )
        if a.shape != d.shape[1:]:
            raise WaveletError("approximation and detail plane shapes differ")
        object.__setattr__(self, "approximation", a)
        object.__setattr__(self, "details", d)

    @property
    def plane_count(self) -> int:
        return 3 * self.levels + 1

    def detail(self, level: int, orientation: str) -> np.ndarray:
        """Detail plane for 1-based level and orientation name."""
        if not 1 <= level <= self.levels:
            raise WaveletError(f"level {level} out of range 1..{self.levels}")
        return self.details[3 * (level - 1) + ORIENTATIONS.index(orientation)]

    def finest_diagonal(self) -> np.ndarray:
        return self.detail(1, "diagonal")


@lru_cache(maxsize=8)
def _plan(spec_key: tuple, shape: tuple[int, int], h_bytes: bytes, g_bytes: bytes):
    """Per-(spec, shape) spectral responses for every level and axis."""
    levels = spec_key[0]
    h = np.frombuffer(h_bytes).copy()
    g = np.frombuffer(g_bytes).copy()
    hs = modulate(g)
    gs = modulate(h)
    out = {"analysis": [], "synthesis": []}
    base = {}
    for axis, n in enumerate(shape):
        base[axis] = {
            "h": response_on_grid(h, n),
            "g": response_on_grid(g, n),
            "hs": response_on_grid(hs, n),
            "gs": response_on_grid(gs, n),
        }
    ncols = shape[1] // 2 + 1  # rfft grid along axis 1
    for level in range(1, levels + 1):
        step = 2 ** (level - 1)
        per = {}
        for name in ("h", "g", "hs", "gs"):
            row = base[0][name][(np.arange(shape[0]) * step) % shape[0]]
            col = base[1][name][(np.arange(ncols) * step) % shape[1]]
            per[name] = (row[:, None], col[None, :])
        out["analysis"].append(
            {
                "hh": np.conj(per["h"][0] * per["h"][1]),
                "gh": np.conj(per["g"][0] * per["h"][1]),
                "hg": np.conj(per["h"][0] * per["g"][1]),
                "gg": np.conj(per["g"][0] * per["g"][1]),
            }
        )
        # synthesis responses carry the 1/2-per-dimension gain fold
        out["synthesis"].append(
            {
                "hh": per["hs"][0] * per["hs"][1] / 4.0,
                "gh": per["gs"][0] * per["hs"][1] / 4.0,
                "hg": per["hs"][0] * per["gs"][1] / 4.0,
                "gg": per["gs"][0] * per["gs"][1] / 4.0,
            }
        )
    return out


def _get_plan(spec: WaveletSpec, shape: tuple[int, int]):
    return _plan(
        (spec.levels,),
        shape,
        spec.scaling_filter.tobytes(),
        spec.wavelet_filter.tobytes(),
    )


def _check_size(spec: WaveletSpec, shape: tuple[int, int]) -> None:
    need = 2**spec.levels * spec.scaling_filter.size
    if min(shape) < need:
        raise DimensionError(
            f"image of shape {shape} too small for {spec.levels} levels "
            f"(needs min dimension >= {need})"
        )


def uwt_forward(img: RasterImage, spec: WaveletSpec) -> WaveletCoefficients:
    """Undecimated wavelet analysis of an image.

    Coefficients follow the correlation convention: each plane is the inner
    product of the image with the translated analysis filter.
    """
    _check_size(spec, img.shape)
    plan = _get_plan(spec, img.shape)
    spec_hat = _fft.rfft2(img.data)
    details = np.empty((3 * spec.levels, *img.shape))
    for level in range(1, spec.levels + 1):
        resp = plan["analysis"][level - 1]
        base = 3 * (level - 1)
        details[base + 0] = _fft.irfft2(spec_hat * resp["gh"], s=img.shape)
        details[base + 1] = _fft.irfft2(spec_hat * resp["hg"], s=img.shape)
        details[base + 2] = _fft.irfft2(spec_hat * resp["gg"], s=img.shape)
        spec_hat = spec_hat * resp["hh"]
    approx = _fft.irfft2(spec_hat, s=img.shape)
    return WaveletCoefficients(approx, details, spec.levels)


def uwt_inverse(coeffs: WaveletCoefficients, spec: WaveletSpec) -> RasterImage:
    """Exact inverse of :func:`uwt_forward` for the same spec."""
    if coeffs.levels != spec.levels:
        raise WaveletError(
            f"coefficients carry {coeffs.levels} levels, spec has {spec.levels}"
        )
    shape = coeffs.approximation.shape
    _check_size(spec, shape)
    plan = _get_plan(spec, shape)
    acc = _fft.rfft2(coeffs.approximation)
    for level in range(spec.levels, 0, -1):
        resp = plan["synthesis"][level - 1]
        base = 3 * (level - 1)
        acc = (
            acc * resp["hh"]
            + _fft.rfft2(coeffs.details[base + 0]) * resp["gh"]
            + _fft.rfft2(coeffs.details[base + 1]) * resp["hg"]
            + _fft.rfft2(coeffs.details[base + 2]) * resp["gg"]
        )
    return RasterImage(_fft.irfft2(acc, s=shape))
