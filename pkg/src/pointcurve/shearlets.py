"""Shift-invariant digital shearlet transform with compactly supported generators.

The filter bank covers the frequency plane with one lowpass filter plus two
cones of directional filters.  The cone generator at scale j is built on the
working grid as a product of three spectral factors:

  * a 1D wavelet cascade along axis 0 (the band selector),
  * a 1D scaling cascade along axis 1 (the anisotropic lowpass), and
  * a fan filter, a maximally-flat half-band prototype pushed through the
    diamond-to-fan change of variables and dilated so its wedge aperture
    matches the shear spacing of the scale.

Directional filters are obtained by applying the digital shear operator to
the generator (upsample, integer shear on the refined grid, filter and
downsample back); the second cone holds the transposes.  Analysis convolves
the image with every filter at full resolution; synthesis uses dual filters
obtained by deconvolution, dividing each spectrum by the total squared
magnitude response of the bank, which makes reconstruction exact whenever
that total is bounded away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
import scipy.fft as _fft

from .image import RasterImage, DimensionError
from .wavelets import cdf97_filters, response_on_grid

DEFAULT_FAN_ORDER = 12


class ShearletError(Exception):
    """Invalid shearlet specification, shear parameter, or coefficient layout."""


class AdmissibilityError(ShearletError):
    """The bank's total squared response vanishes somewhere.

    Carries the offending frequency bin as ``bin_index`` (row and column DFT
    indices on the working grid).
    """

    def __init__(self, message: str, bin_index: tuple[int, int]):
        super().__init__(message)
        self.bin_index = bin_index


def shear_count(j: int) -> int:
    """Largest shear index at scale j: ceil(2**(j/2))."""
    return int(np.ceil(2.0 ** (j / 2.0)))


def shear_level(j: int) -> int:
    """Dyadic refinement exponent at scale j: ceil(j/2)."""
    return (j + 1) // 2


@dataclass(frozen=True)
class ShearletSpec:
    """Scale count, base 1D filter pair, and fan prototype order."""

    scales: int
    scaling_filter: np.ndarray = field(default_factory=lambda: cdf97_filters()[0])
    wavelet_filter: np.ndarray = field(default_factory=lambda: cdf97_filters()[1])
    fan_order: int = DEFAULT_FAN_ORDER

    def __post_init__(self):
        if self.scales < 1:
            raise ShearletError(f"scales must be >= 1, got {self.scales}")
        if self.fan_order < 1:
            raise ShearletError(f"fan_order must be >= 1, got {self.fan_order}")
        h = np.asarray(self.scaling_filter, dtype=np.float64)
        g = np.asarray(self.wavelet_filter, dtype=np.float64)
        for name, c in (("scaling_filter", h), ("wavelet_filter", g)):
            if c.ndim != 1 or c.size % 2 == 0:
                raise ShearletError(f"{name} must be a 1D odd-length filter")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "scaling_filter", h)
        object.__setattr__(self, "wavelet_filter", g)

    @property
    def shears_per_scale(self) -> tuple[int, ...]:
        return tuple(shear_count(j) for j in range(self.scales))

    def directional_count(self) -> int:
        return sum(2 * (2 * k + 1) for k in self.shears_per_scale)

    def _key(self) -> tuple:
        return (
            self.scales,
            self.fan_order,
            self.scaling_filter.tobytes(),
            self.wavelet_filter.tobytes(),
        )


def maxflat_halfband(y: np.ndarray, order: int) -> np.ndarray:
    """Maximally flat half-band polynomial P(y) with P(y) + P(1-y) = 1.

    Evaluated in the positive-term product form, which is stable for
    y in [0, 1].
    """
    y = np.asarray(y, dtype=np.float64)
    acc = np.zeros_like(y)
    for n in range(order - 1, -1, -1):
        acc = acc * y + comb(order - 1 + n, n)
    return (1.0 - y) ** order * acc


def fan_response(shape: tuple[int, int], order: int, ell: int) -> np.ndarray:
    """Fan filter response on the grid, wedge dilated for refinement level ell.

    The undilated fan passes the cone |xi2| <= |xi1| (value exactly 1/2 on the
    diagonal); dilating the second argument by 2**(ell+1) narrows the wedge
    aperture to about 2**-(ell+1).
    """
    if ell < 0:
        raise ShearletError(f"ell must be >= 0, got {ell}")
    xi1 = 2.0 * np.pi * np.fft.fftfreq(shape[0])
    xi2 = 2.0 * np.pi * np.fft.fftfreq(shape[1]) * float(2 ** (ell + 1))
    y = (2.0 + np.cos(xi1)[:, None] - np.cos(xi2)[None, :]) / 4.0
    return maxflat_halfband(y, order)


def build_fan_filter(
    order: int, ell: int, shape: tuple[int, int] = (64, 64)
) -> RasterImage:
    """Spatial realization of the fan filter on a working grid.

    The coefficients are real and finitely supported (a trigonometric
    polynomial of the grid frequencies); the grid must be large enough to
    hold that support without wraparound for the coefficients to be exact.
    """
    resp = fan_response(shape, order, ell)
    spatial = _fft.irfft2(resp[:, : shape[1] // 2 + 1], s=shape)
    return RasterImage(spatial)


def _cascade_lowpass(base: np.ndarray, depth: int, n: int) -> np.ndarray:
    """Product of base responses at dyadically dilated arguments, depth terms."""
    out = np.ones(n)
    idx = np.arange(n)
    for i in range(depth):
        out = out * base[(idx * 2**i) % n]
    return out


def _cascade_band(h_base: np.ndarray, g_base: np.ndarray, depth: int, n: int) -> np.ndarray:
    """Level-``depth`` bandpass response of the a-trous cascade."""
    idx = np.arange(n)
    out = g_base[(idx * 2 ** (depth - 1)) % n]
    for i in range(depth - 1):
        out = out * h_base[(idx * 2**i) % n]
    return out


def _base_responses(spec: ShearletSpec, n: int) -> tuple[np.ndarray, np.ndarray]:
    # DC-normalized so cascade products stay O(1)
    h = response_on_grid(spec.scaling_filter / np.sqrt(2.0), n)
    g = response_on_grid(spec.wavelet_filter / np.sqrt(2.0), n)
    return np.real(h), np.real(g)


def generator_spectrum(j: int, spec: ShearletSpec, shape: tuple[int, int]) -> np.ndarray:
    """Frequency response of the unsheared cone generator at scale j.

    Axis 0 carries the wavelet band at cascade depth scales - j, axis 1 the
    scaling cascade at depth scales - ceil(j/2), and the fan factor carves the
    wedge; the result is a real, centrally symmetric response.
    """
    if not 0 <= j < spec.scales:
        raise ShearletError(f"scale {j} out of range 0..{spec.scales - 1}")
    band_depth = spec.scales - j
    low_depth = spec.scales - shear_level(j)
    h0, g0 = _base_responses(spec, shape[0])
    h1, _ = _base_responses(spec, shape[1])
    band = _cascade_band(h0, g0, band_depth, shape[0])
    low = _cascade_lowpass(h1, low_depth, shape[1])
    fan = fan_response(shape, spec.fan_order, shear_level(j))
    return fan * band[:, None] * low[None, :]


def build_shearlet_generator(j: int, spec: ShearletSpec, shape: tuple[int, int]) -> RasterImage:
    """Spatial form of the scale-j generator on the working grid."""
    resp = generator_spectrum(j, spec, shape)
    return RasterImage(_fft.irfft2(resp[:, : shape[1] // 2 + 1], s=shape))


# ---------------------------------------------------------------------------
# digital shear operator


def _as_dyadic(s) -> Fraction:
    frac = Fraction(s).limit_denominator(1 << 12)
    if frac != Fraction(s) or (frac.denominator & (frac.denominator - 1)) != 0:
        raise ShearletError(
            f"shear {s!r} is not representable as k / 2**L with L <= 12"
        )
    return frac


def interpolation_kernel(h: np.ndarray, level: int) -> np.ndarray:
    """A-trous interpolation kernel for dyadic upsampling by 2**level.

    Built by cascading the DC-gain-2 scaling kernel; the full kernel has DC
    gain 2**level and unit polyphase sums, so constants interpolate exactly.
    """
    q = np.asarray(h, dtype=np.float64) * np.sqrt(2.0)
    out = q.copy()
    for i in range(1, level):
        up = np.zeros((q.size - 1) * 2**i + 1)
        up[:: 2**i] = q
        out = np.convolve(out, up)
    return out


def _signed_coords(n: int) -> np.ndarray:
    """Signed periodic coordinates (0, 1, .., n/2-1, -n/2, .., -1)."""
    c = np.arange(n)
    return np.where(c < (n + 1) // 2, c, c - n)


def _conv_axis0(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Circular convolution along axis 0 with a centered odd-length kernel."""
    n = arr.shape[0]
    emb = np.zeros(n)
    half = kernel.size // 2
    idx = (np.arange(kernel.size) - half) % n
    np.add.at(emb, idx, kernel)
    return _fft.irfft(
        _fft.rfft(arr, axis=0) * _fft.rfft(emb)[:, None], n=n, axis=0
    )


def digital_shear(filt: RasterImage, s) -> RasterImage:
    """Resample a filter along axis 0 with the column-dependent shift s * n2.

    ``s`` must be a dyadic rational k / 2**L.  Integer shears are exact
    circular shifts; fractional shears refine axis 0 by the (reduced)
    denominator with the a-trous interpolation kernel, apply the integer
    shear on the refined grid, then filter and downsample back.  Column
    coordinates n2 are signed periodic, so the filter origin stays fixed.
    """
    frac = _as_dyadic(s)
    if abs(frac) > 2:
        raise ShearletError(f"shear magnitude {float(frac):g} out of range (<= 2)")
    data = filt.data
    n0, n1 = data.shape
    cols = _signed_coords(n1)
    if frac.denominator == 1:
        k = frac.numerator
        rows = np.arange(n0)[:, None]
        src = (rows - k * cols[None, :]) % n0
        return RasterImage(data[src, np.arange(n1)[None, :]])

    level = int(frac.denominator.bit_length() - 1)
    up_factor = frac.denominator
    k = frac.numerator
    h, _ = cdf97_filters()
    kernel = interpolation_kernel(h, level)

    refined = np.zeros((n0 * up_factor, n1))
    refined[::up_factor] = data
    refined = _conv_axis0(refined, kernel)
    rows = np.arange(n0 * up_factor)[:, None]
    src = (rows - k * cols[None, :]) % (n0 * up_factor)
    sheared = refined[src, np.arange(n1)[None, :]]
    sheared = _conv_axis0(sheared, kernel[::-1] / up_factor)
    return RasterImage(sheared[::up_factor])


# ---------------------------------------------------------------------------
# filter bank

LOWPASS = ("lowpass",)


@dataclass(frozen=True)
class ShearletFilterBank:
    """All analysis (or dual) filters of one system at a fixed working size.

    ``entries[i]`` is either ``("lowpass",)`` or ``("dir", j, k, cone)`` with
    cone "h" or "v"; ``spectra[i]`` is the filter's rfft2 response and
    ``total_sq`` the bankwide sum of squared magnitudes on that grid.
    """

    shape: tuple[int, int]
    spec: ShearletSpec
    entries: tuple[tuple, ...]
    spectra: np.ndarray
    total_sq: np.ndarray
    spatial: np.ndarray | None = None
    is_dual: bool = False

    @property
    def size(self) -> int:
        return len(self.entries)

    def entry_index(self, entry: tuple) -> int:
        return self.entries.index(entry)

    def spatial_filter(self, i: int) -> RasterImage:
        if self.spatial is not None:
            return RasterImage(self.spatial[i])
        return RasterImage(_fft.irfft2(self.spectra[i], s=self.shape))

    def frame_ratio(self) -> float:
        """Max-over-min of the total squared response (frame-bound diagnostic)."""
        return float(self.total_sq.max() / self.total_sq.min())


def _half_to_full_index(shape, flat_idx) -> tuple[int, int]:
    ncols = shape[1] // 2 + 1
    return (int(flat_idx // ncols), int(flat_idx % ncols))


def _check_scales(spec: ShearletSpec, shape: tuple[int, int]) -> None:
    need = 2**spec.scales * spec.scaling_filter.size
    if min(shape) < need:
        raise DimensionError(
            f"shape {shape} too small for {spec.scales} shearlet scales "
            f"(needs min dimension >= {need})"
        )


@lru_cache(maxsize=4)
def _build_bank_cached(spec_key: tuple, shape: tuple[int, int],
                       h_bytes: bytes, g_bytes: bytes) -> ShearletFilterBank:
    spec = ShearletSpec(
        scales=spec_key[0],
        scaling_filter=np.frombuffer(h_bytes).copy(),
        wavelet_filter=np.frombuffer(g_bytes).copy(),
        fan_order=spec_key[1],
    )
    n0, n1 = shape
    ncols = n1 // 2 + 1
    entries: list[tuple] = [LOWPASS]
    h0, _ = _base_responses(spec, n0)
    h1, _ = _base_responses(spec, n1)
    low_resp = (
        _cascade_lowpass(h0, spec.scales, n0)[:, None]
        * _cascade_lowpass(h1, spec.scales, n1)[None, :]
    )
    spatial = [_fft.irfft2(low_resp[:, :ncols], s=shape)]
    for j in range(spec.scales):
        gen = build_shearlet_generator(j, spec, shape)
        denom = 2 ** shear_level(j)
        kmax = shear_count(j)
        horiz = [
            digital_shear(gen, Fraction(k, denom)).data for k in range(-kmax, kmax + 1)
        ]
        for k, filt in zip(range(-kmax, kmax + 1), horiz):
            entries.append(("dir", j, k, "h"))
            spatial.append(filt)
        for k, filt in zip(range(-kmax, kmax + 1), horiz):
            entries.append(("dir", j, k, "v"))
            spatial.append(np.ascontiguousarray(filt.T))
    spatial_arr = np.stack(spatial)
    spectra = np.empty((len(entries), n0, ncols), dtype=np.complex128)
    for i in range(len(entries)):
        spectra[i] = _fft.rfft2(spatial_arr[i])
    total_sq = np.sum(np.abs(spectra) ** 2, axis=0)
    floor = 1e-6 * float(total_sq.max())
    if float(total_sq.min()) < floor:
        flat = int(np.argmin(total_sq))
        bin_index = _half_to_full_index(shape, flat)
        raise AdmissibilityError(
            f"total squared response {total_sq.min():.3e} below admissibility "
            f"floor {floor:.3e} at frequency bin {bin_index}",
            bin_index,
        )
    return ShearletFilterBank(
        shape=shape,
        spec=spec,
        entries=tuple(entries),
        spectra=spectra,
        total_sq=total_sq,
        spatial=spatial_arr,
    )


def build_filter_bank(shape: tuple[int, int], spec: ShearletSpec) -> ShearletFilterBank:
    """Construct and validate the full filter bank at an image size.

    Banks are cached by (spec, shape); they are immutable and safe to share.
    """
    _check_scales(spec, shape)
    return _build_bank_cached(
        (spec.scales, spec.fan_order),
        tuple(shape),
        spec.scaling_filter.tobytes(),
        spec.wavelet_filter.tobytes(),
    )


def compute_dual_bank(bank: ShearletFilterBank) -> ShearletFilterBank:
    """Deconvolution duals: each spectrum divided by the total squared response."""
    if float(bank.total_sq.min()) < 1e-12:
        flat = int(np.argmin(bank.total_sq))
        raise AdmissibilityError(
            "bank is not admissible for deconvolution "
            f"(total response {bank.total_sq.min():.3e} at bin "
            f"{_half_to_full_index(bank.shape, flat)})",
            _half_to_full_index(bank.shape, flat),
        )
    dual_spectra = bank.spectra / bank.total_sq[None, :, :]
    return ShearletFilterBank(
        shape=bank.shape,
        spec=bank.spec,
        entries=bank.entries,
        spectra=dual_spectra,
        total_sq=bank.total_sq,
        spatial=None,
        is_dual=True,
    )


@dataclass(frozen=True)
class ShearletCoefficients:
    """One full-size coefficient plane per filter, indexed like the bank."""

    planes: np.ndarray
    entries: tuple[tuple, ...]

    def __post_init__(self):
        if self.planes.ndim != 3 or self.planes.shape[0] != len(self.entries):
            raise ShearletError(
                f"coefficient stack shape {self.planes.shape} does not match "
                f"{len(self.entries)} filters"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes.shape[1:]

    def plane(self, entry: tuple) -> np.ndarray:
        return self.planes[self.entries.index(entry)]


def shearlet_forward(img: RasterImage, bank: ShearletFilterBank) -> ShearletCoefficients:
    """Analysis: inner products with every translated bank filter."""
    if img.shape != bank.shape:
        raise DimensionError(
            f"image shape {img.shape} does not match bank size {bank.shape}"
        )
    f_hat = _fft.rfft2(img.data)
    planes = np.empty((bank.size, *bank.shape))
    for i in range(bank.size):
        planes[i] = _fft.irfft2(f_hat * np.conj(bank.spectra[i]), s=bank.shape)
    return ShearletCoefficients(planes, bank.entries)


def shearlet_inverse(coeffs: ShearletCoefficients, dual: ShearletFilterBank) -> RasterImage:
    """Synthesis: sum of coefficient planes convolved with the dual filters."""
    if not dual.is_dual:
        raise ShearletError("synthesis requires a dual bank (see compute_dual_bank)")
    if coeffs.entries != dual.entries:
        raise ShearletError("coefficient indexing does not match the dual bank")
    if coeffs.shape != dual.shape:
        raise DimensionError(
            f"coefficient shape {coeffs.shape} does not match bank size {dual.shape}"
        )
    acc = np.zeros((dual.shape[0], dual.shape[1] // 2 + 1), dtype=np.complex128)
    for i in range(dual.size):
        acc += _fft.rfft2(coeffs.planes[i]) * dual.spectra[i]
    return RasterImage(_fft.irfft2(acc, s=dual.shape))


def shearlet_adjoint(coeffs: ShearletCoefficients, bank: ShearletFilterBank) -> RasterImage:
    """Adjoint of :func:`shearlet_forward` (synthesis with the primal filters)."""
    if coeffs.entries != bank.entries:
        raise ShearletError("coefficient indexing does not match the bank")
    acc = np.zeros((bank.shape[0], bank.shape[1] // 2 + 1), dtype=np.complex128)
    for i in range(bank.size):
        acc += _fft.rfft2(coeffs.planes[i]) * bank.spectra[i]
    return RasterImage(_fft.irfft2(acc, s=bank.shape))
