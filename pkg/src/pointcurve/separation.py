"""Block-relaxation solver splitting an image into point and curve parts.

The reduced problem penalizes the l1 norm of the analysis coefficients of
each component in its own dictionary (undecimated wavelets for points,
shift-invariant shearlets for curves) plus a quadratic residual term.  It is
solved by alternating analysis-side soft thresholding with a decreasing
threshold: each sweep re-expands component-plus-residual in one dictionary,
shrinks the penalized planes, and reconstructs.  Lowpass planes are never
thresholded.

Because the two frames have different frame bounds, a single threshold would
penalize them unequally; a cross-dictionary calibration factor rho, estimated
once from the top analysis magnitudes of the input, scales the shearlet-side
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import RasterImage
from .shearlets import (
    ShearletCoefficients,
    ShearletSpec,
    build_filter_bank,
    compute_dual_bank,
    shearlet_forward,
    shearlet_inverse,
)
from .subband import DEFAULT_WEIGHTS, build_subband_family, preprocess
from .wavelets import WaveletCoefficients, WaveletSpec, uwt_forward, uwt_inverse


class SolverError(Exception):
    """Invalid solver configuration."""


class NumericError(Exception):
    """Non-finite values produced during iteration."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


def soft_threshold(values, lam: float):
    """Componentwise sign(c) * max(|c| - lam, 0)."""
    if lam < 0:
        raise SolverError(f"threshold must be >= 0, got {lam}")
    arr = np.asarray(values, dtype=np.float64)
    out = np.sign(arr) * np.maximum(np.abs(arr) - lam, 0.0)
    if np.isscalar(values) or arr.ndim == 0:
        return float(out)
    return out


def threshold_schedule(lambda_max: float, lambda_min: float, iterations: int,
                       kind: str = "linear") -> list[float]:
    """Non-increasing thresholds from lambda_max down to lambda_min.

    Linear schedules are arithmetic, exponential ones geometric with the
    endpoint floored at 1e-12.  A single iteration uses lambda_max alone.
    """
    if iterations < 1:
        raise SolverError(f"iterations must be >= 1, got {iterations}")
    if lambda_min < 0 or lambda_max < lambda_min:
        raise SolverError(
            f"need lambda_max >= lambda_min >= 0, got {lambda_max}, {lambda_min}"
        )
    if iterations == 1:
        return [float(lambda_max)]
    if kind == "linear":
        return list(np.linspace(lambda_max, lambda_min, iterations))
    if kind in ("exp", "exponential"):
        lo = max(lambda_min, 1e-12)
        hi = max(lambda_max, lo)
        return list(np.geomspace(hi, lo, iterations))
    raise SolverError(f"unknown schedule kind {kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, threshold schedule endpoints, and dictionary setup."""

    iterations: int = 15
    lambda_max_factor: float = 1.0
    lambda_min: float | None = None  # None: 3 * estimated noise level
    schedule: str = "linear"
    wavelet_levels: int = 4
    shearlet_scales: int = 4
    fan_order: int = 12
    subband_count: int = 3
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    rho: float | None = None  # None: calibrate from the input
    monotone_weights: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise SolverError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 < self.lambda_max_factor <= 1.0:
            raise SolverError(
                f"lambda_max_factor must be in (0, 1], got {self.lambda_max_factor}"
            )
        if self.lambda_min is not None and self.lambda_min < 0:
            raise SolverError(f"lambda_min must be >= 0, got {self.lambda_min}")
        if self.schedule not in ("linear", "exp", "exponential"):
            raise SolverError(f"unknown schedule {self.schedule!r}")
        if self.rho is not None and self.rho <= 0:
            raise SolverError(f"rho must be positive, got {self.rho}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def wavelet_spec(self) -> WaveletSpec:
        return WaveletSpec(levels=self.wavelet_levels)

    def shearlet_spec(self) -> ShearletSpec:
        return ShearletSpec(scales=self.shearlet_scales, fan_order=self.fan_order)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    threshold: float
    residual_norm: float
    l1_wavelet: float
    l1_shearlet: float


@dataclass(frozen=True)
class SeparationResult:
    """Recovered components, residual, and per-iteration diagnostics."""

    points: RasterImage
    curves: RasterImage
    residual: RasterImage
    trace: tuple[IterationRecord, ...]

    def trace_csv(self) -> str:
        lines = ["iteration,lambda,residual_norm,l1_wavelet,l1_shearlet"]
        for r in self.trace:
            lines.append(
                f"{r.iteration},{r.threshold:.12g},{r.residual_norm:.12g},"
                f"{r.l1_wavelet:.12g},{r.l1_shearlet:.12g}"
            )
        return "\n".join(lines) + "\n"


def _threshold_wavelet(coeffs: WaveletCoefficients, lam: float) -> WaveletCoefficients:
    """Shrink detail planes; the approximation plane is not penalized."""
    return WaveletCoefficients(
        coeffs.approximation, soft_threshold(coeffs.details, lam), coeffs.levels
    )


def _threshold_shearlet(coeffs: ShearletCoefficients, lam: float) -> ShearletCoefficients:
    """Shrink directional planes; the lowpass plane is not penalized."""
    planes = coeffs.planes.copy()
    for i, entry in enumerate(coeffs.entries):
        if entry[0] != "lowpass":
            planes[i] = soft_threshold(planes[i], lam)
    return ShearletCoefficients(planes, coeffs.entries)


def estimate_noise_sigma(f: RasterImage, spec: WaveletSpec) -> float:
    """Median absolute deviation of the finest diagonal band over 0.6745."""
    d = uwt_forward(f, spec).finest_diagonal()
    return float(np.median(np.abs(d)) / 0.6745)


def _top_magnitude_median(values: np.ndarray, fraction: float = 0.01) -> float:
    mags = np.abs(values.ravel())
    k = max(int(mags.size * fraction), 1)
    top = np.partition(mags, mags.size - k)[-k:]
    return float(np.median(top))


def calibrate_rho(wavelet_details: np.ndarray, shearlet_dirs: np.ndarray) -> float:
    """Ratio of top-percentile shearlet to wavelet analysis magnitudes."""
    wav = _top_magnitude_median(wavelet_details)
    shear = _top_magnitude_median(shearlet_dirs)
    if wav <= 0 or shear <= 0:
        return 1.0
    return shear / wav


def separate(f_tilde: RasterImage, config: SolverConfig | None = None) -> SeparationResult:
    """Run the alternating-thresholding separation on an already-prepared image."""
    config = config or SolverConfig()
    wspec = config.wavelet_spec()
    sspec = config.shearlet_spec()
    bank = build_filter_bank(f_tilde.shape, sspec)
    dual = compute_dual_bank(bank)

    dir_mask = np.array([e[0] != "lowpass" for e in bank.entries])

    wav0 = uwt_forward(f_tilde, wspec)
    shear0 = shearlet_forward(f_tilde, bank)
    rho = config.rho
    if rho is None:
        rho = calibrate_rho(wav0.details, shear0.planes[dir_mask])

    lam_max = config.lambda_max_factor * max(
        float(np.max(np.abs(wav0.details))),
        float(np.max(np.abs(shear0.planes[dir_mask]))),
    )
    lam_min = config.lambda_min
    if lam_min is None:
        lam_min = 3.0 * estimate_noise_sigma(f_tilde, wspec)
    lam_min = min(lam_min, lam_max)
    lambdas = threshold_schedule(lam_max, lam_min, config.iterations, config.schedule)

    target = f_tilde.data
    points = np.zeros(f_tilde.shape)
    curves = np.zeros(f_tilde.shape)
    trace = []
    for it, lam in enumerate(lambdas, start=1):
        resid = target - points - curves
        wav = uwt_forward(RasterImage(points + resid), wspec)
        wav = _threshold_wavelet(wav, lam)
        points = uwt_inverse(wav, wspec).data

        resid = target - points - curves
        shear = shearlet_forward(RasterImage(curves + resid), bank)
        shear = _threshold_shearlet(shear, lam * rho)
        curves = shearlet_inverse(shear, dual).data

        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(curves))):
            raise NumericError(
                f"non-finite component values at iteration {it}", iteration=it
            )
        resid = target - points - curves
        trace.append(
            IterationRecord(
                iteration=it,
                threshold=float(lam),
                residual_norm=float(np.linalg.norm(resid)),
                l1_wavelet=float(np.sum(np.abs(wav.details))),
                l1_shearlet=float(np.sum(np.abs(shear.planes[dir_mask]))),
            )
        )
    resid = target - points - curves
    return SeparationResult(
        points=RasterImage(points),
        curves=RasterImage(curves),
        residual=RasterImage(resid),
        trace=tuple(trace),
    )


def separate_image(f: RasterImage, config: SolverConfig | None = None,
                   skip_preprocess: bool = False) -> SeparationResult:
    """Subband preprocessing followed by separation; the CLI entry point."""
    config = config or SolverConfig()
    if skip_preprocess:
        return separate(f, config)
    family = build_subband_family(f.shape, config.subband_count)
    f_tilde = preprocess(f, family, config.weights, monotone=config.monotone_weights)
    return separate(f_tilde, config)
