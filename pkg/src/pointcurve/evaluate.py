"""Separation-quality measures and generic error metrics.

The point and curve measures compare Gaussian-smoothed binary masks: the
estimate is binarized at a threshold relative to its own maximum, the ground
truth at half its maximum, and both are smoothed with the same unit-mass
Gaussian before taking a relative L2 difference.  A vanished estimate scores
1 (total miss); rescaling the estimate leaves the measure unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image import RasterImage, DimensionError, convolve_periodic


class MeasureError(Exception):
    """Undefined measure (degenerate ground truth) or bad configuration."""


def default_threshold_grid() -> tuple[float, ...]:
    return tuple(np.round(np.linspace(0.01, 0.99, 99), 10))


@dataclass(frozen=True)
class MeasureConfig:
    """Gaussian smoothing width and the relative-threshold evaluation grid."""

    gaussian_sigma: float = 2.0
    thresholds: tuple[float, ...] = field(default_factory=default_threshold_grid)

    def __post_init__(self):
        if self.gaussian_sigma <= 0:
            raise MeasureError(f"gaussian sigma must be > 0, got {self.gaussian_sigma}")
        t = tuple(float(v) for v in self.thresholds)
        if any(not 0.0 < v < 1.0 for v in t):
            raise MeasureError("thresholds must lie strictly inside (0, 1)")
        object.__setattr__(self, "thresholds", t)

    @property
    def kernel_radius(self) -> int:
        return int(np.ceil(3.0 * self.gaussian_sigma))


def gaussian_kernel(sigma: float) -> RasterImage:
    """Unit-sum 2D Gaussian on a (2r+1) square, r = ceil(3 sigma)."""
    r = int(np.ceil(3.0 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    g1 = np.exp(-0.5 * (x / sigma) ** 2)
    k = np.outer(g1, g1)
    return RasterImage(k / k.sum())


def binarize(img: RasterImage, threshold: float) -> RasterImage:
    """Indicator of pixels with value >= the absolute threshold."""
    return RasterImage((img.data >= threshold).astype(np.float64))


def _smooth(img: RasterImage, cfg: MeasureConfig) -> np.ndarray:
    return convolve_periodic(img, gaussian_kernel(cfg.gaussian_sigma)).data


def _measure(truth: RasterImage, estimate: RasterImage, threshold: float,
             cfg: MeasureConfig) -> float:
    if truth.shape != estimate.shape:
        raise DimensionError(
            f"truth shape {truth.shape} != estimate shape {estimate.shape}"
        )
    if not 0.0 < threshold < 1.0:
        raise MeasureError(f"relative threshold must be in (0, 1), got {threshold}")
    tmax = float(truth.data.max())
    if tmax <= 0:
        raise MeasureError("ground truth is identically zero; measure undefined")
    truth_bin = binarize(truth, 0.5 * tmax)
    ref = _smooth(truth_bin, cfg)
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0:
        raise MeasureError("smoothed ground truth vanished; measure undefined")
    emax = float(estimate.data.max())
    if emax <= 0:
        # vanished estimate: empty mask, total miss
        est = np.zeros(estimate.shape)
    else:
        est = _smooth(binarize(estimate, threshold * emax), cfg)
    return float(np.linalg.norm(ref - est) / ref_norm)


def measure_points(points_true: RasterImage, points_est: RasterImage,
                   threshold: float, cfg: MeasureConfig | None = None) -> float:
    """Relative smoothed-mask error of the recovered point component."""
    return _measure(points_true, points_est, threshold, cfg or MeasureConfig())


def measure_curves(curves_true: RasterImage, curves_est: RasterImage,
                   threshold: float, cfg: MeasureConfig | None = None) -> float:
    """Relative smoothed-mask error of the recovered curve component."""
    return _measure(curves_true, curves_est, threshold, cfg or MeasureConfig())


def measure_over_thresholds(truth: RasterImage, estimate: RasterImage,
                            cfg: MeasureConfig | None = None) -> list[tuple[float, float]]:
    """Evaluate the measure across the configured threshold grid."""
    cfg = cfg or MeasureConfig()
    tmax = float(truth.data.max())
    if tmax <= 0:
        raise MeasureError("ground truth is identically zero; measure undefined")
    ref = _smooth(binarize(truth, 0.5 * tmax), cfg)
    ref_norm = float(np.linalg.norm(ref))
    emax = float(estimate.data.max())
    out = []
    for t in cfg.thresholds:
        if emax <= 0:
            est = np.zeros(truth.shape)
        else:
            est = _smooth(binarize(estimate, t * emax), cfg)
        out.append((float(t), float(np.linalg.norm(ref - est) / ref_norm)))
    return out


PSNR_CAP_DB = 200.0


def psnr(ref: RasterImage, est: RasterImage) -> float:
    """Peak signal-to-noise ratio in dB, capped at 200 for identical inputs."""
    if ref.shape != est.shape:
        raise DimensionError(f"shape mismatch {ref.shape} vs {est.shape}")
    peak = float(ref.data.max())
    if peak <= 0:
        raise MeasureError("reference peak must be positive")
    mse = float(np.mean((ref.data - est.data) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(float(10.0 * np.log10(peak**2 / mse)), PSNR_CAP_DB)
