"""Synthetic phantoms: point fields, curve drawings, and noisy composites.

The point model places inverse-3/2-power intensity profiles at chosen
locations, clamped inside a core radius so the pole is representable on a
pixel grid.  The curve model rasterizes closed parametric curves (circles,
ellipses, closed cubic splines) by dense arc-length sampling with bilinear
deposition, so a curve behaves like a line measure: its deposited mass is
intensity times arc length.  Both generators are deterministic; noise is
Gaussian and reproducible under a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .image import RasterImage


class SceneError(Exception):
    """Invalid phantom geometry."""


@dataclass(frozen=True)
class PointSceneSpec:
    """Point sources: (x, y) pixel positions, per-point amplitude, core radius."""

    positions: tuple[tuple[float, float], ...]
    amplitudes: tuple[float, ...] | None = None
    clamp_radius: float = 1.0

    def __post_init__(self):
        if self.clamp_radius < 0.5:
            raise SceneError(f"clamp radius must be >= 0.5 px, got {self.clamp_radius}")
        pos = tuple((float(x), float(y)) for x, y in self.positions)
        if self.amplitudes is None:
            amp = tuple(1.0 for _ in pos)
        else:
            amp = tuple(float(a) for a in self.amplitudes)
        if len(amp) != len(pos):
            raise SceneError("one amplitude per point required")
        if any(a <= 0 for a in amp):
            raise SceneError("point amplitudes must be positive")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "amplitudes", amp)

    def validate_bounds(self, size: tuple[int, int]) -> None:
        h, w = size
        for x, y in self.positions:
            if not (0 <= x < w and 0 <= y < h):
                raise SceneError(f"point ({x}, {y}) outside {w}x{h} image")


@dataclass(frozen=True)
class Curve:
    """One closed curve: circle, ellipse, or closed cubic spline."""

    kind: str
    params: dict

    @staticmethod
    def circle(center: tuple[float, float], radius: float) -> "Curve":
        if radius <= 0:
            raise SceneError("circle radius must be positive")
        return Curve("circle", {"center": tuple(center), "radius": float(radius)})

    @staticmethod
    def ellipse(center, axes, rotation: float = 0.0) -> "Curve":
        if min(axes) <= 0:
            raise SceneError("ellipse axes must be positive")
        return Curve(
            "ellipse",
            {"center": tuple(center), "axes": tuple(axes), "rotation": float(rotation)},
        )

    @staticmethod
    def spline(points) -> "Curve":
        pts = [tuple(map(float, p)) for p in points]
        if len(pts) < 3:
            raise SceneError("closed spline needs at least 3 control points")
        return Curve("spline", {"points": pts})

    def sample(self, step: float) -> np.ndarray:
        """Sample (x, y) positions along the curve at arc-length spacing <= step."""
        if self.kind == "circle":
            cx, cy = self.params["center"]
            r = self.params["radius"]
            length = 2.0 * np.pi * r
            m = max(int(np.ceil(length / step)), 8)
            t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
            return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])
        if self.kind == "ellipse":
            cx, cy = self.params["center"]
            a, b = self.params["axes"]
            rot = self.params["rotation"]
            # upper bound on circumference; fine sampling is cheap
            length = 2.0 * np.pi * max(a, b)
            m = max(int(np.ceil(length / step)) * 2, 16)
            t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
            ex, ey = a * np.cos(t), b * np.sin(t)
            cr, sr = np.cos(rot), np.sin(rot)
            pts = np.column_stack([cx + cr * ex - sr * ey, cy + sr * ex + cr * ey])
            return _resample_arclength(pts, step)
        if self.kind == "spline":
            pts = np.asarray(self.params["points"], dtype=np.float64)
            closed = np.vstack([pts, pts[:1]])
            u = np.zeros(len(closed))
            u[1:] = np.cumsum(np.linalg.norm(np.diff(closed, axis=0), axis=1))
            if u[-1] <= 0:
                raise SceneError("degenerate spline (zero length)")
            cs = CubicSpline(u, closed, bc_type="periodic")
            dense = cs(np.linspace(0.0, u[-1], max(int(u[-1] / step) * 4, 32), endpoint=False))
            return _resample_arclength(dense, step)
        raise SceneError(f"unknown curve kind {self.kind!r}")


def _resample_arclength(pts: np.ndarray, step: float) -> np.ndarray:
    """Resample a closed polyline at uniform arc-length spacing <= step."""
    closed = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    u = np.concatenate([[0.0], np.cumsum(seg)])
    total = u[-1]
    if total <= 0:
        raise SceneError("degenerate curve (zero length)")
    m = max(int(np.ceil(total / step)), 8)
    s = np.linspace(0.0, total, m, endpoint=False)
    x = np.interp(s, u, closed[:, 0])
    y = np.interp(s, u, closed[:, 1])
    return np.column_stack([x, y])


@dataclass(frozen=True)
class CurveSceneSpec:
    """Closed curves with a shared line intensity and stroke width in pixels."""

    curves: tuple[Curve, ...]
    intensity: float = 1.0
    stroke_width: float = 1.0

    def __post_init__(self):
        if self.intensity <= 0:
            raise SceneError("line intensity must be positive")
        if self.stroke_width <= 0:
            raise SceneError("stroke width must be positive")
        object.__setattr__(self, "curves", tuple(self.curves))


MAX_STEP = 0.25  # px of arc length between deposited samples


def gen_points(size: tuple[int, int], spec: PointSceneSpec) -> RasterImage:
    """Render the point field: sum of clamped |x - x_i|**(-3/2) profiles, peak 1.

    An empty position list yields the zero image (no normalization applied).
    """
    h, w = size
    if not spec.positions:
        return RasterImage.zeros(h, w)
    spec.validate_bounds(size)
    yy = np.arange(h, dtype=np.float64)[:, None]
    xx = np.arange(w, dtype=np.float64)[None, :]
    img = np.zeros((h, w))
    for (px, py), amp in zip(spec.positions, spec.amplitudes):
        d = np.hypot(xx - px, yy - py)
        img += amp * np.maximum(d, spec.clamp_radius) ** -1.5
    return RasterImage(img / img.max())


def rasterize_curves(size: tuple[int, int], spec: CurveSceneSpec) -> np.ndarray:
    """Deposit all curves onto the grid without normalization.

    Each sample splats intensity * step bilinearly, so the total deposited
    mass equals intensity times total arc length; strokes wider than one pixel
    spread the same mass across the transverse profile.
    """
    h, w = size
    img = np.zeros((h, w))
    for curve in spec.curves:
        pts = curve.sample(MAX_STEP)
        closed = np.vstack([pts, pts[:1]])
        seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
        x, y = pts[:, 0], pts[:, 1]
        # transverse offsets for stroke width, unit total weight
        if spec.stroke_width <= 1.0:
            offsets = [(0.0, 1.0)]
        else:
            m = int(np.ceil(spec.stroke_width / 0.5))
            offs = (np.arange(m) + 0.5) / m * spec.stroke_width - spec.stroke_width / 2
            offsets = [(o, 1.0 / m) for o in offs]
        tang = closed[1:] - closed[:-1]
        norms = np.linalg.norm(tang, axis=1)
        norms[norms == 0] = 1.0
        nx, ny = -tang[:, 1] / norms, tang[:, 0] / norms
        for off, tweight in offsets:
            sx = x + off * nx
            sy = y + off * ny
            deposit = spec.intensity * seg * tweight
            _bilinear_splat(img, sx, sy, deposit)
    return img


def _bilinear_splat(img: np.ndarray, x: np.ndarray, y: np.ndarray, mass: np.ndarray) -> None:
    h, w = img.shape
    x0 = np.floor(x).astype(int)
    y0 = np.floor(y).astype(int)
    fx = x - x0
    fy = y - y0
    for dy in (0, 1):
        for dx in (0, 1):
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            np.add.at(img, ((y0 + dy) % h, (x0 + dx) % w), mass * wgt)


def gen_curves(size: tuple[int, int], spec: CurveSceneSpec) -> RasterImage:
    """Render the curve drawing, peak-normalized to 1.

    An empty curve list yields the zero image.
    """
    if not spec.curves:
        return RasterImage.zeros(*size)
    img = rasterize_curves(size, spec)
    return RasterImage(img / img.max())


def add_noise(img: RasterImage, sigma: float, seed: int) -> RasterImage:
    """Additive white Gaussian noise, reproducible under the seed."""
    if sigma < 0:
        raise SceneError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img
    rng = np.random.default_rng(seed)
    return RasterImage(img.data + rng.normal(0.0, sigma, size=img.shape))


def default_point_scene() -> PointSceneSpec:
    """Scattered points kept clear of the default curves."""
    positions = (
        (60, 40), (150, 70), (250, 45), (355, 60), (455, 90),
        (40, 150), (120, 200), (210, 160), (330, 170), (462, 200),
        (70, 300), (180, 330), (282, 264), (390, 300), (470, 330),
        (50, 420), (140, 452), (250, 430), (350, 470), (450, 420),
        (100, 90), (300, 390), (420, 150), (200, 480), (60, 490),
    )
    return PointSceneSpec(positions=positions)


def default_curve_scene() -> CurveSceneSpec:
    """A large circle, a rotated ellipse, and a high-curvature closed spline."""
    curves = (
        Curve.circle(center=(190, 190), radius=120),
        Curve.ellipse(center=(350, 360), axes=(130, 60), rotation=0.5),
        Curve.spline(
            [
                (120, 400), (170, 355), (240, 370), (255, 430),
                (200, 462), (165, 430), (140, 455),
            ]
        ),
    )
    return CurveSceneSpec(curves=curves)


def scale_scene(spec, factor: float):
    """Scale a default 512-grid scene to another square size."""
    if isinstance(spec, PointSceneSpec):
        return PointSceneSpec(
            positions=tuple((x * factor, y * factor) for x, y in spec.positions),
            amplitudes=spec.amplitudes,
            clamp_radius=spec.clamp_radius,
        )
    curves = []
    for c in spec.curves:
        if c.kind == "circle":
            curves.append(
                Curve.circle(
                    tuple(v * factor for v in c.params["center"]),
                    c.params["radius"] * factor,
                )
            )
        elif c.kind == "ellipse":
            curves.append(
                Curve.ellipse(
                    tuple(v * factor for v in c.params["center"]),
                    tuple(v * factor for v in c.params["axes"]),
                    c.params["rotation"],
                )
            )
        else:
            curves.append(
                Curve.spline([(x * factor, y * factor) for x, y in c.params["points"]])
            )
    return CurveSceneSpec(tuple(curves), spec.intensity, spec.stroke_width)


def gen_phantom(
    size: tuple[int, int],
    point_spec: PointSceneSpec | None = None,
    curve_spec: CurveSceneSpec | None = None,
    sigma: float = 0.05,
    seed: int = 0,
) -> tuple[RasterImage, RasterImage, RasterImage]:
    """Composite phantom (I, P, C) with I = clamp(P + C) + noise.

    With no explicit scenes, the default point and curve layouts (designed on
    a 512 grid) are scaled to the requested size.
    """
    factor = min(size) / 512.0
    if point_spec is None:
        point_spec = scale_scene(default_point_scene(), factor)
    if curve_spec is None:
        curve_spec = scale_scene(default_curve_scene(), factor)
    points = gen_points(size, point_spec)
    curves = gen_curves(size, curve_spec)
    clean = RasterImage(np.clip(points.data + curves.data, 0.0, 1.0))
    noisy = add_noise(clean, sigma, seed)
    return noisy, points, curves


def scene_to_json(point_spec: PointSceneSpec, curve_spec: CurveSceneSpec,
                  size: tuple[int, int], sigma: float, seed: int) -> str:
    """Serialize a phantom recipe; the fixture schema used by the CLI sidecar."""
    doc = {
        "size": list(size),
        "sigma": sigma,
        "seed": seed,
        "points": {
            "positions": [list(p) for p in point_spec.positions],
            "amplitudes": list(point_spec.amplitudes),
            "clamp_radius": point_spec.clamp_radius,
        },
        "curves": {
            "intensity": curve_spec.intensity,
            "stroke_width": curve_spec.stroke_width,
            "items": [{"kind": c.kind, **c.params} for c in curve_spec.curves],
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)
