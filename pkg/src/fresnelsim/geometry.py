"""Planar scene geometry: image sources, aperture coordinates and rho.

Conventions: positions in metres, angles in degrees CCW from +x. The
in-plane coordinate ``u`` of an aperture increases along the segment's
direction vector (cos angle, sin angle).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .fresnel import fr_term, fresnel_arg


class GeometryError(ValueError):
    """Raised when a configuration has no meaningful diffraction geometry."""


class GeometryWarning(UserWarning):
    """Diffraction formula evaluated outside its validity (same-side case)."""


class Point2(NamedTuple):
    x: float
    y: float


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


@dataclass(frozen=True)
class Segment:
    center: Point2
    length: float
    angle: float = 0.0

    def __post_init__(self):
        if not (self.length >= 0):
            raise GeometryError(f"segment length must be >= 0, got {self.length}")
        object.__setattr__(self, "center", Point2(float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "angle", float(self.angle) % 360.0)

    @property
    def direction(self) -> np.ndarray:
        a = math.radians(self.angle)
        return np.array([math.cos(a), math.sin(a)])

    @property
    def normal(self) -> np.ndarray:
        t = self.direction
        return np.array([-t[1], t[0]])

    @property
    def endpoints(self) -> tuple[Point2, Point2]:
        c = _vec(self.center)
        h = 0.5 * self.length * self.direction
        return Point2(*(c - h)), Point2(*(c + h))


@dataclass(frozen=True)
class Aperture:
    """Open interval ``[lo, hi]`` along a wall line; the wall covers the rest.

    ``lo``/``hi`` are offsets from ``center`` along the line direction and
    may be infinite, so a knife edge is ``lo=edge, hi=inf``.
    """

    center: Point2
    angle: float
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "center", Point2(float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "angle", float(self.angle) % 360.0)
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise GeometryError(f"aperture needs lo <= hi, got ({self.lo}, {self.hi})")

    @classmethod
    def from_segment(cls, seg: Segment) -> "Aperture":
        return cls(seg.center, seg.angle, -0.5 * seg.length, 0.5 * seg.length)

    @property
    def line(self) -> Segment:
        return Segment(self.center, 0.0, self.angle)

    @property
    def is_open(self) -> bool:
        return math.isinf(self.lo) and math.isinf(self.hi)

    def edges(self) -> list[Point2]:
        c, t = _vec(self.center), self.line.direction
        return [Point2(*(c + u * t)) for u in (self.lo, self.hi) if math.isfinite(u)]

    def walls(self, extent: float = 1e4) -> list[Segment]:
        """The blocking parts of the wall line, truncated at ``extent``."""
        out = []
        c, t = _vec(self.center), self.line.direction
        for a, b in ((-extent, self.lo), (self.hi, extent)):
            if b - a > 0 and math.isfinite(b - a):
                mid = c + 0.5 * (a + b) * t
                out.append(Segment(Point2(*mid), b - a, self.angle))
        return out


@dataclass(frozen=True)
class DiffractionGeometry:
    """Per (aperture, point) quantities of a single Fresnel diffraction.

    ``r1``/``r2`` are measured from source and point to the aperture
    reference point (the reflector centre); ``d1``/``d2`` run through the
    intersection of the source-point line with the aperture line, so
    ``d1 + d2`` is the straight source-point distance.
    """

    eff_source: Point2
    r1: float
    r2: float
    rho: float
    u0: float
    u1: float
    u2: float
    d1: float = 0.0
    d2: float = 0.0
    same_side: bool = False

    def fresnel_args(self, f: float) -> tuple[float, float]:
        return (float(fresnel_arg(self.u1, 0.0, f, self.rho)),
                float(fresnel_arg(self.u2, 0.0, f, self.rho)))

    def aperture_term(self, f: float) -> complex:
        w1, w2 = self.fresnel_args(f)
        return complex(fr_term(w1, w2))


def mirror_point(p, plane: Segment) -> Point2:
    """Reflect ``p`` across the infinite line through ``plane``."""
    n = plane.normal
    v = _vec(p) - _vec(plane.center)
    return Point2(*(_vec(p) - 2.0 * np.dot(v, n) * n))


def effective_source(tx, reflector: Segment, radius: float | None = None) -> Point2:
    """Image source of ``tx`` for a flat reflector, or the R/4 point for a curved one."""
    n = reflector.normal
    dist = float(np.dot(_vec(tx) - _vec(reflector.center), n))
    if abs(dist) < 1e-12:
        raise GeometryError("degenerate geometry: transmitter lies on the reflector line")
    if radius is None:
        return mirror_point(tx, reflector)
    if not radius > 0:
        raise GeometryError(f"curvature radius must be > 0, got {radius}")
    c = _vec(reflector.center)
    away = c - _vec(tx)
    away /= np.linalg.norm(away)
    return Point2(*(c + 0.25 * radius * away))


def rho_param(r1, r2):
    """Distance parameter r1 r2 / (r1 + r2); infinite r1 gives r2."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if np.any(~(r1 > 0)) or np.any(~(r2 > 0)):
        raise GeometryError("invalid geometry: distances must be positive")
    with np.errstate(invalid="ignore"):
        out = np.where(np.isinf(r1), r2, np.where(np.isinf(r2), r1, r1 * r2 / (r1 + r2)))
    return float(out) if out.ndim == 0 else out


def line_crossing(src, targets: np.ndarray, center, angle: float):
    """Vectorised intersection of the rays src->targets with a line.

    Returns ``(u, d1, d2, same_side)`` where ``u`` is the in-plane coordinate
    of the crossing relative to ``center``; ``same_side`` marks targets that
    lie on the source side of the line (or on it), for which the crossing is
    not between source and target.
    """
    a = math.radians(angle)
    t = np.array([math.cos(a), math.sin(a)])
    n = np.array([-t[1], t[0]])
    s = _vec(src)
    c = _vec(center)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    sd_src = float(np.dot(s - c, n))
    sd_tgt = (targets - c) @ n
    same_side = (sd_src * sd_tgt >= 0.0) | (sd_src == 0.0)
    denom = sd_src - sd_tgt
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(same_side, np.nan, sd_src / denom)
    cross = s + frac[:, None] * (targets - s)
    u = (cross - c) @ t
    d1 = np.linalg.norm(cross - s, axis=1)
    d2 = np.linalg.norm(targets - cross, axis=1)
    return u, d1, d2, same_side


def aperture_projection(eff, target, aperture: Segment) -> DiffractionGeometry:
    """Geometry of diffraction from ``eff`` through ``aperture`` to ``target``.

    Parallel source-target line and aperture raises ``GeometryError``. A
    target on the source side is returned with ``same_side=True`` and a
    ``GeometryWarning`` (the Fresnel formula is outside its validity there).
    """
    e, p = _vec(eff), _vec(target)
    d = p - e
    t = aperture.direction
    if abs(d[0] * t[1] - d[1] * t[0]) < 1e-12 * max(1.0, float(np.linalg.norm(d))):
        raise GeometryError("no intersection: source-target line parallel to aperture")
    c = _vec(aperture.center)
    n = aperture.normal
    frac = float(np.dot(c - e, n) / np.dot(d, n))
    cross = e + frac * d
    u0 = float(np.dot(cross - c, t))
    same_side = not (0.0 < frac < 1.0)
    if same_side:
        warnings.warn("geometry warning: diffraction formula outside its validity",
                      GeometryWarning, stacklevel=2)
    r1 = float(np.linalg.norm(c - e))
    r2 = float(np.linalg.norm(p - c))
    half = 0.5 * aperture.length
    return DiffractionGeometry(
        eff_source=Point2(*e), r1=r1, r2=r2, rho=rho_param(r1, r2),
        u0=u0, u1=-half - u0, u2=half - u0,
        d1=float(np.linalg.norm(cross - e)), d2=float(np.linalg.norm(p - cross)),
        same_side=same_side,
    )


def diffraction_angle(w, lam, r1, r2):
    """Small-angle diffraction angle w * sqrt(lam (r1 + r2) / (2 r1 r2)), radians.

    Only meaningful for small angles; the value is not clamped.
    """
    if np.any(np.asarray(lam) < 0):
        raise ValueError("invalid wavelength: must be non-negative")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    if np.any(r1 <= 0) or np.any(r2 <= 0):
        raise GeometryError("invalid geometry: distances must be positive")
    return np.asarray(w) * np.sqrt(np.asarray(lam) * (r1 + r2) / (2.0 * r1 * r2))


def _path_sum_min(tx: np.ndarray, rx: np.ndarray, seg: Segment) -> np.ndarray:
    """Minimum of |X - tx| + |X - rx| over the segment, for each row of ``rx``.

    Along the segment's line the sum is convex with its minimiser where the
    line meets tx -> rx (or tx -> mirrored rx when both foci are on one
    side), so clamping that point to the segment gives the exact minimum.
    """
    c = _vec(seg.center)
    t, n = seg.direction, seg.normal
    half = 0.5 * seg.length
    s_tx = float(np.dot(tx - c, n))
    s_rx = (rx - c) @ n
    far = np.where((s_tx * s_rx <= 0)[:, None], rx, rx - 2.0 * s_rx[:, None] * n)
    s_far = (far - c) @ n
    u_tx = float(np.dot(tx - c, t))
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(s_far == s_tx, 0.0, s_tx / (s_tx - s_far))
    u = u_tx + frac * ((far - c) @ t - u_tx)
    x = c + np.clip(u, -half, half)[:, None] * t
    return np.linalg.norm(x - tx, axis=1) + np.linalg.norm(x - rx, axis=1)


def fresnel_zone_clear_many(tx, rx, lam: float, obstacles: Sequence[Segment]) -> np.ndarray:
    """Vectorised ``fresnel_zone_clear`` over the rows of ``rx`` (shape (N, 2))."""
    t = _vec(tx)
    r = np.atleast_2d(np.asarray(rx, dtype=float))
    d = np.linalg.norm(r - t, axis=1)
    if np.any(d == 0):
        raise GeometryError("tx and rx coincide")
    limit = (d + 0.5 * lam) * (1.0 - 1e-12)
    clear = np.ones(len(r), dtype=bool)
    for seg in obstacles:
        clear &= _path_sum_min(t, r, seg) >= limit
    return clear


def fresnel_zone_clear(tx, rx, lam: float, obstacles: Sequence[Segment]) -> bool:
    """True when no obstacle enters the open first Fresnel ellipse of tx-rx.

    The ellipse boundary has path excess lam / 2. Touching the boundary
    counts as clear.
    """
    return bool(fresnel_zone_clear_many(tx, rx, lam, obstacles)[0])
