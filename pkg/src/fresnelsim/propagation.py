"""Channel components by single and double Fresnel diffraction.

Every reflector contributes through two cascaded diffractions: transmitter
aperture -> reflector centre, then effective (image) source -> reflector
aperture -> field point. The direct component is the single diffraction
through the transmitter aperture. Each single diffraction is written as

    (j/2) * Fr(w1, w2) * (1 - j)

where the (1 - j) is the suppressed out-of-plane dimension, so an open
aperture gives exactly 1 and the double product carries the -1/4 prefactor.

Phasors use exp(-j k r), which is the sign convention that matches
Fr = (C2 - C1) - j (S2 - S1).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .fresnel import SPEED_OF_LIGHT, fr_term
from .geometry import Aperture, GeometryError, Point2, effective_source, line_crossing

if TYPE_CHECKING:
    from .scenario import Reflector

log = logging.getLogger(__name__)

EPSILON_0 = 8.8541878128e-12
_OPEN = 1.0 - 1.0j


@dataclass(frozen=True)
class FrequencySpec:
    center: float
    band_fraction: float = 0.0
    band_points: int = 1

    def __post_init__(self):
        if not self.center > 0:
            raise ValueError(f"frequency must be > 0, got {self.center}")
        if not self.band_fraction >= 0:
            raise ValueError(f"band_fraction must be >= 0, got {self.band_fraction}")
        if int(self.band_points) != self.band_points or self.band_points < 1:
            raise ValueError(f"band_points must be an integer >= 1, got {self.band_points}")
        if self.band_fraction == 0 and self.band_points != 1:
            raise ValueError("band_fraction = 0 requires band_points = 1")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.center

    def tones(self) -> np.ndarray:
        """Equally spaced sub-frequencies, endpoints included."""
        if self.band_points == 1:
            return np.array([self.center])
        half = 0.5 * self.band_fraction
        return np.linspace(self.center * (1 - half), self.center * (1 + half), self.band_points)


def isotropic(angle_deg):
    return np.ones_like(np.asarray(angle_deg, dtype=float))


@dataclass(frozen=True)
class Antenna:
    """Receive antenna; ``gain_fn`` maps arrival angle (deg) to amplitude gain."""

    gain_fn: Callable = isotropic
    description: str = "isotropic"
    params: tuple = (("pattern", "isotropic"),)

    def __call__(self, angle_deg):
        g = np.asarray(self.gain_fn(np.asarray(angle_deg, dtype=float)), dtype=float)
        if np.any(g < 0):
            raise ValueError("antenna gain must be non-negative")
        return g

    @classmethod
    def cosine(cls, boresight_deg: float, exponent: float = 2.0, floor: float = 0.0) -> "Antenna":
        """max(cos(angle - boresight), 0)^exponent amplitude pattern with a floor."""

        def gain(angle):
            c = np.cos(np.radians(angle - boresight_deg))
            return np.maximum(np.maximum(c, 0.0) ** exponent, floor)

        return cls(gain, f"cosine(boresight={boresight_deg}, exponent={exponent}, floor={floor})",
                   (("pattern", "cosine"), ("boresight", float(boresight_deg)), ("exponent", float(exponent)),
                    ("floor", float(floor))))


@dataclass(frozen=True)
class Transmitter:
    position: Point2
    input_power: float = 1.0
    gain: float = 1.0
    aperture: Aperture | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", Point2(float(self.position[0]), float(self.position[1])))
        if not self.input_power > 0 or not self.gain > 0:
            raise ValueError("invalid transmitter: input_power and gain must be > 0")


@dataclass
class ComponentField:
    component_index: int
    value: complex
    aoa: float
    path_length: float
    skipped: bool = False


def transmit_amplitude(tx: Transmitter, direction_gain: float | None = None) -> float:
    """Field amplitude sqrt(G P_in / (2 pi c eps0)); free space gives A / r."""
    g = tx.gain if direction_gain is None else direction_gain
    if not g > 0 or not tx.input_power > 0:
        raise ValueError("invalid transmitter: power and gain must be > 0")
    return math.sqrt(g * tx.input_power / (2.0 * math.pi * SPEED_OF_LIGHT * EPSILON_0))


def _single(fr):
    return 0.5j * fr * _OPEN


def tx_aperture_geometry(tx: Transmitter, targets: np.ndarray):
    """Crossing data of tx->target rays with the transmitter wall line.

    Returns ``(dist, rho, u, blocked_possible)``; ``blocked_possible`` is
    False where the target is on the transmitter side or there are no walls.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    dist = np.linalg.norm(targets - np.asarray(tx.position), axis=1)
    ap = tx.aperture
    if ap is None or ap.is_open:
        return dist, None, None, np.zeros(len(targets), dtype=bool)
    u, d1, d2, same = line_crossing(tx.position, targets, ap.center, ap.angle)
    active = ~same & (d1 > 0) & (d2 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(active, d1 * d2 / (d1 + d2), np.nan)
    return dist, rho, u, active


def tx_aperture_factor(tx: Transmitter, geom, f: float) -> np.ndarray:
    """Normalised transmitter-aperture factor; 1 for an unobstructed ray."""
    dist, rho, u, active = geom
    out = np.ones(len(dist), dtype=complex)
    if active.any():
        ap = tx.aperture
        k = np.sqrt(2.0 * f / (SPEED_OF_LIGHT * rho[active]))
        w1 = k * (ap.lo - u[active])
        w2 = k * (ap.hi - u[active])
        out[active] = _single(fr_term(w1, w2))
    return out


def _angles(vec: np.ndarray) -> np.ndarray:
    return np.degrees(np.arctan2(vec[..., 1], vec[..., 0])) % 360.0


class PathModel:
    """Geometry of one scene against a fixed set of field points.

    Frequency-independent quantities are computed once; ``components(f)``
    then returns the complex field of every component at every point as an
    array of shape (M + 1, N) with row 0 the direct component.
    """

    def __init__(self, tx: Transmitter, reflectors: Sequence["Reflector"], points):
        self.tx = tx
        self.reflectors = list(reflectors)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.amplitude = transmit_amplitude(tx)
        pts = self.points
        n_pts = len(pts)
        m = len(self.reflectors)
        txp = np.asarray(tx.position)

        self.direct_geom = tx_aperture_geometry(tx, pts)
        self.direct_len = self.direct_geom[0]
        if np.any(self.direct_len == 0):
            raise GeometryError("field point coincides with the transmitter")

        self.aoa = np.empty((m + 1, n_pts))
        self.path_length = np.empty((m + 1, n_pts))
        self.aoa[0] = _angles(pts - txp)
        self.path_length[0] = self.direct_len

        self.valid = np.ones(m, dtype=bool)
        self.specular = np.zeros((m, n_pts), dtype=bool)
        centers = np.zeros((m, 2))
        eff = np.zeros((m, 2))
        for i, refl in enumerate(self.reflectors):
            seg = refl.geometry
            centers[i] = seg.center
            try:
                eff[i] = effective_source(tx.position, seg, refl.radius)
            except GeometryError as exc:
                log.info("reflector %d skipped: %s", i, exc)
                self.valid[i] = False
                eff[i] = seg.center
        self.centers = centers
        self.eff = eff
        if m == 0:
            return

        angles = np.radians([r.geometry.angle for r in self.reflectors])
        t = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        nrm = np.stack([-t[:, 1], t[:, 0]], axis=1)
        lengths = np.array([r.geometry.length for r in self.reflectors])

        # first diffraction: transmitter aperture to each reflector centre
        self.illum_geom = tx_aperture_geometry(tx, centers)
        self.d_tx = self.illum_geom[0]

        # second diffraction: effective source through reflector aperture
        sd_src = np.einsum("md,md->m", eff - centers, nrm)
        rel = pts[None, :, :] - centers[:, None, :]
        sd_tgt = np.einsum("mnd,md->mn", rel, nrm)
        lit = (sd_src[:, None] * sd_tgt < 0.0) & self.valid[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(lit, sd_src[:, None] / (sd_src[:, None] - sd_tgt), 0.0)
        span = pts[None, :, :] - eff[:, None, :]
        cross = eff[:, None, :] + frac[..., None] * span
        u0 = np.einsum("mnd,md->mn", cross - centers[:, None, :], t)
        self.r1 = np.linalg.norm(centers - eff, axis=1)
        self.r2 = np.linalg.norm(rel, axis=2)
        lit &= self.r2 > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            self.rho = self.r1[:, None] * self.r2 / (self.r1[:, None] + self.r2)
        self.u1 = -0.5 * lengths[:, None] - u0
        self.u2 = 0.5 * lengths[:, None] - u0
        self.lit = lit
        # the image ray meets the reflector itself: geometric-optics reflection
        self.specular = lit & (np.abs(u0) <= 0.5 * lengths[:, None])
        straight = np.linalg.norm(span, axis=2)
        # unfolded optical path: the image path plus the tx->centre offset
        # (zero for flat reflectors, where |tx - C| = |eff - C|)
        offset = self.d_tx - self.r1
        self.path_length[1:] = straight + offset[:, None]
        self.aoa[1:] = _angles(rel)
        self.reflect = np.array(
            [r.reflectivity * np.exp(1j * math.radians(r.phase)) for r in self.reflectors]
        )
        self.spread = self.r1[:, None] / ((self.r1[:, None] + self.r2) * self.d_tx[:, None])

    def reflector_factor(self, f: float) -> np.ndarray:
        """Second-diffraction factor per (reflector, point); 1 for an unbounded reflector."""
        out = np.zeros(self.lit.shape if self.reflectors else (0, len(self.points)), dtype=complex)
        if self.reflectors and self.lit.any():
            lit = self.lit
            scale = np.sqrt(2.0 * f / (SPEED_OF_LIGHT * self.rho[lit]))
            out[lit] = _single(fr_term(scale * self.u1[lit], scale * self.u2[lit]))
        return out

    def components(self, f: float) -> np.ndarray:
        k = 2.0 * math.pi * f / SPEED_OF_LIGHT
        out = np.zeros(self.path_length.shape, dtype=complex)
        direct = tx_aperture_factor(self.tx, self.direct_geom, f)
        out[0] = self.amplitude * direct * np.exp(-1j * k * self.direct_len) / self.direct_len
        if not self.reflectors:
            return out
        illum = tx_aperture_factor(self.tx, self.illum_geom, f)
        out[1:] = (
            self.amplitude
            * (self.reflect * illum)[:, None]
            * self.spread
            * self.reflector_factor(f)
            * np.exp(-1j * k * self.path_length[1:])
        )
        return out

    def total(self, f: float, antenna: Antenna | None = None) -> np.ndarray:
        comps = self.components(f)
        if antenna is None:
            return comps.sum(axis=0)
        return (antenna(self.aoa) * comps).sum(axis=0)

    def band_power(self, spec: FrequencySpec, antenna: Antenna | None = None) -> np.ndarray:
        tones = spec.tones()
        acc = np.zeros(len(self.points))
        for f in tones:
            acc += np.abs(self.total(f, antenna)) ** 2
        return acc / len(tones)


def _point_array(point) -> np.ndarray:
    return np.asarray(point, dtype=float).reshape(1, 2)


def double_diffraction_component(tx: Transmitter, reflector: "Reflector", point, f: float,
                                 index: int = 1) -> ComponentField:
    model = PathModel(tx, [reflector], _point_array(point))
    value = complex(model.components(f)[1, 0])
    skipped = not (model.valid[0] and model.lit[0, 0])
    if skipped:
        log.info("component %d skipped at %s", index, tuple(point))
    return ComponentField(index, value, float(model.aoa[1, 0]), float(model.path_length[1, 0]), skipped)


def direct_component(tx: Transmitter, point, f: float) -> ComponentField:
    model = PathModel(tx, [], _point_array(point))
    value = complex(model.components(f)[0, 0])
    return ComponentField(0, value, float(model.aoa[0, 0]), float(model.path_length[0, 0]))


def channel_coefficient(tx: Transmitter, reflectors, antenna: Antenna | None, point, f: float):
    """Total coefficient sum_m g(aoa_m) h_m and the per-component fields."""
    model = PathModel(tx, reflectors, _point_array(point))
    comps = model.components(f)[:, 0]
    parts = []
    for m, value in enumerate(comps):
        skipped = m > 0 and not (model.valid[m - 1] and model.lit[m - 1, 0])
        parts.append(ComponentField(m, complex(value), float(model.aoa[m, 0]),
                                    float(model.path_length[m, 0]), skipped))
    gains = np.ones(len(parts)) if antenna is None else antenna(model.aoa[:, 0])
    total = complex(np.sum(gains * comps))
    return total, parts


def band_average_power(tx, reflectors, antenna, point, spec: FrequencySpec) -> float:
    model = PathModel(tx, reflectors, _point_array(point))
    return float(model.band_power(spec, antenna)[0])


def received_power(parts: Sequence[ComponentField], antenna: Antenna | None, lam: float) -> float:
    """Power c eps0 lam^2 |sum g_m E_m|^2 / (8 pi) collected by the antenna."""
    if not lam > 0:
        raise ValueError("wavelength must be > 0")
    if not parts:
        return 0.0
    values = np.array([p.value for p in parts])
    aoa = np.array([p.aoa for p in parts])
    gains = np.ones(len(parts)) if antenna is None else antenna(aoa)
    field_sum = np.sum(gains * values)
    return float(SPEED_OF_LIGHT * EPSILON_0 * lam**2 * abs(field_sum) ** 2 / (8.0 * math.pi))


def illumination_warnings(tx: Transmitter, reflectors) -> list[str]:
    """Reflectors straddling the transmitter shadow boundary should be split."""
    ap = tx.aperture
    if ap is None or ap.is_open:
        return []
    out = []
    for i, refl in enumerate(reflectors):
        ends = np.array(refl.geometry.endpoints)
        if refl.geometry.length == 0:
            continue
        _, _, u, active = tx_aperture_geometry(tx, ends)
        inside = ~active | ((u >= ap.lo) & (u <= ap.hi))
        if inside[0] != inside[1]:
            out.append(
                f"reflector {i} spans the transmitter shadow boundary; "
                "split it into smaller reflectors for an accurate first diffraction"
            )
    return out
