"""Post-processing of channel traces along a path.

Amplitudes are compared against a LoS reference after removing the
free-space 1/r envelope of the direct path, so a reference is always
quoted at the distance of the path midpoint.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .fresnel import SPEED_OF_LIGHT
from .geometry import fresnel_zone_clear_many
from .propagation import FrequencySpec, PathModel
from .scenario import Scenario, sample_path

Direction = Literal["falling", "rising"]


class NoCrossingError(RuntimeError):
    pass


class NoLosReferenceError(RuntimeError):
    pass


@dataclass
class ChannelTrace:
    """Channel along a path: one entry per centre frequency.

    ``parts[f]`` holds antenna-weighted component fields (M + 1, N), row 0
    the direct path; ``totals[f]`` their sum. ``band_power[f]`` is the
    band-averaged |h|^2 when the frequency spec has more than one tone.
    ``specular[m - 1]`` marks points that see a geometric reflection off
    reflector m.
    """

    points: np.ndarray
    s: np.ndarray
    tx_distance: np.ndarray
    amplitude: float
    specs: dict[float, FrequencySpec]
    totals: dict[float, np.ndarray]
    parts: dict[float, np.ndarray]
    aoa: np.ndarray
    path_length: np.ndarray
    specular: np.ndarray
    band_power: dict[float, np.ndarray] = field(default_factory=dict)
    obstacles: list = field(default_factory=list)
    tx_position: tuple = (0.0, 0.0)

    @property
    def frequencies(self) -> list[float]:
        return list(self.totals)

    @property
    def spacing(self) -> float:
        return float(self.s[1] - self.s[0]) if len(self.s) > 1 else 0.0

    def amplitude_of(self, f: float, banded: bool = True) -> np.ndarray:
        """|h| at ``f``; the band-averaged rms amplitude when available."""
        if banded and f in self.band_power:
            return np.sqrt(self.band_power[f])
        return np.abs(self.totals[f])

    def free_space(self) -> np.ndarray:
        return self.amplitude / self.tx_distance

    def compensated(self, f: float, banded: bool = True) -> np.ndarray:
        """|h| with the 1/r envelope removed, scaled to the midpoint distance."""
        return self.amplitude_of(f, banded) * self.tx_distance / self.mid_distance

    @property
    def mid_distance(self) -> float:
        mid = 0.5 * (self.points[0] + self.points[-1])
        return float(np.linalg.norm(mid - np.asarray(self.tx_position)))


def compute_trace(scenario: Scenario, *, seed: int | None = None, points=None,
                  frequencies: Sequence[FrequencySpec] | None = None,
                  reflectors=None) -> ChannelTrace:
    """Evaluate every component of ``scenario`` along its path."""
    pts = sample_path(scenario.path) if points is None else np.atleast_2d(np.asarray(points, float))
    refl = scenario.expanded_reflectors(seed) if reflectors is None else list(reflectors)
    model = PathModel(scenario.transmitter, refl, pts)
    gains = scenario.antenna(model.aoa)
    specs = list(scenario.frequencies if frequencies is None else frequencies)
    totals, parts, band = {}, {}, {}
    for spec in specs:
        comps = gains * model.components(spec.center)
        parts[spec.center] = comps
        totals[spec.center] = comps.sum(axis=0)
        if spec.band_points > 1:
            band[spec.center] = model.band_power(spec, scenario.antenna)
    s = np.linalg.norm(pts - pts[0], axis=1)
    ap = scenario.transmitter.aperture
    return ChannelTrace(
        points=pts, s=s, tx_distance=model.direct_len, amplitude=model.amplitude,
        specs={spec.center: spec for spec in specs}, totals=totals, parts=parts, aoa=model.aoa,
        path_length=model.path_length, specular=model.specular, band_power=band,
        obstacles=[] if ap is None else ap.walls(),
        tx_position=tuple(scenario.transmitter.position),
    )


# ------------------------------------------------------------ LoS reference

def los_mask(trace: ChannelTrace, f: float) -> np.ndarray:
    """Points whose first Fresnel zone (at ``f``) is free of the wall segments."""
    lam = SPEED_OF_LIGHT / f
    return fresnel_zone_clear_many(trace.tx_position, trace.points, lam, trace.obstacles)


def _longest_run(mask: np.ndarray) -> slice | None:
    best, start, best_len = None, None, 0
    for i, v in enumerate(np.append(mask, False)):
        if v and start is None:
            start = i
        elif not v and start is not None:
            if i - start > best_len:
                best, best_len = slice(start, i), i - start
            start = None
    return best


def estimate_los_average(trace: ChannelTrace, f: float, *, window: tuple[float, float] | None = None,
                         mask: np.ndarray | None = None) -> float:
    """Average LoS amplitude referred to the path midpoint distance.

    The LoS region is the longest contiguous run of points with a clear
    first Fresnel zone, or the path-coordinate ``window`` when given.
    """
    if window is not None:
        mask = (trace.s >= window[0]) & (trace.s <= window[1])
    elif mask is None:
        mask = los_mask(trace, f)
    run = _longest_run(np.asarray(mask, dtype=bool))
    if run is None:
        raise NoLosReferenceError("no LoS reference; supply explicit reference")
    return float(np.mean(trace.compensated(f)[run]))


def peak_reference(trace: ChannelTrace, f: float) -> float:
    """Maximum of the compensated amplitude along the path."""
    return float(np.max(trace.compensated(f)))


def resolve_reference(trace: ChannelTrace, f: float, reference) -> float:
    if reference is None or reference == "los":
        return estimate_los_average(trace, f)
    if reference == "peak":
        return peak_reference(trace, f)
    if reference == "free_space":
        return trace.amplitude / trace.mid_distance
    if isinstance(reference, dict):
        return float(reference[f])
    return float(reference)


# ---------------------------------------------------------- threshold events

@dataclass(frozen=True)
class ThresholdEvent:
    frequency: float
    position: float
    direction: str
    level: float


def level_crossings(y: np.ndarray, s: np.ndarray, level: float, debounce: float) -> list[tuple[float, str]]:
    """Net crossings of ``level`` in order of increasing ``s``.

    Samples exactly at the level carry no sign; a crossing needs a strict
    change from one side to the other. Crossings closer than ``debounce``
    are grouped and the group reports its first position and net effect.
    """
    d = y - level
    idx = np.flatnonzero(d != 0)
    raw = []
    for a, b in zip(idx[:-1], idx[1:]):
        if np.sign(d[a]) == np.sign(d[b]):
            continue
        if b == a + 1:
            pos = s[a] + (s[b] - s[a]) * d[a] / (d[a] - d[b])
        else:
            # passes through samples sitting exactly on the level: take the first
            pos = s[a + 1]
        raw.append((float(pos), "falling" if d[a] > 0 else "rising"))
    out: list[tuple[float, str]] = []
    i = 0
    while i < len(raw):
        j = i
        while j + 1 < len(raw) and raw[j + 1][0] - raw[j][0] < debounce:
            j += 1
        # a group with an even number of crossings returns to where it began
        if (j - i) % 2 == 0:
            out.append(raw[i])
        i = j + 1
    return out


def threshold_crossings(trace: ChannelTrace, f: float, level: float, direction: Direction | None = None, *,
                        reference=None, reverse: bool = False, debounce_samples: float = 2.0,
                        banded: bool = True) -> list[ThresholdEvent]:
    """Crossings of ``level * reference`` by the compensated amplitude.

    ``direction`` is judged along the direction of motion; ``reverse``
    means the mobile travels from the path end to its start. Positions are
    always path coordinates measured from the path start.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    ref = resolve_reference(trace, f, reference)
    y = trace.compensated(f, banded) / ref
    s = trace.s
    if reverse:
        y, s = y[::-1], (s[-1] - s)[::-1]
    found = level_crossings(y, s, level, debounce_samples * trace.spacing)
    events = []
    for pos, d in found:
        if direction is not None and d != direction:
            continue
        events.append(ThresholdEvent(f, float(trace.s[-1] - pos) if reverse else pos, d, level))
    return events


def threshold_delay(trace: ChannelTrace, f_low: float, f_high: float, level: float, direction: Direction, *,
                    reference=None, reverse: bool = False, debounce_samples: float = 2.0,
                    banded: bool = True) -> float:
    """Distance by which the first ``f_low`` event precedes the first ``f_high`` one.

    Positive when the lower frequency crosses first along the motion.
    """
    first = {}
    for f in (f_low, f_high):
        ev = threshold_crossings(trace, f, level, direction, reference=reference, reverse=reverse,
                                 debounce_samples=debounce_samples, banded=banded)
        if not ev:
            raise NoCrossingError(f"no crossing at f={f:g} Hz")
        along = [trace.s[-1] - e.position if reverse else e.position for e in ev]
        first[f] = min(along)
    return first[f_high] - first[f_low]


# ------------------------------------------------------ strongest component

def strongest_component_series(trace: ChannelTrace, f: float) -> list[tuple[int, float]]:
    """Per point, the index of the strongest component and its AoA (deg).

    Exact ties keep the previous point's winner, otherwise the lowest index.
    """
    mags = np.abs(trace.parts[f])
    out = []
    prev = None
    for j in range(mags.shape[1]):
        col = mags[:, j]
        best = int(np.argmax(col))
        if prev is not None and col[prev] == col[best]:
            best = prev
        out.append((best, float(trace.aoa[best, j])))
        prev = best
    return out


def switch_locations(trace: ChannelTrace, series: Sequence[tuple[int, float]],
                     min_gap: float = 0.0) -> list[tuple[float, int, int]]:
    """Path positions (midway between samples) where the winner changes.

    Switch back-and-forth bursts shorter than ``min_gap`` collapse to one
    entry (or vanish when they return to the original winner).
    """
    idx = np.array([m for m, _ in series])
    raw = [(0.5 * (trace.s[j] + trace.s[j + 1]), int(idx[j]), int(idx[j + 1]))
           for j in np.flatnonzero(idx[1:] != idx[:-1])]
    if min_gap <= 0:
        return raw
    out = []
    i = 0
    while i < len(raw):
        j = i
        while j + 1 < len(raw) and raw[j + 1][0] - raw[j][0] < min_gap:
            j += 1
        if raw[i][1] != raw[j][2]:
            out.append((raw[i][0], raw[i][1], raw[j][2]))
        i = j + 1
    return out


# ------------------------------------------------------------------ regimes

def classify_regime(reflector_length: float, lam: float, r2: float) -> tuple[str, float]:
    """Near/transition/far label from N = 2 L^2 / (lam r2).

    far for N <= 1, near for N >= 6, transition in between.
    """
    if reflector_length <= 0 or lam <= 0 or r2 <= 0:
        raise ValueError("reflector length, wavelength and distance must be positive")
    n = 2.0 * reflector_length**2 / (lam * r2)
    if n <= 1.0:
        return "far", n
    if n >= 6.0:
        return "near", n
    return "transition", n


def local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices of interior local maxima (a flat top counts once, at its start)."""
    y = np.asarray(y)
    out = []
    i = 1
    while i < len(y) - 1:
        if y[i] > y[i - 1]:
            j = i
            while j + 1 < len(y) and y[j + 1] == y[i]:
                j += 1
            if j + 1 < len(y) and y[j + 1] < y[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=int)


def count_sidelobes(y: np.ndarray, frac: float = 0.1) -> int:
    """Local maxima above ``frac`` of the global peak, excluding the peak itself."""
    peaks = local_maxima(y)
    top = np.max(y)
    return int(np.sum(y[peaks] >= frac * top)) - int(np.any(y[peaks] == top))


def main_lobe_maxima(y: np.ndarray, frac: float = 0.5) -> int:
    """Number of local maxima inside the above-``frac`` region around the peak."""
    y = np.asarray(y)
    k = int(np.argmax(y))
    lo = k
    while lo > 0 and y[lo - 1] >= frac * y[k]:
        lo -= 1
    hi = k
    while hi < len(y) - 1 and y[hi + 1] >= frac * y[k]:
        hi += 1
    peaks = local_maxima(y)
    return int(np.sum((peaks >= lo) & (peaks <= hi))) or 1


def morphology(y: np.ndarray) -> str:
    """``flat_top`` when the main lobe oscillates about a plateau, else ``single_peak``."""
    return "flat_top" if main_lobe_maxima(y) >= 2 else "single_peak"


def running_median(y: np.ndarray, width: int) -> np.ndarray:
    """Median over a centred window of ``width`` samples (shrunk at the ends)."""
    half = max(0, width // 2)
    return np.array([np.median(y[max(0, i - half):i + half + 1]) for i in range(len(y))])


def fade_statistics(y: np.ndarray, s: np.ndarray, mask: np.ndarray, *, window: float = 1.0,
                    depth_fraction: float = 0.5) -> dict:
    """Deep fades of an amplitude trace inside ``mask``.

    A fade is a contiguous run of samples below ``depth_fraction`` times the
    running median over a ``window``-long neighbourhood; its position is the
    run's minimum. ``depth`` is the 95th/5th percentile amplitude ratio over
    the mask, which unlike max/min does not hinge on single-sample nulls.
    """
    y = np.asarray(y, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    spacing = float(s[1] - s[0])
    med = running_median(y, int(round(window / spacing)) | 1)
    low = (y < depth_fraction * med) & mask
    edges = np.diff(np.concatenate([[0], low.astype(int), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)
    positions = [float(s[a + int(np.argmin(y[a:b]))]) for a, b in zip(starts, stops)]
    ys = y[mask]
    return {
        "fades": len(positions),
        "positions": positions,
        "depth": float(np.percentile(ys, 95) / np.percentile(ys, 5)),
    }


def relative_path_cycles(trace: ChannelTrace, f: float, component: int | None = None) -> float:
    """Wavelengths of reflected-minus-direct path change across the specular region.

    Each cycle is one interference period between the two paths. With
    ``component=None`` every reflector counts: each point uses the first
    reflection it sees specularly.
    """
    if component is None:
        spec = trace.specular
        mask = spec.any(axis=0)
        if not mask.any():
            return 0.0
        first = np.argmax(spec, axis=0)[mask]
        refl = trace.path_length[1 + first, np.flatnonzero(mask)]
    else:
        mask = trace.specular[component - 1]
        if not mask.any():
            return 0.0
        refl = trace.path_length[component, mask]
    delta = refl - trace.path_length[0, mask]
    return float((delta.max() - delta.min()) * f / SPEED_OF_LIGHT)


# ---------------------------------------------------------------- field maps

def grid_axes(x_range: tuple[float, float], y_range: tuple[float, float], resolution: float):
    """Cell-centre coordinates; a resolution coarser than the region gives one cell."""
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    axes = []
    for a, b in (x_range, y_range):
        n = max(1, int(round((b - a) / resolution)))
        axes.append(a + (np.arange(n) + 0.5) * (b - a) / n)
    return axes


def field_map(scenario: Scenario, f: float, x_range, y_range, resolution: float, *,
              component: int | None = None, reference: float | None = None, seed: int | None = None):
    """|h| on a grid, normalised by ``reference``.

    Returns ``(xs, ys, values, reference)`` with ``values[iy, ix]``. The
    default reference is the free-space amplitude A_in / r at the grid
    centre, so an unobstructed scene maps to ~1 there.
    """
    xs, ys = grid_axes(x_range, y_range, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    model = PathModel(scenario.transmitter, scenario.expanded_reflectors(seed), pts)
    comps = scenario.antenna(model.aoa) * model.components(f)
    vals = np.abs(comps.sum(axis=0) if component is None else comps[component])
    if reference is None:
        centre = np.array([np.mean(x_range), np.mean(y_range)])
        reference = model.amplitude / float(np.linalg.norm(centre - np.asarray(scenario.transmitter.position)))
    return xs, ys, (vals / reference).reshape(gy.shape), float(reference)


def warn_if_half_level(level: float) -> None:
    if abs(level - 0.5) < 1e-12:
        warnings.warn("the 50% level is frequency independent for edge diffraction "
                      "and should not be used as a threshold", stacklevel=2)
