"""Named, reproducible experiment recipes.

Every recipe returns a ``SweepReport``: a table of result rows, the factor
grids it iterated over, metadata (seed, scenario hash, overrides) and the
series it computed along the way. ``SweepReport.write`` turns that into
``<out>/<name>/report.csv`` plus one ``trace_*.csv`` per series.

Sweeps farm independent cells out to a process pool when ``workers > 1``;
results land in pre-allocated slots, so the output never depends on the
worker count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .analysis import (
    ChannelTrace, NoCrossingError, NoLosReferenceError, classify_regime, compute_trace, count_sidelobes,
    fade_statistics, morphology, relative_path_cycles, strongest_component_series, switch_locations,
    threshold_delay,
)
from .fresnel import SPEED_OF_LIGHT
from .geometry import Aperture, Point2, Segment
from .propagation import Antenna, FrequencySpec, PathModel, Transmitter
from .scenario import (
    PathSpec, Reflector, RoughnessSpec, Scenario, builtin_scenario, spawn_random_reflectors,
)
from .tables import write_columns, write_csv, write_trace

F_LOW, F_HIGH = 2.4e9, 30.0e9


@dataclass
class SweepReport:
    """Result table of one experiment.

    ``rows`` share the keys listed in ``columns``. For sweeps each row is a
    cell: its factor values followed by ``mean``, ``std`` (None unless
    n >= 2) and ``n``.
    """

    name: str
    columns: list[str]
    rows: list[dict]
    factors: dict[str, list] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    traces: dict[str, ChannelTrace | dict[str, np.ndarray]] = field(default_factory=dict)

    def column(self, key: str) -> list:
        return [r[key] for r in self.rows]

    def write(self, out_dir: str | Path) -> Path:
        root = Path(out_dir) / self.name
        comments = [f"{k}={v}" for k, v in sorted(self.metadata.items())]
        write_csv(root / "report.csv", self.columns, ([r.get(c) for c in self.columns] for r in self.rows),
                  comments)
        for key, tr in self.traces.items():
            target = root / f"trace_{key}.csv"
            if isinstance(tr, ChannelTrace):
                write_trace(target, tr)
            else:
                write_columns(target, tr)
        return root


def cell_stats(values: Iterable[float]) -> dict:
    """Mean, sample std (only for n >= 2) and count of the finite values."""
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    n = len(v)
    return {
        "mean": float(v.mean()) if n else None,
        "std": float(v.std(ddof=1)) if n >= 2 else None,
        "n": n,
    }


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _delay_or_nan(trace, level, direction, **kw) -> float:
    try:
        return threshold_delay(trace, F_LOW, F_HIGH, level, direction, **kw)
    except (NoCrossingError, NoLosReferenceError):
        return math.nan


def derived_seed(seed: int, *key: int) -> int:
    """A 32-bit seed for replicate ``key`` of master ``seed``."""
    return int(np.random.SeedSequence([int(seed), *key]).generate_state(1)[0])


# ---------------------------------------------------------- LoS to NLoS

LOS_NLOS_EVENTS = (("falling", 0.7, True), ("rising", 0.3, False))


def exp_los_nlos(scenario: Scenario | None = None, *, seed: int | None = None,
                 f_low: float = F_LOW, f_high: float = F_HIGH) -> SweepReport:
    """Falling 70% and rising 30% threshold delays across the wall edge.

    Walking from the lit end towards the wall gives the falling event;
    walking out of the shadow gives the rising one.
    """
    scen = builtin_scenario("los_nlos") if scenario is None else scenario
    specs = {f.center: f for f in scen.frequencies}
    freqs = [specs.get(f, FrequencySpec(f)) for f in dict.fromkeys((f_low, f_high))]
    trace = compute_trace(scen, seed=seed, frequencies=freqs)
    rows = []
    for direction, level, reverse in LOS_NLOS_EVENTS:
        if f_low == f_high:
            delay = 0.0
        else:
            delay = threshold_delay(trace, f_low, f_high, level, direction, reverse=reverse)
        rows.append({"direction": direction, "level": level, "f_low": f_low, "f_high": f_high,
                     "reverse": reverse, "delay_m": delay})
    return SweepReport("los_nlos", ["direction", "level", "f_low", "f_high", "reverse", "delay_m"], rows,
                       metadata={"seed": scen.seed if seed is None else seed, "scenario_hash": scen.hash()},
                       traces={"los_nlos": trace})


# ------------------------------------------------------ reflection shadow

def reflection_delay(trace: ChannelTrace) -> float:
    """Rising 30% delay against the free-space strength of the direct path."""
    return _delay_or_nan(trace, 0.3, "rising", reference="free_space")


def exp_reflection_shadow(rough: bool = False, *, seeds: Sequence[int] = tuple(range(20)),
                          scenario: Scenario | None = None, keep_traces: bool = True) -> SweepReport:
    """Reflection-lobe delay in the shadow for a smooth or rough reflector."""
    name = "reflection_shadow_rough" if rough else "reflection_shadow"
    scen = builtin_scenario(name) if scenario is None else scenario
    smooth = replace(scen, reflectors=[replace(r, roughness=None) for r in scen.reflectors])
    base = reflection_delay(compute_trace(smooth))
    rows, traces = [], {}
    for seed in (seeds if rough else [scen.seed]):
        trace = compute_trace(scen, seed=seed)
        d = reflection_delay(trace)
        rows.append({"seed": seed, "delay_m": d, "smooth_delay_m": base,
                     "exceeds_smooth": bool(d > base) if math.isfinite(d) else None})
        if keep_traces and len(traces) < 1:
            traces[f"seed{seed}"] = trace
    stats = cell_stats(r["delay_m"] for r in rows)
    meta = {"scenario_hash": scen.hash(), "seed": scen.seed, "smooth_delay_m": base,
            "mean_delay_m": stats["mean"], "n": stats["n"]}
    return SweepReport(name, ["seed", "delay_m", "smooth_delay_m", "exceeds_smooth"], rows,
                       factors={"seed": list(seeds) if rough else [scen.seed]}, metadata=meta, traces=traces)


# ------------------------------------------------------------ rough grid

ROUGH_SUB_LENGTHS = (0.1, 0.2, 0.3, 0.4, 0.5)
ROUGH_MAX_OFFSETS = (0.01, 0.02, 0.03, 0.04, 0.05)


@dataclass(frozen=True)
class _RoughJob:
    scenario: Scenario
    sub_length: float
    max_offset: float
    replicates: int

    def __call__(self) -> list[float]:
        refl = self.scenario.reflectors[0]
        out = []
        for k in range(self.replicates):
            rough = replace(refl, roughness=RoughnessSpec(self.sub_length, self.max_offset, k))
            trace = compute_trace(replace(self.scenario, reflectors=[rough]))
            out.append(reflection_delay(trace))
        return out


def _run_job(job) -> list[float]:
    return job()


def rough_grid_scenario(samples: int = 500, band_fraction: float = 0.01, band_points: int = 5,
                        reflector_length: float = 1.5, seed: int = 0) -> Scenario:
    base = builtin_scenario("reflection_shadow")
    refl = base.reflectors[0]
    refl = replace(refl, geometry=replace(refl.geometry, length=reflector_length), roughness=None)
    return replace(base, reflectors=[refl], path=replace(base.path, samples=samples), seed=seed,
                   frequencies=[FrequencySpec(f, band_fraction, band_points) for f in (F_LOW, F_HIGH)])


def exp_rough_grid(*, sub_lengths: Sequence[float] = ROUGH_SUB_LENGTHS,
                   max_offsets: Sequence[float] = ROUGH_MAX_OFFSETS, n: int = 100, samples: int = 500,
                   band_fraction: float = 0.01, band_points: int = 5, seed: int = 0,
                   workers: int = 1) -> SweepReport:
    """Delay statistics over sub-reflector length x maximum displacement.

    Replicate k of every cell draws its displacements from stream k of the
    master seed, so cells are compared on common random numbers.
    """
    scen = rough_grid_scenario(samples, band_fraction, band_points, seed=seed)
    cells = list(itertools.product(sub_lengths, max_offsets))
    results = _map(_run_job, [_RoughJob(scen, a, b, n) for a, b in cells], workers)
    rows = []
    for (sub, off), delays in zip(cells, results):
        row = {"sub_length_m": sub, "max_offset_m": off}
        row.update(cell_stats(delays))
        row["failed"] = len(delays) - row["n"]
        rows.append(row)
    meta = {"seed": seed, "scenario_hash": scen.hash(), "replicates": n, "samples": samples,
            "band_fraction": band_fraction, "band_points": band_points, "traces_total": n * len(cells)}
    return SweepReport("rough_grid", ["sub_length_m", "max_offset_m", "mean", "std", "n", "failed"], rows,
                       factors={"sub_length_m": list(sub_lengths), "max_offset_m": list(max_offsets)},
                       metadata=meta)


def rough_grid_matrix(report: SweepReport, key: str = "mean") -> np.ndarray:
    """Cell values as a (sub_length, max_offset) array."""
    subs, offs = report.factors["sub_length_m"], report.factors["max_offset_m"]
    out = np.full((len(subs), len(offs)), np.nan)
    for r in report.rows:
        v = r[key]
        out[subs.index(r["sub_length_m"]), offs.index(r["max_offset_m"])] = np.nan if v is None else v
    return out


# ------------------------------------------------------- random variance

ALL_TOGGLES = ("position", "angle", "length")


def toggle_sets() -> list[tuple[str, ...]]:
    """Every subset of the randomisable fields, the empty set first."""
    return [c for k in range(len(ALL_TOGGLES) + 1) for c in itertools.combinations(ALL_TOGGLES, k)]


@dataclass(frozen=True)
class _VarianceJob:
    scenario: Scenario
    count: int
    toggles: tuple[str, ...]
    replicates: int
    seed: int

    def __call__(self) -> list[float]:
        base = spawn_random_reflectors(self.count, self.seed)
        out = []
        for k in range(self.replicates):
            if self.toggles:
                refl = spawn_random_reflectors(self.count, derived_seed(self.seed, k + 1),
                                               randomize=self.toggles, base=base)
            else:
                refl = base
            trace = compute_trace(replace(self.scenario, reflectors=list(refl)))
            out.append(_delay_or_nan(trace, 0.7, "falling", reverse=True))
        return out


def exp_random_variance(groups: Sequence[int] = (1, 2, 4), toggles: Sequence[Sequence[str]] | None = None, *,
                        n: int = 20, seed: int = 0, scenario: Scenario | None = None,
                        workers: int = 1) -> SweepReport:
    """Spread of the falling 70% delay when parts of a random layout are redrawn.

    Each group starts from one random base layout of ``count`` reflectors;
    a toggle set lists the fields redrawn per replicate while the others
    stay at the base values.
    """
    scen = builtin_scenario("los_nlos") if scenario is None else scenario
    toggles = [tuple(t) for t in (toggle_sets() if toggles is None else toggles)]
    cells = list(itertools.product(groups, toggles))
    results = _map(_run_job, [_VarianceJob(scen, c, t, n, seed) for c, t in cells], workers)
    rows = []
    for (count, tog), delays in zip(cells, results):
        row = {"reflectors": count, "toggles": "+".join(tog) or "none"}
        row.update(cell_stats(delays))
        row["variance"] = None if row["std"] is None else row["std"] ** 2
        row["failed"] = len(delays) - row["n"]
        rows.append(row)
    meta = {"seed": seed, "scenario_hash": scen.hash(), "replicates": n}
    return SweepReport("random_variance", ["reflectors", "toggles", "mean", "std", "variance", "n", "failed"],
                       rows, factors={"reflectors": list(groups), "toggles": ["+".join(t) or "none" for t in toggles]},
                       metadata=meta)


# ------------------------------------------------------------- knife edge

def knife_edge_scenario(edge_distance: float, offset: float, elevation: float = 15.0, *,
                        half: float | None = None, spacing: float = 0.01,
                        frequencies: Sequence[float] = (F_LOW, F_HIGH)) -> Scenario:
    """A single wall edge and a horizontal path ``offset`` above it.

    The transmitter sits at the origin and the edge ``edge_distance`` away
    along the ``elevation`` ray. The wall extends upward from the edge,
    perpendicular to the ray, so the path is shadowed left of the ray
    crossing and lit to its right. The path is centred on that crossing;
    its default half length grows with the offset, and as 1 / sin(elevation)
    for shallow rays, so the lit part always contains a clear first Fresnel
    zone.
    """
    if edge_distance <= 0 or offset <= 0:
        raise ValueError("edge distance and offset must be positive")
    t = np.array([math.cos(math.radians(elevation)), math.sin(math.radians(elevation))])
    edge = edge_distance * t
    y = edge[1] + offset
    xb = y / t[1] * t[0]
    if half is None:
        half = (10.0 + 3.0 * offset) * max(1.0, math.sin(math.radians(15.0)) / abs(t[1]))
    samples = int(round(2 * half / spacing)) + 1
    ap = Aperture(Point2(*edge), elevation + 90.0, -math.inf, 0.0)
    return Scenario(Transmitter(Point2(0.0, 0.0), aperture=ap), [], Antenna(),
                    PathSpec(Point2(xb - half, y), Point2(xb + half, y), samples),
                    [FrequencySpec(f) for f in frequencies], name="knife_edge")


def knife_edge_cross_section(edge_distance: float, distance_past_edge: float, elevation: float = 15.0, *,
                             half: float = 10.0, spacing: float = 0.01,
                             frequencies: Sequence[float] = (F_LOW, F_HIGH)) -> Scenario:
    """Path perpendicular to the shadow boundary, ``distance_past_edge`` beyond the edge.

    It runs from the shadow side to the lit side and crosses the geometric
    boundary at its midpoint.
    """
    t = np.array([math.cos(math.radians(elevation)), math.sin(math.radians(elevation))])
    n = np.array([-t[1], t[0]])
    edge = edge_distance * t
    mid = (edge_distance + distance_past_edge) * t
    samples = int(round(2 * half / spacing)) + 1
    ap = Aperture(Point2(*edge), elevation + 90.0, -math.inf, 0.0)
    return Scenario(Transmitter(Point2(0.0, 0.0), aperture=ap), [], Antenna(),
                    PathSpec(Point2(*(mid + half * n)), Point2(*(mid - half * n)), samples),
                    [FrequencySpec(f) for f in frequencies], name="knife_edge_cross_section")


def knife_edge_delay(scenario: Scenario, reference=None) -> float:
    """Falling 70% delay walking from the lit end into the shadow."""
    trace = compute_trace(scenario)
    return threshold_delay(trace, F_LOW, F_HIGH, 0.7, "falling", reverse=True, reference=reference)


def exp_offset_sweep(y_offsets: Sequence[float] = tuple(float(v) for v in range(1, 11)), *,
                     edge_distance: float = 15.0, elevation: float = 15.0,
                     reference="peak") -> SweepReport:
    """Falling delay against the distance between the wall edge and the path.

    The default reference is the largest compensated amplitude reached on
    each path.
    """
    rows = []
    for off in y_offsets:
        scen = knife_edge_scenario(edge_distance, off, elevation)
        try:
            d = knife_edge_delay(scen, reference)
        except (NoCrossingError, NoLosReferenceError):
            d = math.nan
        rows.append({"offset_m": off, "delay_m": d})
    xs = np.array([r["offset_m"] for r in rows])
    ys = np.array([r["delay_m"] for r in rows])
    ok = np.isfinite(ys)
    slope = float(np.polyfit(xs[ok], ys[ok], 1)[0]) if ok.sum() >= 2 else math.nan
    meta = {"edge_distance_m": edge_distance, "elevation_deg": elevation, "reference": reference,
            "slope": slope, "seed": 0,
            "scenario_hash": knife_edge_scenario(edge_distance, 1.0, elevation).hash()}
    return SweepReport("offset_sweep", ["offset_m", "delay_m"], rows, factors={"offset_m": list(y_offsets)},
                       metadata=meta)


# ------------------------------------------------------- reflector regimes

REGIME_FAMILIES = {
    "wavelength": [dict(length=0.46, lam=lam, r2=5.0) for lam in (0.125, 0.05, 0.02, 0.01)],
    "size": [dict(length=L, lam=0.125, r2=5.0) for L in (0.46, 0.727, 1.149, 1.625)],
    "distance": [dict(length=0.65, lam=0.05, r2=r2) for r2 in (25.0, 10.0, 4.0, 2.0)],
}


def reflector_pattern(length: float, lam: float, r2: float, *, samples: int = 1001, span: float = 2.5,
                      source_distance: float = 1.0e4) -> tuple[np.ndarray, np.ndarray]:
    """|reflector diffraction factor| across a line ``r2`` in front of a reflector.

    The source is far away on the reflector's axis; the line spans
    ``+-span * length`` and the factor is 1 for an unbounded reflector.
    """
    refl = Reflector(Segment(Point2(0.0, 0.0), length, 0.0))
    x = np.linspace(-span * length, span * length, samples)
    pts = np.column_stack([x, np.full_like(x, r2)])
    model = PathModel(Transmitter(Point2(0.0, source_distance)), [refl], pts)
    return x, np.abs(model.reflector_factor(SPEED_OF_LIGHT / lam)[0])


def exp_small_reflector_regimes(families: dict | None = None) -> SweepReport:
    """Reflected patterns of three parameter families sharing the same N values."""
    families = REGIME_FAMILIES if families is None else families
    rows, traces = [], {}
    for fam, members in families.items():
        for i, p in enumerate(members):
            label, n_val = classify_regime(p["length"], p["lam"], p["r2"])
            x, y = reflector_pattern(p["length"], p["lam"], p["r2"])
            rows.append({"family": fam, "index": i, "length_m": p["length"], "wavelength_m": p["lam"],
                         "r2_m": p["r2"], "N": n_val, "regime": label, "morphology": morphology(y),
                         "sidelobes": count_sidelobes(y, 0.1)})
            traces[f"{fam}_{i}"] = {"x_m": x, "x_over_length": x / p["length"], "amplitude": y}
    cols = ["family", "index", "length_m", "wavelength_m", "r2_m", "N", "regime", "morphology", "sidelobes"]
    return SweepReport("regimes", cols, rows, factors={k: list(range(len(v))) for k, v in families.items()},
                       metadata={"seed": 0, "scenario_hash": "analytic"}, traces=traces)


# --------------------------------------------------------- back reflection

BACK_VARIANTS = {"flat_pure": "back_reflection", "banded": "back_reflection_banded",
                 "rough": "back_reflection_rough"}


def exp_back_reflection(variants: Sequence[str] = tuple(BACK_VARIANTS), *, seed: int | None = None) -> SweepReport:
    """Fade count and depth over the specular region for each variant.

    Every variant is scored on the specular region of the flat layout.
    """
    unknown = set(variants) - set(BACK_VARIANTS)
    if unknown:
        raise ValueError(f"unknown variants {sorted(unknown)}; have {sorted(BACK_VARIANTS)}")
    flat = compute_trace(builtin_scenario("back_reflection"))
    mask = flat.specular.any(axis=0)
    rows, traces, hashes = [], {}, {}
    for v in variants:
        scen = builtin_scenario(BACK_VARIANTS[v])
        hashes[v] = scen.hash()
        trace = flat if v == "flat_pure" else compute_trace(scen, seed=seed)
        traces[v] = trace
        for f in trace.frequencies:
            st = fade_statistics(trace.compensated(f), trace.s, mask)
            rows.append({"variant": v, "f_hz": f, "fades": st["fades"], "depth": st["depth"],
                         "path_cycles": relative_path_cycles(trace, f)})
    meta = {"seed": seed if seed is not None else 0,
            "scenario_hash": ";".join(f"{k}:{h}" for k, h in hashes.items())}
    depth = {(r["variant"], r["f_hz"]): r["depth"] for r in rows}
    for v in variants:
        if v != "flat_pure" and ("flat_pure", F_HIGH) in depth:
            meta[f"depth_reduction_{v}"] = depth[("flat_pure", F_HIGH)] / depth[(v, F_HIGH)]
    return SweepReport("back_reflection", ["variant", "f_hz", "fades", "depth", "path_cycles"], rows,
                       factors={"variant": list(variants)}, metadata=meta, traces=traces)


# -------------------------------------------------------- four reflectors

def exp_four_reflector_aoa(scenario: Scenario | None = None, *, min_gap: float = 0.5) -> SweepReport:
    """Strongest-component switches and AoA along the four-reflector path."""
    scen = builtin_scenario("four_reflectors") if scenario is None else scenario
    trace = compute_trace(scen)
    rows, series = [], {"x_m": trace.points[:, 0], "y_m": trace.points[:, 1]}
    for f in trace.frequencies:
        strongest = strongest_component_series(trace, f)
        idx = np.array([m for m, _ in strongest])
        series[f"strongest_{f:.4g}"] = idx
        series[f"aoa_deg_{f:.4g}"] = np.array([a for _, a in strongest])
        series[f"abs_strongest_{f:.4g}"] = np.abs(trace.parts[f][idx, np.arange(len(idx))])
        for pos, a, b in switch_locations(trace, strongest, min_gap):
            rows.append({"f_hz": f, "position_m": pos, "from": a, "to": b})
    meta = {"seed": scen.seed, "scenario_hash": scen.hash(), "min_gap_m": min_gap}
    return SweepReport("four_reflector_aoa", ["f_hz", "position_m", "from", "to"], rows, metadata=meta,
                       traces={"four_reflectors": trace, "strongest": series})


def switch_mismatch(report: SweepReport, f_a: float = F_LOW, f_b: float = F_HIGH) -> float:
    """Largest positional gap between matching switches at two bands.

    Infinite when the two bands do not show the same sequence of switches.
    """
    seq = {f: [(r["from"], r["to"], r["position_m"]) for r in report.rows if r["f_hz"] == f] for f in (f_a, f_b)}
    a, b = seq[f_a], seq[f_b]
    if [x[:2] for x in a] != [x[:2] for x in b]:
        return math.inf
    return max((abs(x[2] - y[2]) for x, y in zip(a, b)), default=0.0)


EXPERIMENTS: dict[str, Callable[..., SweepReport]] = {
    "los_nlos": exp_los_nlos,
    "reflection_shadow": exp_reflection_shadow,
    "rough_grid": exp_rough_grid,
    "random_variance": exp_random_variance,
    "offset_sweep": exp_offset_sweep,
    "regimes": exp_small_reflector_regimes,
    "back_reflection": exp_back_reflection,
    "four_reflector_aoa": exp_four_reflector_aoa,
}


def run_experiment(name: str, *, seed: int | None = None, workers: int = 1) -> SweepReport:
    """Run a named experiment with its default settings (``seed`` where it applies)."""
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; valid: {', '.join(EXPERIMENTS)}")
    if name == "los_nlos":
        return exp_los_nlos(seed=seed)
    if name == "reflection_shadow":
        base = 0 if seed is None else seed
        return exp_reflection_shadow(rough=True, seeds=tuple(range(base, base + 20)))
    if name in ("rough_grid", "random_variance"):
        return EXPERIMENTS[name](seed=0 if seed is None else seed, workers=workers)
    if name == "back_reflection":
        return exp_back_reflection(seed=seed)
    return EXPERIMENTS[name]()
