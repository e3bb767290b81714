"""Scene description, scenario documents and seeded scene expansion.

A scenario document is YAML (JSON is accepted too) with the top-level keys
``transmitter``, ``reflectors``, ``antenna``, ``path``, ``frequencies`` and
``seed``, plus optional ``name``/``description``. Lengths are metres, angles
degrees CCW from +x, frequencies Hz, power watts.

All randomness flows from ``numpy.random.SeedSequence(seed, spawn_key=...)``
with a stable key per object, so adding an object never changes the draws
of another.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .geometry import Aperture, GeometryError, Point2, Segment
from .propagation import Antenna, FrequencySpec, Transmitter, illumination_warnings

ROUGHEN_STREAM = 1
SPAWN_STREAM = 2

RANDOM_REGION = ((5.0, 20.0), (-5.0, 7.0))
RANDOM_ANGLES = (90.0, 270.0)
RANDOM_LENGTHS = (0.0, 2.0)


class ScenarioError(ValueError):
    """Invalid scenario document; ``field`` names the offending entry."""

    def __init__(self, field_name: str, constraint: str):
        self.field = field_name
        self.constraint = constraint
        super().__init__(f"{field_name}: {constraint}")


@dataclass(frozen=True)
class RoughnessSpec:
    sub_length: float
    max_offset: float
    seed_offset: int = 0


@dataclass(frozen=True)
class Reflector:
    geometry: Segment
    reflectivity: float = 1.0
    phase: float = 0.0
    radius: float | None = None
    roughness: RoughnessSpec | None = None

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ScenarioError("reflectivity", "reflectivity out of [0,1]")
        if self.radius is not None and not self.radius > 0:
            raise ScenarioError("radius", "radius must be > 0")


@dataclass(frozen=True)
class PathSpec:
    start: Point2
    end: Point2
    samples: int

    def __post_init__(self):
        if int(self.samples) != self.samples or self.samples < 2:
            raise ScenarioError("path.samples", "samples must be an integer >= 2")
        if tuple(self.start) == tuple(self.end):
            raise ScenarioError("path", "start and end must differ")

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)


@dataclass
class Scenario:
    transmitter: Transmitter
    reflectors: list[Reflector]
    antenna: Antenna
    path: PathSpec
    frequencies: list[FrequencySpec]
    seed: int = 0
    name: str = ""
    description: str = ""
    warnings: list[str] = field(default_factory=list, compare=False)

    def expanded_reflectors(self, seed: int | None = None) -> list[Reflector]:
        """Reflectors with roughness applied (rough ones replaced by pieces)."""
        master = self.seed if seed is None else seed
        out: list[Reflector] = []
        for refl in self.reflectors:
            out.extend(roughen(refl, master) if refl.roughness else [refl])
        return out

    def hash(self) -> str:
        blob = json.dumps(scenario_to_dict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def rng_for(master_seed: int, *key: int) -> np.random.Generator:
    """Platform-independent generator for one derived stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(master_seed), spawn_key=key)))


def roughen(reflector: Reflector, master_seed: int) -> list[Reflector]:
    """Split a reflector into contiguous, randomly displaced sub-reflectors.

    Each piece is shifted perpendicular to the parent by an independent
    uniform draw in [-max_offset, max_offset].
    """
    spec = reflector.roughness
    if spec is None:
        raise ScenarioError("roughness", "reflector has no roughness spec")
    seg = reflector.geometry
    rng = rng_for(master_seed, ROUGHEN_STREAM, spec.seed_offset)
    if spec.sub_length > seg.length:
        warnings.warn("sub_length exceeds reflector length; using one displaced piece", stacklevel=2)
        pieces = [seg.length]
    else:
        count = max(1, math.ceil(seg.length / spec.sub_length - 1e-9))
        pieces = [spec.sub_length] * (count - 1)
        pieces.append(seg.length - spec.sub_length * (count - 1))
    offsets = rng.uniform(-spec.max_offset, spec.max_offset, size=len(pieces))
    t, n = seg.direction, seg.normal
    start = np.asarray(seg.center) - 0.5 * seg.length * t
    out = []
    pos = 0.0
    for length, off in zip(pieces, offsets):
        mid = start + (pos + 0.5 * length) * t + off * n
        pos += length
        out.append(replace(reflector, geometry=Segment(Point2(*mid), length, seg.angle), roughness=None))
    return out


def spawn_random_reflectors(
    count: int,
    seed: int,
    region=RANDOM_REGION,
    angle_range=RANDOM_ANGLES,
    length_range=RANDOM_LENGTHS,
    randomize: Iterable[str] = ("position", "angle", "length"),
    base: Sequence[Reflector] | None = None,
) -> list[Reflector]:
    """Uniformly random reflectors; one stream per reflector index.

    Fields not listed in ``randomize`` are taken from ``base[i]`` (all
    four draws are always consumed, so toggling never shifts the stream).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    randomize = set(randomize)
    unknown = randomize - {"position", "angle", "length"}
    if unknown:
        raise ValueError(f"unknown randomisation toggles {sorted(unknown)}")
    if randomize != {"position", "angle", "length"} and (base is None or len(base) < count):
        raise ValueError("a base layout is needed when some fields are fixed")
    (x0, x1), (y0, y1) = region
    out = []
    for i in range(count):
        rng = rng_for(seed, SPAWN_STREAM, i)
        x, y = rng.uniform(x0, x1), rng.uniform(y0, y1)
        angle = rng.uniform(*angle_range)
        length = rng.uniform(*length_range)
        if base is not None and len(randomize) < 3:
            ref = base[i].geometry
            if "position" not in randomize:
                x, y = ref.center
            if "angle" not in randomize:
                angle = ref.angle
            if "length" not in randomize:
                length = ref.length
        out.append(Reflector(Segment(Point2(x, y), length, angle)))
    return out


def sample_path(path: PathSpec) -> np.ndarray:
    """``samples`` equally spaced points, start and end included, shape (N, 2)."""
    t = np.linspace(0.0, 1.0, int(path.samples))
    a = np.asarray(path.start, dtype=float)
    b = np.asarray(path.end, dtype=float)
    return a + t[:, None] * (b - a)


# ---------------------------------------------------------------- loading

_TOP_KEYS = {"transmitter", "reflectors", "antenna", "path", "frequencies", "seed", "name", "description"}
_REQUIRED = {"transmitter", "path", "frequencies"}


def _num(value: Any, name: str, *, allow_inf: bool = False) -> float:
    if isinstance(value, bool):
        raise ScenarioError(name, "expected a number")
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", ".inf", "infinity"):
            value = math.inf
        elif text in ("-inf", "-.inf", "-infinity"):
            value = -math.inf
        else:
            try:
                value = float(text)
            except ValueError:
                raise ScenarioError(name, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise ScenarioError(name, f"expected a number, got {type(value).__name__}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ScenarioError(name, "must be finite")
    return value


def _int(value: Any, name: str) -> int:
    v = _num(value, name)
    if v != int(v):
        raise ScenarioError(name, "expected an integer")
    return int(v)


def _point(value: Any, name: str) -> Point2:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(name, "expected a point [x, y]")
    return Point2(_num(value[0], f"{name}[0]"), _num(value[1], f"{name}[1]"))


def _mapping(value: Any, name: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(name, "expected a mapping")
    extra = set(value) - allowed
    if extra:
        raise ScenarioError(name, f"unknown keys {sorted(map(str, extra))}")
    missing = set(required) - set(value)
    if missing:
        raise ScenarioError(name, f"missing keys {sorted(missing)}")
    return value


def _aperture(doc: Any) -> Aperture | None:
    if doc is None:
        return None
    d = _mapping(doc, "transmitter.aperture", {"center", "angle", "lo", "hi", "length"}, {"center", "angle"})
    center = _point(d["center"], "transmitter.aperture.center")
    angle = _num(d["angle"], "transmitter.aperture.angle")
    if "length" in d:
        if "lo" in d or "hi" in d:
            raise ScenarioError("transmitter.aperture", "give either length or lo/hi")
        length = _num(d["length"], "transmitter.aperture.length", allow_inf=True)
        if length < 0:
            raise ScenarioError("transmitter.aperture.length", "must be >= 0")
        return Aperture(center, angle, -0.5 * length, 0.5 * length)
    lo = _num(d.get("lo", -math.inf), "transmitter.aperture.lo", allow_inf=True)
    hi = _num(d.get("hi", math.inf), "transmitter.aperture.hi", allow_inf=True)
    if lo > hi:
        raise ScenarioError("transmitter.aperture", "lo must be <= hi")
    return Aperture(center, angle, lo, hi)


def _transmitter(doc: Any) -> Transmitter:
    d = _mapping(doc, "transmitter", {"position", "input_power", "gain", "aperture"}, {"position"})
    power = _num(d.get("input_power", 1.0), "transmitter.input_power")
    gain = _num(d.get("gain", 1.0), "transmitter.gain")
    if power <= 0:
        raise ScenarioError("transmitter.input_power", "must be > 0")
    if gain <= 0:
        raise ScenarioError("transmitter.gain", "must be > 0")
    return Transmitter(_point(d["position"], "transmitter.position"), power, gain, _aperture(d.get("aperture")))


def _reflector(doc: Any, i: int) -> Reflector:
    name = f"reflectors[{i}]"
    d = _mapping(doc, name, {"center", "length", "angle", "reflectivity", "phase", "radius", "roughness"},
                 {"center", "length", "angle"})
    length = _num(d["length"], f"{name}.length")
    if length < 0:
        raise ScenarioError(f"{name}.length", "must be >= 0")
    refl = _num(d.get("reflectivity", 1.0), f"{name}.reflectivity")
    if not 0.0 <= refl <= 1.0:
        raise ScenarioError(f"{name}.reflectivity", "reflectivity out of [0,1]")
    radius = d.get("radius")
    if radius is not None:
        radius = _num(radius, f"{name}.radius")
        if radius <= 0:
            raise ScenarioError(f"{name}.radius", "must be > 0")
    rough = None
    if d.get("roughness") is not None:
        r = _mapping(d["roughness"], f"{name}.roughness", {"sub_length", "max_offset", "seed_offset"},
                     {"sub_length", "max_offset"})
        sub = _num(r["sub_length"], f"{name}.roughness.sub_length")
        off = _num(r["max_offset"], f"{name}.roughness.max_offset")
        if sub <= 0:
            raise ScenarioError(f"{name}.roughness.sub_length", "must be > 0")
        if off < 0:
            raise ScenarioError(f"{name}.roughness.max_offset", "must be >= 0")
        rough = RoughnessSpec(sub, off, _int(r.get("seed_offset", i), f"{name}.roughness.seed_offset"))
    seg = Segment(_point(d["center"], f"{name}.center"), length, _num(d["angle"], f"{name}.angle"))
    return Reflector(seg, refl, _num(d.get("phase", 0.0), f"{name}.phase"), radius, rough)


def _antenna(doc: Any) -> Antenna:
    if doc is None:
        return Antenna()
    d = _mapping(doc, "antenna", {"pattern", "boresight", "exponent", "floor"})
    pattern = d.get("pattern", "isotropic")
    if pattern == "isotropic":
        if len(d) > 1:
            raise ScenarioError("antenna", "isotropic pattern takes no parameters")
        return Antenna()
    if pattern == "cosine":
        if "boresight" not in d:
            raise ScenarioError("antenna.boresight", "required for the cosine pattern")
        floor = _num(d.get("floor", 0.0), "antenna.floor")
        exponent = _num(d.get("exponent", 2.0), "antenna.exponent")
        if floor < 0 or exponent < 0:
            raise ScenarioError("antenna", "exponent and floor must be >= 0")
        return Antenna.cosine(_num(d["boresight"], "antenna.boresight"), exponent, floor)
    raise ScenarioError("antenna.pattern", f"unknown pattern {pattern!r}")


def _frequency(doc: Any, i: int) -> FrequencySpec:
    name = f"frequencies[{i}]"
    if not isinstance(doc, dict):
        doc = {"center": doc}
    d = _mapping(doc, name, {"center", "band_fraction", "band_points"}, {"center"})
    center = _num(d["center"], f"{name}.center")
    frac = _num(d.get("band_fraction", 0.0), f"{name}.band_fraction")
    points = _int(d.get("band_points", 1), f"{name}.band_points")
    if center <= 0:
        raise ScenarioError(f"{name}.center", "must be > 0")
    if frac < 0:
        raise ScenarioError(f"{name}.band_fraction", "must be >= 0")
    if points < 1:
        raise ScenarioError(f"{name}.band_points", "must be >= 1")
    if frac == 0 and points != 1:
        raise ScenarioError(f"{name}.band_points", "band_fraction = 0 requires band_points = 1")
    return FrequencySpec(center, frac, points)


def _path(doc: Any) -> PathSpec:
    d = _mapping(doc, "path", {"start", "end", "samples"}, {"start", "end", "samples"})
    start = _point(d["start"], "path.start")
    end = _point(d["end"], "path.end")
    samples = _int(d["samples"], "path.samples")
    if samples < 2:
        raise ScenarioError("path.samples", "must be >= 2")
    if start == end:
        raise ScenarioError("path", "start and end must differ")
    return PathSpec(start, end, samples)


def parse_scenario(doc: Any) -> Scenario:
    """Validate an already-parsed document (a mapping)."""
    d = _mapping(doc, "scenario", _TOP_KEYS, _REQUIRED)
    tx = _transmitter(d["transmitter"])
    refl_doc = d.get("reflectors") or []
    if not isinstance(refl_doc, list):
        raise ScenarioError("reflectors", "expected a list")
    reflectors = [_reflector(r, i) for i, r in enumerate(refl_doc)]
    freq_doc = d["frequencies"]
    if not isinstance(freq_doc, list) or not freq_doc:
        raise ScenarioError("frequencies", "expected a non-empty list")
    freqs = [_frequency(f, i) for i, f in enumerate(freq_doc)]
    seed = _int(d.get("seed", 0), "seed")
    for key in ("name", "description"):
        if key in d and not isinstance(d[key], str):
            raise ScenarioError(key, "expected a string")
    try:
        scen = Scenario(tx, reflectors, _antenna(d.get("antenna")), _path(d["path"]), freqs, seed,
                        d.get("name", ""), d.get("description", ""))
    except GeometryError as exc:
        raise ScenarioError("geometry", str(exc)) from None
    scen.warnings = illumination_warnings(tx, reflectors)
    return scen


def load_scenario(document: str) -> Scenario:
    """Parse and validate scenario text; raises ``ScenarioError``."""
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ScenarioError("document", f"parse error: {exc}") from None
    return parse_scenario(doc)


def read_scenario(path: str | Path) -> Scenario:
    return load_scenario(Path(path).read_text())


def builtin_scenario_names() -> list[str]:
    root = resources.files("fresnelsim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def builtin_scenario(name: str) -> Scenario:
    """One of the shipped reconstructed scenario documents."""
    root = resources.files("fresnelsim") / "scenarios"
    try:
        text = (root / f"{name}.yaml").read_text()
    except FileNotFoundError:
        raise KeyError(f"no shipped scenario {name!r}; have {builtin_scenario_names()}") from None
    return load_scenario(text)


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of ``parse_scenario`` for programmatically built scenes."""

    def seg(r: Reflector):
        out = {"center": list(r.geometry.center), "length": r.geometry.length, "angle": r.geometry.angle,
               "reflectivity": r.reflectivity, "phase": r.phase}
        if r.radius is not None:
            out["radius"] = r.radius
        if r.roughness is not None:
            out["roughness"] = {"sub_length": r.roughness.sub_length, "max_offset": r.roughness.max_offset,
                                "seed_offset": r.roughness.seed_offset}
        return out

    tx = s.transmitter
    txd: dict = {"position": list(tx.position), "input_power": tx.input_power, "gain": tx.gain}
    if tx.aperture is not None:
        ap = tx.aperture
        txd["aperture"] = {"center": list(ap.center), "angle": ap.angle, "lo": ap.lo, "hi": ap.hi}
    return {
        "transmitter": txd,
        "reflectors": [seg(r) for r in s.reflectors],
        "antenna": dict(s.antenna.params),
        "path": {"start": list(s.path.start), "end": list(s.path.end), "samples": s.path.samples},
        "frequencies": [{"center": f.center, "band_fraction": f.band_fraction, "band_points": f.band_points}
                        for f in s.frequencies],
        "seed": s.seed,
    }
