"""Dataset specification: parsing, validation, and fingerprinting.

A dataset is described by a single JSON document (see the reference
config under ``configs/``).  Unknown fields are rejected rather than
ignored: silent typos corrupt experiments.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import prng

FORMAT_VERSION = 1

VALUE_CONTINUOUS = "continuous"
VALUE_DISCRETE = "discrete-integer"
VALUE_TYPES = (VALUE_CONTINUOUS, VALUE_DISCRETE)

SHAPES = ("constant", "linear", "sine", "square", "sawtooth", "noise")
PERIODIC_SHAPES = ("sine", "square", "sawtooth")

MODE_FREQUENCY = "frequency"
MODE_POINT_COUNT = "point_count"
MODE_EVENT_COUNT = "event_count"
ANOMALY_MODES = (MODE_FREQUENCY, MODE_POINT_COUNT, MODE_EVENT_COUNT)

UNIQUE_OFF = "off"
UNIQUE_SOFT = "soft"
UNIQUE_HARD = "hard"
UNIQUENESS_MODES = (UNIQUE_OFF, UNIQUE_SOFT, UNIQUE_HARD)

MAX_VARIABLES = 1 << 16
MAX_SEED = (1 << 64) - 1

_RESERVED_COLUMNS = ("t", "label")


class SpecError(ValueError):
    """Raised for malformed or schema-violating spec documents."""


@dataclass(frozen=True)
class SignalPrimitive:
    shape: str
    amplitude: float = 1.0
    period: float = 1.0
    phase: float = 0.0
    offset: float = 0.0
    noise_sigma: float = 0.0


@dataclass(frozen=True)
class StochasticVariable:
    name: str
    value_type: str
    normal_range: tuple[float, float]
    anomalous_range: tuple[float, float]

    kind = "stochastic"

    @property
    def discrete(self) -> bool:
        return self.value_type == VALUE_DISCRETE


@dataclass(frozen=True)
class CompositeVariable:
    name: str
    normal: tuple[SignalPrimitive, ...]
    anomalous: tuple[SignalPrimitive, ...]

    kind = "composite"


@dataclass(frozen=True)
class CallbackVariable:
    name: str
    registry_key: str

    kind = "callback"


VariableSpec = StochasticVariable | CompositeVariable | CallbackVariable


@dataclass(frozen=True)
class AnomalySpec:
    mode: str = MODE_FREQUENCY
    f: float = 0.0
    k: int = 0
    e: int = 0
    duration_range: tuple[int, int] = (1, 1)
    allow_overlap: bool = False


@dataclass(frozen=True)
class UniquenessPolicy:
    mode: str = UNIQUE_OFF
    max_tries: int = 100


@dataclass(frozen=True)
class UniquenessSpec:
    normal: UniquenessPolicy = UniquenessPolicy()
    anomalous: UniquenessPolicy = UniquenessPolicy()


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    manifest_path: str | None = None
    labels_column: bool = True


@dataclass(frozen=True)
class DatasetSpec:
    n_timestamps: int
    seed: int
    variables: tuple[VariableSpec, ...]
    anomaly: AnomalySpec = AnomalySpec()
    uniqueness: UniquenessSpec = UniquenessSpec()
    output: OutputSpec = OutputSpec()


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"violations": self.violations, "warnings": self.warnings}


def _require_keys(obj: dict, path: str, allowed: set[str], required: set[str]) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"{path}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SpecError(f"{path}: missing required field(s) {sorted(missing)}")


def _as_int(obj: dict, key: str, path: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SpecError(f"{path}.{key}: expected an integer, got {v!r}")
    return v


def _as_number(obj: dict, key: str, path: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{path}.{key}: expected a number, got {v!r}")
    return float(v)


def _as_str(obj: dict, key: str, path: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise SpecError(f"{path}.{key}: expected a string, got {v!r}")
    return v


def _as_bool(obj: dict, key: str, path: str) -> bool:
    v = obj[key]
    if not isinstance(v, bool):
        raise SpecError(f"{path}.{key}: expected a boolean, got {v!r}")
    return v


def _as_pair(obj: dict, key: str, path: str) -> tuple:
    v = obj[key]
    if not isinstance(v, list) or len(v) != 2:
        raise SpecError(f"{path}.{key}: expected a two-element array [lo, hi]")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SpecError(f"{path}.{key}: bounds must be numbers")
    return tuple(v)


def _parse_primitive(obj: dict, path: str) -> SignalPrimitive:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    allowed = {"shape", "amplitude", "period", "phase", "offset", "noise_sigma"}
    _require_keys(obj, path, allowed, {"shape"})
    shape = _as_str(obj, "shape", path)
    if shape not in SHAPES:
        raise SpecError(f"{path}.shape: {shape!r} is not one of {list(SHAPES)}")
    if shape in PERIODIC_SHAPES and "period" not in obj:
        raise SpecError(f"{path}: shape {shape!r} requires 'period'")
    if shape == "noise" and "noise_sigma" not in obj:
        raise SpecError(f"{path}: shape 'noise' requires 'noise_sigma'")
    kwargs = {"shape": shape}
    for key in ("amplitude", "period", "phase", "offset", "noise_sigma"):
        if key in obj:
            kwargs[key] = _as_number(obj, key, path)
    return SignalPrimitive(**kwargs)


def _parse_variable(obj: dict, path: str) -> VariableSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    if "kind" not in obj or "name" not in obj:
        raise SpecError(f"{path}: 'name' and 'kind' are required")
    name = _as_str(obj, "name", path)
    kind = _as_str(obj, "kind", path)
    if kind == "stochastic":
        _require_keys(
            obj, path,
            {"name", "kind", "value_type", "normal_range", "anomalous_range"},
            {"value_type", "normal_range", "anomalous_range"},
        )
        value_type = _as_str(obj, "value_type", path)
        if value_type not in VALUE_TYPES:
            raise SpecError(f"{path}.value_type: {value_type!r} is not one of {list(VALUE_TYPES)}")
        nr = _as_pair(obj, "normal_range", path)
        ar = _as_pair(obj, "anomalous_range", path)
        if value_type == VALUE_DISCRETE:
            for key, rng in (("normal_range", nr), ("anomalous_range", ar)):
                if any(float(x) != int(x) for x in rng):
                    raise SpecError(f"{path}.{key}: discrete-integer bounds must be integers")
            nr = (int(nr[0]), int(nr[1]))
            ar = (int(ar[0]), int(ar[1]))
        else:
            nr = (float(nr[0]), float(nr[1]))
            ar = (float(ar[0]), float(ar[1]))
        return StochasticVariable(name=name, value_type=value_type,
                                  normal_range=nr, anomalous_range=ar)
    if kind == "composite":
        _require_keys(obj, path, {"name", "kind", "normal", "anomalous"}, {"normal", "anomalous"})
        prims = {}
        for key in ("normal", "anomalous"):
            lst = obj[key]
            if not isinstance(lst, list):
                raise SpecError(f"{path}.{key}: expected an array of primitives")
            prims[key] = tuple(
                _parse_primitive(p, f"{path}.{key}[{i}]") for i, p in enumerate(lst)
            )
        return CompositeVariable(name=name, normal=prims["normal"], anomalous=prims["anomalous"])
    if kind == "callback":
        _require_keys(obj, path, {"name", "kind", "registry_key"}, {"registry_key"})
        return CallbackVariable(name=name, registry_key=_as_str(obj, "registry_key", path))
    raise SpecError(f"{path}.kind: {kind!r} is not one of ['stochastic', 'composite', 'callback']")


def _parse_anomaly(obj: dict, path: str) -> AnomalySpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _require_keys(obj, path, {"mode", "f", "k", "e", "duration_range", "allow_overlap"}, {"mode"})
    mode = _as_str(obj, "mode", path)
    if mode not in ANOMALY_MODES:
        raise SpecError(f"{path}.mode: {mode!r} is not one of {list(ANOMALY_MODES)}")
    param_key = {MODE_FREQUENCY: "f", MODE_POINT_COUNT: "k", MODE_EVENT_COUNT: "e"}[mode]
    extras = ({"f", "k", "e"} & set(obj)) - {param_key}
    if extras:
        raise SpecError(f"{path}: field(s) {sorted(extras)} do not apply to mode {mode!r}")
    if param_key not in obj:
        raise SpecError(f"{path}: mode {mode!r} requires field {param_key!r}")
    kwargs: dict = {"mode": mode}
    if mode == MODE_FREQUENCY:
        kwargs["f"] = _as_number(obj, "f", path)
    elif mode == MODE_POINT_COUNT:
        kwargs["k"] = _as_int(obj, "k", path)
    else:
        kwargs["e"] = _as_int(obj, "e", path)
    if "duration_range" in obj:
        pair = _as_pair(obj, "duration_range", path)
        if any(float(x) != int(x) for x in pair):
            raise SpecError(f"{path}.duration_range: durations must be integers")
        kwargs["duration_range"] = (int(pair[0]), int(pair[1]))
    if "allow_overlap" in obj:
        kwargs["allow_overlap"] = _as_bool(obj, "allow_overlap", path)
    return AnomalySpec(**kwargs)


def _parse_policy(obj: dict, path: str) -> UniquenessPolicy:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _require_keys(obj, path, {"mode", "max_tries"}, {"mode"})
    mode = _as_str(obj, "mode", path)
    if mode not in UNIQUENESS_MODES:
        raise SpecError(f"{path}.mode: {mode!r} is not one of {list(UNIQUENESS_MODES)}")
    kwargs: dict = {"mode": mode}
    if "max_tries" in obj:
        kwargs["max_tries"] = _as_int(obj, "max_tries", path)
    return UniquenessPolicy(**kwargs)


def _parse_output(obj: dict, path: str) -> OutputSpec:
    if not isinstance(obj, dict):
        raise SpecError(f"{path}: expected an object")
    _require_keys(obj, path, {"path", "manifest_path", "labels_column"}, set())
    kwargs: dict = {}
    if "path" in obj:
        kwargs["path"] = _as_str(obj, "path", path)
    if "manifest_path" in obj:
        kwargs["manifest_path"] = _as_str(obj, "manifest_path", path)
    if "labels_column" in obj:
        kwargs["labels_column"] = _as_bool(obj, "labels_column", path)
    return OutputSpec(**kwargs)


def spec_from_document(doc: dict) -> DatasetSpec:
    """Build a DatasetSpec from a parsed JSON document, then validate it."""
    if not isinstance(doc, dict):
        raise SpecError("top level: expected a JSON object")
    allowed = {"format_version", "n_timestamps", "seed", "variables",
               "anomaly", "uniqueness", "output"}
    _require_keys(doc, "top level", allowed, {"n_timestamps", "seed", "variables"})
    if "format_version" in doc:
        fv = _as_int(doc, "format_version", "top level")
        if fv != FORMAT_VERSION:
            raise SpecError(f"top level.format_version: unsupported version {fv}")
    n = _as_int(doc, "n_timestamps", "top level")
    seed = _as_int(doc, "seed", "top level")
    if not isinstance(doc["variables"], list):
        raise SpecError("top level.variables: expected an array")
    variables = tuple(
        _parse_variable(v, f"variables[{i}]") for i, v in enumerate(doc["variables"])
    )
    anomaly = _parse_anomaly(doc["anomaly"], "anomaly") if "anomaly" in doc else AnomalySpec()
    if "uniqueness" in doc:
        uobj = doc["uniqueness"]
        if not isinstance(uobj, dict):
            raise SpecError("uniqueness: expected an object")
        _require_keys(uobj, "uniqueness", {"normal", "anomalous"}, set())
        uniqueness = UniquenessSpec(
            normal=_parse_policy(uobj["normal"], "uniqueness.normal")
            if "normal" in uobj else UniquenessPolicy(),
            anomalous=_parse_policy(uobj["anomalous"], "uniqueness.anomalous")
            if "anomalous" in uobj else UniquenessPolicy(),
        )
    else:
        uniqueness = UniquenessSpec()
    output = _parse_output(doc["output"], "output") if "output" in doc else OutputSpec()

    spec = DatasetSpec(n_timestamps=n, seed=seed, variables=variables,
                       anomaly=anomaly, uniqueness=uniqueness, output=output)
    report = validate_spec(spec)
    if not report.ok:
        raise SpecError("; ".join(report.violations))
    return spec


def parse_spec(text: str) -> DatasetSpec:
    """Parse a JSON spec document; raises SpecError with position or path."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return spec_from_document(doc)


def load_spec(path: str) -> DatasetSpec:
    with open(path, encoding="utf-8") as f:
        return parse_spec(f.read())


def _primitive_to_document(p: SignalPrimitive) -> dict:
    return {
        "shape": p.shape,
        "amplitude": float(p.amplitude),
        "period": float(p.period),
        "phase": float(p.phase),
        "offset": float(p.offset),
        "noise_sigma": float(p.noise_sigma),
    }


def _variable_to_document(v: VariableSpec) -> dict:
    if isinstance(v, StochasticVariable):
        return {
            "name": v.name,
            "kind": "stochastic",
            "value_type": v.value_type,
            "normal_range": list(v.normal_range),
            "anomalous_range": list(v.anomalous_range),
        }
    if isinstance(v, CompositeVariable):
        return {
            "name": v.name,
            "kind": "composite",
            "normal": [_primitive_to_document(p) for p in v.normal],
            "anomalous": [_primitive_to_document(p) for p in v.anomalous],
        }
    return {"name": v.name, "kind": "callback", "registry_key": v.registry_key}


def spec_to_document(spec: DatasetSpec) -> dict:
    """Serialize a spec back to its document form (parse round-trips)."""
    anomaly: dict = {"mode": spec.anomaly.mode}
    if spec.anomaly.mode == MODE_FREQUENCY:
        anomaly["f"] = float(spec.anomaly.f)
    elif spec.anomaly.mode == MODE_POINT_COUNT:
        anomaly["k"] = int(spec.anomaly.k)
    else:
        anomaly["e"] = int(spec.anomaly.e)
    anomaly["duration_range"] = list(spec.anomaly.duration_range)
    anomaly["allow_overlap"] = spec.anomaly.allow_overlap
    doc: dict = {
        "format_version": FORMAT_VERSION,
        "n_timestamps": spec.n_timestamps,
        "seed": spec.seed,
        "variables": [_variable_to_document(v) for v in spec.variables],
        "anomaly": anomaly,
        "uniqueness": {
            "normal": {"mode": spec.uniqueness.normal.mode,
                       "max_tries": spec.uniqueness.normal.max_tries},
            "anomalous": {"mode": spec.uniqueness.anomalous.mode,
                          "max_tries": spec.uniqueness.anomalous.max_tries},
        },
        "output": {
            "labels_column": spec.output.labels_column,
        },
    }
    if spec.output.path is not None:
        doc["output"]["path"] = spec.output.path
    if spec.output.manifest_path is not None:
        doc["output"]["manifest_path"] = spec.output.manifest_path
    return doc


def expected_anomalous_points(spec: DatasetSpec) -> int:
    """Anomalous-point budget implied by the anomaly mode (lower bound
    for event_count mode, where only event count is pinned)."""
    a = spec.anomaly
    if a.mode == MODE_FREQUENCY:
        return int(a.f * spec.n_timestamps + 0.5)
    if a.mode == MODE_POINT_COUNT:
        return a.k
    return a.e * a.duration_range[0]


def _check_primitive(p: SignalPrimitive, path: str, out: list[str]) -> None:
    if p.shape not in SHAPES:
        out.append(f"{path}: unknown shape {p.shape!r}")
        return
    if p.shape in PERIODIC_SHAPES:
        if p.period <= 0:
            out.append(f"{path}: period must be > 0, got {p.period}")
        if not 0.0 <= p.phase < 1.0:
            out.append(f"{path}: phase must be in [0, 1), got {p.phase}")
    if p.shape == "noise" and p.noise_sigma < 0:
        out.append(f"{path}: noise_sigma must be >= 0, got {p.noise_sigma}")


def validate_spec(spec: DatasetSpec) -> ValidationReport:
    """Check every invariant and cross-field constraint; violations are
    data, not exceptions.  An empty violation list means generatable."""
    report = ValidationReport()
    v = report.violations

    if spec.n_timestamps < 1:
        v.append(f"n_timestamps must be >= 1, got {spec.n_timestamps}")
    if not 0 <= spec.seed <= MAX_SEED:
        v.append("seed must be a 64-bit unsigned integer")

    if len(spec.variables) < 1:
        v.append("at least one variable is required")
    if len(spec.variables) > MAX_VARIABLES:
        v.append(f"at most {MAX_VARIABLES} variables are supported")
    seen: set[str] = set()
    for i, var in enumerate(spec.variables):
        path = f"variables[{i}]"
        if not var.name:
            v.append(f"{path}: name must be non-empty")
        elif var.name in seen:
            v.append(f"{path}: duplicate name {var.name!r}")
        elif var.name in _RESERVED_COLUMNS:
            v.append(f"{path}: name {var.name!r} collides with a reserved column")
        elif any(ch in var.name for ch in ",\r\n"):
            v.append(f"{path}: name must not contain commas or newlines")
        seen.add(var.name)
        if isinstance(var, StochasticVariable):
            for key, rng in (("normal_range", var.normal_range),
                             ("anomalous_range", var.anomalous_range)):
                if rng[0] > rng[1]:
                    v.append(f"{path}.{key}: lo <= hi required, got {list(rng)}")
        elif isinstance(var, CompositeVariable):
            for key, prims in (("normal", var.normal), ("anomalous", var.anomalous)):
                if not prims:
                    v.append(f"{path}.{key}: primitive list must be non-empty")
                for j, p in enumerate(prims):
                    _check_primitive(p, f"{path}.{key}[{j}]", v)
        elif isinstance(var, CallbackVariable):
            if not var.registry_key:
                v.append(f"{path}: registry_key must be non-empty")

    a = spec.anomaly
    d_min, d_max = a.duration_range
    if a.mode not in ANOMALY_MODES:
        v.append(f"anomaly.mode: unknown mode {a.mode!r}")
    if a.mode == MODE_FREQUENCY and not 0.0 <= a.f <= 1.0:
        v.append(f"anomaly.f must be in [0, 1], got {a.f}")
    if a.mode == MODE_POINT_COUNT:
        if a.k < 0:
            v.append(f"anomaly.k must be >= 0, got {a.k}")
        elif a.k > spec.n_timestamps:
            v.append(f"anomaly.k ({a.k}) exceeds n_timestamps ({spec.n_timestamps})")
    if a.mode == MODE_EVENT_COUNT:
        if a.e < 0:
            v.append(f"anomaly.e must be >= 0, got {a.e}")
        elif not a.allow_overlap and a.e * d_min > spec.n_timestamps:
            v.append(f"anomaly.e: {a.e} events of length >= {d_min} cannot fit "
                     f"in {spec.n_timestamps} timestamps without overlap")
    if not 1 <= d_min <= d_max:
        v.append(f"anomaly.duration_range: 1 <= d_min <= d_max required, got {[d_min, d_max]}")
    elif d_max > spec.n_timestamps:
        v.append(f"anomaly.duration_range: d_max ({d_max}) exceeds "
                 f"n_timestamps ({spec.n_timestamps})")

    for cls_name, policy in (("normal", spec.uniqueness.normal),
                             ("anomalous", spec.uniqueness.anomalous)):
        path = f"uniqueness.{cls_name}"
        if policy.mode not in UNIQUENESS_MODES:
            v.append(f"{path}.mode: unknown mode {policy.mode!r}")
        if policy.max_tries < 1:
            v.append(f"{path}.max_tries must be >= 1, got {policy.max_tries}")
        elif policy.max_tries > prng.ATTEMPT_LIMIT:
            v.append(f"{path}.max_tries must be <= {prng.ATTEMPT_LIMIT}, "
                     f"got {policy.max_tries}")

    if not v:
        _warn_unsatisfiable_uniqueness(spec, report.warnings)
    return report


def _warn_unsatisfiable_uniqueness(spec: DatasetSpec, warnings: list[str]) -> None:
    # A discrete variable under hard uniqueness can only ever emit
    # (hi - lo + 1) distinct values per class; flag specs that will
    # predictably request more.
    budget = expected_anomalous_points(spec)
    demand = {"normal": spec.n_timestamps - budget, "anomalous": budget}
    for i, var in enumerate(spec.variables):
        if not isinstance(var, StochasticVariable) or not var.discrete:
            continue
        for cls_name, rng in (("normal", var.normal_range),
                              ("anomalous", var.anomalous_range)):
            policy = getattr(spec.uniqueness, cls_name)
            if policy.mode != UNIQUE_HARD:
                continue
            domain = int(rng[1]) - int(rng[0]) + 1
            if demand[cls_name] > domain:
                warnings.append(
                    f"variables[{i}] ({var.name!r}): hard uniqueness may be "
                    f"unsatisfiable -- about {demand[cls_name]} {cls_name} points "
                    f"requested from a domain of {domain} values"
                )


def spec_fingerprint(spec: DatasetSpec) -> str:
    """SHA-256 of the canonical spec serialization (sorted keys, typed
    numbers).  Identifies the generated data, so the output section is
    excluded: where a dataset is written does not change its content."""
    doc = spec_to_document(spec)
    doc.pop("output", None)
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
