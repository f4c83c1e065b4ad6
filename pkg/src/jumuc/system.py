"""Power-system data model, case-file IO and the budgeted uncertainty set.

Time periods are 0-based internally; the case file and all reports use
1-based hours (a maintenance task with ``reported_start=5`` starts in
period index 4).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Sequence

import numpy as np

DATA_DIR = Path(__file__).parent / "data"

MEMBERSHIP_TOL = 1e-9


class CaseParseError(ValueError):
    """Case file is not well-formed (bad JSON or missing/mistyped field)."""


class CaseValidationError(ValueError):
    """Case parsed but violates one or more data-model invariants."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid case:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class Bus:
    id: int | str


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: int | str
    to_bus: int | str
    reactance: float  # p.u.
    limit: float  # MW


@dataclass(frozen=True)
class Unit:
    id: str
    bus: int | str
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    startup_ramp: float
    shutdown_ramp: float
    min_up: int
    min_down: int
    startup_cost: float
    no_load_cost: float
    marginal_cost: float


@dataclass(frozen=True)
class Load:
    id: str
    bus: int | str
    forecast: tuple[float, ...]
    half_width: tuple[float, ...] | None = None


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: int | str
    capacity: float
    forecast: tuple[float, ...]
    half_width: tuple[float, ...] | None = None


@dataclass(frozen=True)
class MaintenanceTask:
    unit: str
    duration: int
    reported_start: int  # 1-based hour
    initial_cost: float
    penalty: float  # $/h of deviation from the reported start


@dataclass(frozen=True)
class PowerSystem:
    T: int
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    units: tuple[Unit, ...]
    loads: tuple[Load, ...]
    wind_farms: tuple[WindFarm, ...]
    maintenance: tuple[MaintenanceTask, ...]
    resource_budget: tuple[float, ...]
    reserve_rate: float
    shed_penalty: float
    curtail_penalty: float
    angle_limit: float
    base_mva: float = 100.0
    name: str = ""

    def __post_init__(self):
        problems = validate(self)
        if problems:
            raise CaseValidationError(problems)

    @property
    def bus_ids(self) -> list:
        return [b.id for b in self.buses]

    @property
    def unit_ids(self) -> list[str]:
        return [g.id for g in self.units]

    def unit_index(self, unit_id: str) -> int:
        return self.unit_ids.index(unit_id)

    @property
    def load_forecast(self) -> np.ndarray:
        return np.array([ld.forecast for ld in self.loads], dtype=float).reshape(len(self.loads), self.T)

    @property
    def wind_forecast(self) -> np.ndarray:
        return np.array([w.forecast for w in self.wind_farms], dtype=float).reshape(len(self.wind_farms), self.T)

    def replace(self, **changes) -> "PowerSystem":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return PowerSystem(**kw)


def validate(sys: PowerSystem) -> list[str]:
    """Return every violated invariant (empty list when the system is valid)."""
    out: list[str] = []
    T = sys.T
    if not isinstance(T, int) or T < 1:
        return [f"meta.T must be a positive integer, got {T!r}"]
    bus_ids = [b.id for b in sys.buses]
    if len(set(bus_ids)) != len(bus_ids):
        out.append("buses: duplicate bus ids")
    bus_set = set(bus_ids)
    for ln in sys.lines:
        if ln.from_bus not in bus_set:
            out.append(f"line {ln.id}: from-bus {ln.from_bus!r} is not a bus")
        if ln.to_bus not in bus_set:
            out.append(f"line {ln.id}: to-bus {ln.to_bus!r} is not a bus")
        if ln.from_bus == ln.to_bus:
            out.append(f"line {ln.id}: from-bus and to-bus are equal")
        if not ln.reactance > 0:
            out.append(f"line {ln.id}: reactance must be > 0")
        if not ln.limit > 0:
            out.append(f"line {ln.id}: flow limit must be > 0")
    unit_ids = [g.id for g in sys.units]
    if len(set(unit_ids)) != len(unit_ids):
        out.append("units: duplicate unit ids")
    for g in sys.units:
        if g.bus not in bus_set:
            out.append(f"unit {g.id}: bus {g.bus!r} is not a bus")
        if not 0 <= g.p_min <= g.p_max:
            out.append(f"unit {g.id}: need 0 <= p_min <= p_max")
        if g.startup_ramp < g.p_min:
            out.append(f"unit {g.id}: startup_ramp < p_min")
        if g.shutdown_ramp < g.p_min:
            out.append(f"unit {g.id}: shutdown_ramp < p_min")
        if g.ramp_up < 0 or g.ramp_down < 0:
            out.append(f"unit {g.id}: ramp rates must be >= 0")
        if g.min_up < 1 or g.min_down < 1:
            out.append(f"unit {g.id}: min_up and min_down must be >= 1")
        if min(g.startup_cost, g.no_load_cost, g.marginal_cost) < 0:
            out.append(f"unit {g.id}: costs must be >= 0")
    for ld in sys.loads:
        if ld.bus not in bus_set:
            out.append(f"load {ld.id}: bus {ld.bus!r} is not a bus")
        out += _check_series(f"load {ld.id} forecast", ld.forecast, T)
        if ld.half_width is not None:
            out += _check_series(f"load {ld.id} half_width", ld.half_width, T)
    for w in sys.wind_farms:
        if w.bus not in bus_set:
            out.append(f"wind {w.id}: bus {w.bus!r} is not a bus")
        out += _check_series(f"wind {w.id} forecast", w.forecast, T)
        if len(w.forecast) == T and max(w.forecast, default=0.0) > w.capacity + 1e-9:
            out.append(f"wind {w.id}: forecast exceeds capacity")
        if w.half_width is not None:
            out += _check_series(f"wind {w.id} half_width", w.half_width, T)
    for k, task in enumerate(sys.maintenance):
        if task.unit not in unit_ids:
            out.append(f"maintenance[{k}]: unit {task.unit!r} does not exist")
        if not 1 <= task.duration <= T:
            out.append(f"maintenance[{k}]: duration must be in [1, T]")
        if task.reported_start < 1 or task.reported_start + task.duration - 1 > T:
            out.append(f"maintenance[{k}]: reported window exceeds the horizon")
        if task.initial_cost < 0 or task.penalty < 0:
            out.append(f"maintenance[{k}]: costs must be >= 0")
    if len(sys.resource_budget) != T:
        out.append(f"system.resource_budget must have {T} entries")
    elif min(sys.resource_budget) < 0:
        out.append("system.resource_budget entries must be >= 0")
    if sys.reserve_rate < 0:
        out.append("system.reserve_rate must be >= 0")
    if sys.shed_penalty < 0 or sys.curtail_penalty < 0:
        out.append("system penalties must be >= 0")
    if not sys.angle_limit > 0:
        out.append("system.angle_limit must be > 0")
    if not sys.base_mva > 0:
        out.append("system.base_mva must be > 0")
    return out


def _check_series(what: str, series: Sequence[float], T: int) -> list[str]:
    if len(series) != T:
        return [f"{what}: expected {T} entries, got {len(series)}"]
    if any(not math.isfinite(x) or x < 0 for x in series):
        return [f"{what}: entries must be finite and >= 0"]
    return []


# ---------------------------------------------------------------- case IO

_UNIT_FIELDS = {
    "id": str, "bus": None, "p_min": float, "p_max": float,
    "ramp_up": float, "ramp_down": float, "startup_ramp": float, "shutdown_ramp": float,
    "min_up": int, "min_down": int,
    "startup_cost": float, "no_load_cost": float, "marginal_cost": float,
}


def _field(obj: dict, key: str, where: str, kind=None, default=...):
    if key not in obj:
        if default is not ...:
            return default
        raise CaseParseError(f"{where}: missing field '{key}'")
    val = obj[key]
    try:
        if kind is float:
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise TypeError
            return float(val)
        if kind is int:
            if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
                raise TypeError
            return int(val)
        if kind is str:
            return str(val)
        if kind == "series":
            if not isinstance(val, list):
                raise TypeError
            return tuple(float(x) for x in val)
    except (TypeError, ValueError):
        raise CaseParseError(f"{where}: field '{key}' has invalid value {val!r}") from None
    return val


def _section(doc: dict, key: str, kind=list):
    if key not in doc:
        raise CaseParseError(f"missing top-level section '{key}'")
    if not isinstance(doc[key], kind):
        raise CaseParseError(f"section '{key}' must be a {kind.__name__}")
    return doc[key]


def parse_case(text: str, source: str = "<case>") -> PowerSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CaseParseError(f"{source}: top level must be an object")

    meta = _section(doc, "meta", dict)
    T = _field(meta, "T", "meta", int)
    buses = tuple(Bus(_field(b, "id", f"buses[{i}]")) for i, b in enumerate(_section(doc, "buses")))
    lines = tuple(
        Line(
            id=_field(ln, "id", f"lines[{i}]", str),
            from_bus=_field(ln, "from", f"lines[{i}]"),
            to_bus=_field(ln, "to", f"lines[{i}]"),
            reactance=_field(ln, "x", f"lines[{i}]", float),
            limit=_field(ln, "limit", f"lines[{i}]", float),
        )
        for i, ln in enumerate(_section(doc, "lines"))
    )
    units = tuple(
        Unit(**{k: _field(g, k, f"units[{i}]", kind) for k, kind in _UNIT_FIELDS.items()})
        for i, g in enumerate(_section(doc, "units"))
    )
    loads = []
    for i, ld in enumerate(_section(doc, "loads")):
        hw = _field(ld, "half_width", f"loads[{i}]", "series", default=None)
        loads.append(Load(_field(ld, "id", f"loads[{i}]", str), _field(ld, "bus", f"loads[{i}]"),
                          _field(ld, "forecast", f"loads[{i}]", "series"), hw))
    wind = []
    for i, w in enumerate(_section(doc, "wind")):
        hw = _field(w, "half_width", f"wind[{i}]", "series", default=None)
        wind.append(WindFarm(_field(w, "id", f"wind[{i}]", str), _field(w, "bus", f"wind[{i}]"),
                             _field(w, "capacity", f"wind[{i}]", float),
                             _field(w, "forecast", f"wind[{i}]", "series"), hw))
    tasks = tuple(
        MaintenanceTask(
            unit=_field(m, "unit", f"maintenance[{i}]", str),
            duration=_field(m, "duration", f"maintenance[{i}]", int),
            reported_start=_field(m, "reported_start", f"maintenance[{i}]", int),
            initial_cost=_field(m, "initial_cost", f"maintenance[{i}]", float),
            penalty=_field(m, "penalty", f"maintenance[{i}]", float),
        )
        for i, m in enumerate(_section(doc, "maintenance"))
    )
    s = _section(doc, "system", dict)
    rb = s.get("resource_budget")
    if isinstance(rb, (int, float)) and not isinstance(rb, bool):
        rb = [rb] * T
    rb = _field({"resource_budget": rb} if rb is not None else {}, "resource_budget", "system", "series")
    return PowerSystem(
        T=T, buses=buses, lines=lines, units=units, loads=tuple(loads), wind_farms=tuple(wind),
        maintenance=tasks, resource_budget=rb,
        reserve_rate=_field(s, "reserve_rate", "system", float),
        shed_penalty=_field(s, "shed_penalty", "system", float),
        curtail_penalty=_field(s, "curtail_penalty", "system", float),
        angle_limit=_field(s, "angle_limit", "system", float),
        base_mva=_field(s, "base_mva", "system", float, default=100.0),
        name=str(meta.get("name", "")),
    )


def load_case(path: str | Path) -> PowerSystem:
    """Read a ``.case`` file (JSON document) and return a validated system.

    A bare name such as ``"tiny3"`` resolves to the bundled case of that name.
    """
    path = resolve_case(path)
    return parse_case(path.read_text(), source=str(path))


def resolve_case(path: str | Path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = DATA_DIR / (p.name if p.suffix == ".case" else f"{p.name}.case")
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"case file not found: {path}")


def case_to_dict(sys: PowerSystem) -> dict:
    def series(x):
        return None if x is None else list(x)

    doc = {
        "meta": {"name": sys.name, "T": sys.T},
        "buses": [{"id": b.id} for b in sys.buses],
        "lines": [{"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "x": ln.reactance, "limit": ln.limit}
                  for ln in sys.lines],
        "units": [asdict(g) for g in sys.units],
        "loads": [],
        "wind": [],
        "maintenance": [asdict(m) for m in sys.maintenance],
        "system": {
            "resource_budget": list(sys.resource_budget),
            "reserve_rate": sys.reserve_rate,
            "shed_penalty": sys.shed_penalty,
            "curtail_penalty": sys.curtail_penalty,
            "angle_limit": sys.angle_limit,
            "base_mva": sys.base_mva,
        },
    }
    for ld in sys.loads:
        entry = {"id": ld.id, "bus": ld.bus, "forecast": list(ld.forecast)}
        if ld.half_width is not None:
            entry["half_width"] = series(ld.half_width)
        doc["loads"].append(entry)
    for w in sys.wind_farms:
        entry = {"id": w.id, "bus": w.bus, "capacity": w.capacity, "forecast": list(w.forecast)}
        if w.half_width is not None:
            entry["half_width"] = series(w.half_width)
        doc["wind"].append(entry)
    return doc


def save_case(sys: PowerSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(sys), indent=1) + "\n")


# ---------------------------------------------------------- uncertainty


@dataclass(frozen=True)
class ScenarioRealization:
    load: np.ndarray  # N_D x T, MW
    wind: np.ndarray  # N_W x T, MW

    def to_vector(self) -> np.ndarray:
        return np.concatenate([np.ravel(self.load), np.ravel(self.wind)])

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_load: int, n_wind: int, T: int) -> "ScenarioRealization":
        vec = np.asarray(vec, dtype=float)
        k = n_load * T
        return cls(vec[:k].reshape(n_load, T).copy(), vec[k:k + n_wind * T].reshape(n_wind, T).copy())


@dataclass
class MembershipReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class UncertaintySet:
    load_mean: np.ndarray
    load_dev: np.ndarray
    wind_mean: np.ndarray
    wind_dev: np.ndarray
    gamma_load: float
    gamma_wind: float

    def __post_init__(self):
        for name in ("load_mean", "load_dev", "wind_mean", "wind_dev"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if (self.load_dev < 0).any() or (self.wind_dev < 0).any():
            raise ValueError("half-widths must be >= 0")
        if (self.load_mean - self.load_dev < -1e-12).any():
            raise ValueError("load mean - half-width must be >= 0")
        if (self.wind_mean - self.wind_dev < -1e-12).any():
            raise ValueError("wind mean - half-width must be >= 0")
        if self.gamma_load < 0 or self.gamma_wind < 0:
            raise ValueError("budgets must be >= 0")
        object.__setattr__(self, "gamma_load", float(min(self.gamma_load, self.load_mean.shape[0])))
        object.__setattr__(self, "gamma_wind", float(min(self.gamma_wind, self.wind_mean.shape[0])))

    @property
    def T(self) -> int:
        return self.load_mean.shape[1]

    @property
    def n_load(self) -> int:
        return self.load_mean.shape[0]

    @property
    def n_wind(self) -> int:
        return self.wind_mean.shape[0]

    def center(self) -> ScenarioRealization:
        return ScenarioRealization(np.array(self.load_mean), np.array(self.wind_mean))

    def mean_vector(self) -> np.ndarray:
        return np.concatenate([self.load_mean.ravel(), self.wind_mean.ravel()])

    def dev_vector(self) -> np.ndarray:
        return np.concatenate([self.load_dev.ravel(), self.wind_dev.ravel()])

    def with_budgets(self, gamma_load: float, gamma_wind: float) -> "UncertaintySet":
        return UncertaintySet(self.load_mean, self.load_dev, self.wind_mean, self.wind_dev, gamma_load, gamma_wind)

    @property
    def is_singleton(self) -> bool:
        return (self.gamma_load == 0 or not self.load_dev.any()) and (self.gamma_wind == 0 or not self.wind_dev.any())


def _budget(value: float | str, n: int, what: str) -> float:
    """``"0.2N"`` is a ratio of the population count, a plain number is absolute."""
    if isinstance(value, str):
        s = value.strip()
        if s.upper().endswith("N"):
            ratio = float(s[:-1] or 1.0)
            if ratio < 0:
                raise ValueError(f"{what} must be >= 0")
            return min(ratio * n, n)
        value = float(s)
    if value < 0:
        raise ValueError(f"{what} must be >= 0")
    return min(float(value), n)


def build_uncertainty_set(sys: PowerSystem, error_fraction: float | None = None,
                          gamma_load: float | str = 0.0, gamma_wind: float | str = 0.0) -> UncertaintySet:
    """Build the budgeted set around the case forecasts.

    With ``error_fraction`` given, half-widths are that fraction of the
    forecasts (overriding any in the case file); otherwise the case
    half-widths are used, defaulting to zero.
    """
    D = sys.load_forecast
    W = sys.wind_forecast
    if error_fraction is not None:
        if not 0 <= error_fraction < 1:
            raise ValueError("error_fraction must lie in [0, 1)")
        Dh, Wh = error_fraction * D, error_fraction * W
    else:
        Dh = np.array([ld.half_width or [0.0] * sys.T for ld in sys.loads], dtype=float).reshape(D.shape)
        Wh = np.array([w.half_width or [0.0] * sys.T for w in sys.wind_farms], dtype=float).reshape(W.shape)
    return UncertaintySet(D, Dh, W, Wh,
                          _budget(gamma_load, len(sys.loads), "gamma_load"),
                          _budget(gamma_wind, len(sys.wind_farms), "gamma_wind"))


def check_membership(uset: UncertaintySet, v: ScenarioRealization) -> MembershipReport:
    if np.shape(v.load) != uset.load_mean.shape or np.shape(v.wind) != uset.wind_mean.shape:
        raise ValueError(
            f"dimension mismatch: load {np.shape(v.load)} vs {uset.load_mean.shape}, "
            f"wind {np.shape(v.wind)} vs {uset.wind_mean.shape}"
        )
    bad: list[str] = []
    groups = (("load", v.load, uset.load_mean, uset.load_dev, uset.gamma_load),
              ("wind", v.wind, uset.wind_mean, uset.wind_dev, uset.gamma_wind))
    for name, val, mean, dev, gamma in groups:
        diff = np.abs(np.asarray(val, dtype=float) - mean)
        over = diff > dev + MEMBERSHIP_TOL
        for i, t in zip(*np.nonzero(over)):
            bad.append(f"box: {name}[{i}] period {t + 1} deviates {diff[i, t]:.6g} > {dev[i, t]:.6g}")
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dev > 0, diff / np.where(dev > 0, dev, 1.0), 0.0)
        used = ratio.sum(axis=0)
        for t in np.nonzero(used > gamma + MEMBERSHIP_TOL)[0]:
            bad.append(f"budget: {name} period {t + 1} uses {used[t]:.6g} > {gamma:.6g}")
    return MembershipReport(not bad, bad)
