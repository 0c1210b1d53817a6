"""Problem instance: grid geometry, cell classes, attack distribution, detectors.

Cells are numbered 1..rows*cols in row-major order. Cell ``j`` sits at row
``(j - 1) // cols`` and column ``(j - 1) % cols`` (both 0-based).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

GAMMA_SUM_TOL = 1e-9

Point = tuple[float, float]


class ScenarioError(ValueError):
    """Raised when a scenario document cannot be mapped onto a GridScenario."""


@dataclass(frozen=True)
class DetectorSpec:
    radius_alpha: float
    rate_beta: float
    unit_cost_psi: float
    budget_M: float

    @property
    def max_count(self) -> int:
        """Largest number of detectors the budget can buy."""
        if self.budget_M < 0 or self.unit_cost_psi <= 0:
            return 0
        return int(math.floor(self.budget_M / self.unit_cost_psi + 1e-12))


@dataclass(frozen=True)
class GridScenario:
    rows: int
    cols: int
    cell_size: float
    blocked: frozenset[int]
    entrances: tuple[int, ...]
    targets: tuple[tuple[int, float], ...]
    gamma: Mapping[tuple[int, int], float]
    speed_k: float
    response_time_chi: float
    theta1: float
    theta2: float
    primary_spec: DetectorSpec
    secondary_spec: DetectorSpec
    name: str | None = field(default=None, compare=False)

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def target_cells(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.targets)

    @property
    def zeta(self) -> dict[int, float]:
        return {j: z for j, z in self.targets}

    @property
    def buffer_m(self) -> float:
        """Timeliness buffer k*chi in meters of remaining path."""
        return self.speed_k * self.response_time_chi

    def is_blocked(self, j: int) -> bool:
        return j in self.blocked

    def unblocked(self) -> list[int]:
        return [j for j in range(1, self.n_cells + 1) if j not in self.blocked]

    def positive_pairs(self) -> list[tuple[int, int]]:
        """(entrance, target) pairs with gamma > 0, sorted."""
        return sorted(k for k, p in self.gamma.items() if p > 0)

    def total_weight(self) -> float:
        """Sum of zeta_j * gamma_ej, the casualty count with no detection."""
        zeta = self.zeta
        return math.fsum(zeta[j] * p for (_, j), p in sorted(self.gamma.items()) if p > 0)

    def replace(self, **changes: Any) -> "GridScenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    indices: tuple[int, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "indices": list(self.indices)}


def cell_rc(s: GridScenario, j: int) -> tuple[int, int]:
    if not 1 <= j <= s.n_cells:
        raise IndexError(f"cell index {j} out of range 1..{s.n_cells}")
    return (j - 1) // s.cols, (j - 1) % s.cols


def cell_index(s: GridScenario, r: int, c: int) -> int:
    return r * s.cols + c + 1


def cell_center(s: GridScenario, j: int) -> Point:
    r, c = cell_rc(s, j)
    return ((c + 0.5) * s.cell_size, (r + 0.5) * s.cell_size)


# --- scenario documents -----------------------------------------------------

_TOP_FIELDS = {
    "rows", "cols", "cell_size_m", "blocked", "entrances", "targets", "gamma",
    "speed_k_mps", "response_time_chi_s", "theta1", "theta2", "primary", "secondary",
}
_OPTIONAL_FIELDS = {"name", "blocked"}
_DETECTOR_FIELDS = {"alpha_m", "beta_per_m", "psi", "budget"}


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {type(value).__name__}")
    return value


def _check_fields(obj: Any, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown field {unknown[0]!r}")
    missing = sorted(required - set(obj))
    if missing:
        raise ScenarioError(f"{where}: missing required field {missing[0]!r}")


def _detector(obj: Any, where: str) -> DetectorSpec:
    _check_fields(obj, _DETECTOR_FIELDS, _DETECTOR_FIELDS, where)
    return DetectorSpec(
        radius_alpha=_number(obj["alpha_m"], f"{where}.alpha_m"),
        rate_beta=_number(obj["beta_per_m"], f"{where}.beta_per_m"),
        unit_cost_psi=_number(obj["psi"], f"{where}.psi"),
        budget_M=_number(obj["budget"], f"{where}.budget"),
    )


def scenario_from_dict(doc: Mapping[str, Any]) -> GridScenario:
    """Map a decoded scenario document onto a GridScenario (no semantic checks)."""
    _check_fields(doc, _TOP_FIELDS | _OPTIONAL_FIELDS, _TOP_FIELDS - _OPTIONAL_FIELDS, "scenario")
    rows = _integer(doc["rows"], "rows")
    cols = _integer(doc["cols"], "cols")
    if rows <= 0 or cols <= 0:
        raise ScenarioError("rows/cols: must be positive")
    n = rows * cols

    def index(value: Any, where: str) -> int:
        j = _integer(value, where)
        if not 1 <= j <= n:
            raise ScenarioError(f"{where}: index out of range ({j} not in 1..{n})")
        return j

    blocked = doc.get("blocked", [])
    if not isinstance(blocked, list):
        raise ScenarioError("blocked: expected an array")
    entrances = doc["entrances"]
    if not isinstance(entrances, list):
        raise ScenarioError("entrances: expected an array")
    targets_doc = doc["targets"]
    if not isinstance(targets_doc, list):
        raise ScenarioError("targets: expected an array")
    targets = []
    for t, item in enumerate(targets_doc):
        _check_fields(item, {"cell", "zeta"}, {"cell", "zeta"}, f"targets[{t}]")
        targets.append((index(item["cell"], f"targets[{t}].cell"),
                        _number(item["zeta"], f"targets[{t}].zeta")))
    gamma_doc = doc["gamma"]
    if not isinstance(gamma_doc, list):
        raise ScenarioError("gamma: expected an array")
    gamma: dict[tuple[int, int], float] = {}
    for g, item in enumerate(gamma_doc):
        where = f"gamma[{g}]"
        _check_fields(item, {"entrance", "target", "p"}, {"entrance", "target", "p"}, where)
        key = (index(item["entrance"], f"{where}.entrance"), index(item["target"], f"{where}.target"))
        if key in gamma:
            raise ScenarioError(f"{where}: duplicate pair {key}")
        gamma[key] = _number(item["p"], f"{where}.p")

    cell_size = _number(doc["cell_size_m"], "cell_size_m")
    return GridScenario(
        rows=rows,
        cols=cols,
        cell_size=cell_size,
        blocked=frozenset(index(b, f"blocked[{i}]") for i, b in enumerate(blocked)),
        entrances=tuple(index(e, f"entrances[{i}]") for i, e in enumerate(entrances)),
        targets=tuple(targets),
        gamma=gamma,
        speed_k=_number(doc["speed_k_mps"], "speed_k_mps"),
        response_time_chi=_number(doc["response_time_chi_s"], "response_time_chi_s"),
        theta1=_number(doc["theta1"], "theta1"),
        theta2=_number(doc["theta2"], "theta2"),
        primary_spec=_detector(doc["primary"], "primary"),
        secondary_spec=_detector(doc["secondary"], "secondary"),
        name=doc.get("name"),
    )


def parse_scenario(text: str) -> GridScenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def load_scenario(path: str) -> GridScenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(s: GridScenario) -> dict[str, Any]:
    def det(d: DetectorSpec) -> dict[str, float]:
        return {"alpha_m": d.radius_alpha, "beta_per_m": d.rate_beta,
                "psi": d.unit_cost_psi, "budget": d.budget_M}

    doc: dict[str, Any] = {
        "rows": s.rows,
        "cols": s.cols,
        "cell_size_m": s.cell_size,
        "blocked": sorted(s.blocked),
        "entrances": list(s.entrances),
        "targets": [{"cell": j, "zeta": z} for j, z in s.targets],
        "gamma": [{"entrance": e, "target": j, "p": p} for (e, j), p in sorted(s.gamma.items())],
        "speed_k_mps": s.speed_k,
        "response_time_chi_s": s.response_time_chi,
        "theta1": s.theta1,
        "theta2": s.theta2,
        "primary": det(s.primary_spec),
        "secondary": det(s.secondary_spec),
    }
    if s.name is not None:
        doc["name"] = s.name
    return doc


def serialize_scenario(s: GridScenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True)


# --- semantic validation ------------------------------------------------------

def _finite(x: float) -> bool:
    return math.isfinite(x)


def validate_scenario(s: GridScenario) -> list[Violation]:
    """Return every invariant violation in ``s``; an empty list means valid."""
    from .pathing import reachable_from

    out: list[Violation] = []
    n = s.n_cells
    if s.rows <= 0 or s.cols <= 0:
        out.append(Violation("grid", "rows and cols must be positive"))
    if not (_finite(s.cell_size) and s.cell_size > 0):
        out.append(Violation("cell_size", f"cell size {s.cell_size} must be > 0"))

    for name, cells in (("blocked", s.blocked), ("entrances", s.entrances),
                        ("targets", s.target_cells)):
        bad = sorted(j for j in cells if not 1 <= j <= n)
        if bad:
            out.append(Violation("index", f"{name}: index out of range", tuple(bad)))
    for name, cells in (("entrances", s.entrances), ("targets", s.target_cells)):
        dup = sorted({j for j in cells if list(cells).count(j) > 1})
        if dup:
            out.append(Violation("duplicate", f"{name}: duplicate cells", tuple(dup)))

    ent, tgt, blk = set(s.entrances), set(s.target_cells), set(s.blocked)
    for a_name, a, b_name, b in (("entrance", ent, "target", tgt), ("entrance", ent, "blocked", blk),
                                 ("target", tgt, "blocked", blk)):
        both = sorted(a & b)
        if both:
            out.append(Violation("overlap", f"cells both {a_name} and {b_name}", tuple(both)))

    for j, z in s.targets:
        if not (_finite(z) and z >= 0):
            out.append(Violation("zeta", f"casualties for target {j} must be finite and >= 0", (j,)))

    total = 0.0
    for (e, j), p in sorted(s.gamma.items()):
        if e not in ent or j not in tgt:
            out.append(Violation("gamma_key", f"gamma pair ({e},{j}) is not entrance x target", (e, j)))
        if not _finite(p) or p < 0:
            out.append(Violation("gamma_sign", f"gamma ({e},{j}) = {p} must be >= 0", (e, j)))
        elif _finite(p):
            total += p
    if abs(total - 1.0) > GAMMA_SUM_TOL:
        out.append(Violation("gamma_sum", f"gamma sum {total:.9g} != 1"))

    for name, value, lo in (("speed_k", s.speed_k, None), ("response_time_chi", s.response_time_chi, 0.0)):
        ok = _finite(value) and (value > 0 if lo is None else value >= lo)
        if not ok:
            out.append(Violation(name, f"{name} = {value} out of range"))
    for name, value in (("theta1", s.theta1), ("theta2", s.theta2)):
        if not (_finite(value) and 0.0 <= value <= 1.0):
            out.append(Violation(name, f"{name} = {value} must lie in [0, 1]"))
    if s.theta2 > s.theta1:
        out.append(Violation("theta_order", f"theta2 {s.theta2} exceeds theta1 {s.theta1}"))

    for layer, d in (("primary", s.primary_spec), ("secondary", s.secondary_spec)):
        checks = (
            ("alpha_m", d.radius_alpha, d.radius_alpha > 0),
            ("beta_per_m", d.rate_beta, d.rate_beta >= 0),
            ("psi", d.unit_cost_psi, d.unit_cost_psi > 0),
            ("budget", d.budget_M, d.budget_M >= 0),
        )
        for fname, value, ok in checks:
            if not (_finite(value) and ok):
                out.append(Violation("detector", f"{layer}.{fname} = {value} out of range"))

    if out:
        # reachability needs a structurally sound grid
        structural = {"grid", "cell_size", "index"}
        if any(v.code in structural for v in out):
            return out
    reach: dict[int, set[int]] = {}
    for (e, j), p in sorted(s.gamma.items()):
        if not p > 0 or not (1 <= e <= n and 1 <= j <= n) or e in blk or j in blk:
            continue
        if e not in reach:
            reach[e] = reachable_from(s, e)
        if j not in reach[e]:
            out.append(Violation("unreachable", f"unreachable pair ({e},{j})", (e, j)))
    return out


# --- parameter edits used by sweeps ------------------------------------------

DETECTOR_PARAMETERS = {
    "alpha_p": ("primary_spec", "radius_alpha"),
    "alpha_s": ("secondary_spec", "radius_alpha"),
    "beta_p": ("primary_spec", "rate_beta"),
    "beta_s": ("secondary_spec", "rate_beta"),
    "budget_p": ("primary_spec", "budget_M"),
    "budget_s": ("secondary_spec", "budget_M"),
}


def with_parameter(s: GridScenario, param: str, value: float) -> GridScenario:
    """Copy of ``s`` with one detector parameter replaced (names as in DETECTOR_PARAMETERS)."""
    try:
        layer, fname = DETECTOR_PARAMETERS[param]
    except KeyError:
        raise ValueError(f"unknown parameter {param!r}") from None
    spec = replace(getattr(s, layer), **{fname: float(value)})
    return replace(s, **{layer: spec})


def one_layer(s: GridScenario) -> GridScenario:
    """The same instance with no secondary budget."""
    return with_parameter(s, "budget_s", 0.0)
