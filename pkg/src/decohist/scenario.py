"""Scenario files, check orchestration and reports.

Scenarios are YAML mappings parsed fail-closed: unknown keys are errors, and
every step must name its unitary and instrument explicitly (including
"identity" and "none"), so a file cannot silently get default physics.
Matrices on the wire are nested arrays of [re, im] pairs, unambiguous across
languages.

Reports carry the scenario echo, the outcome-probability table, one entry per
requested check, and version/seed stamps. The structured form is stable,
sorted JSON with no timestamps, so identical inputs and seed produce
byte-identical output; parse_report(emit_report(r)) == r.
"""

from __future__ import annotations

import importlib.metadata
import json
from dataclasses import dataclass, replace

import numpy as np
import yaml

from . import core
from .core import Effect, Instrument, Tolerances, UnitaryOp
from .criteria import (
    CriterionReport,
    Witness,
    check_kent,
    check_measurement_based,
    check_weak,
    trivial_instrument,
)
from .errors import (
    DimensionMismatch,
    ScenarioSyntaxError,
    UnknownKey,
    UnknownModel,
    ValidationError,
)
from .histories import (
    DEFAULT_PATH_PAIR_BUDGET,
    HistorySpec,
    Step,
    decoherence_functional,
    marginal_distribution,
)
from .models import (
    GridSystem,
    SpinDirectionSet,
    free_particle_unitary,
    gaussian_instrument,
    gaussian_wavepacket,
    spin_direction_instrument,
    spin_half_library,
)
from .protocol import ProtocolConfig, ProtocolResult, run_protocol

REPORT_FORMAT_VERSION = "1"

try:
    PACKAGE_VERSION = importlib.metadata.version("artifact")
except importlib.metadata.PackageNotFoundError:  # running from a source tree
    PACKAGE_VERSION = "0.1.0"

CHECK_NAMES = ("weak", "measurement_based", "kent", "protocol")

_OPTION_DEFAULTS = {
    "validation_tol": 1e-9,
    "decoherence_tol": 1e-9,
    "subset_policy": "all",
    "kent_policy": "all",
    "shots": 100000,
    "seed": 0,
    "alpha": 0.01,
    "budget": DEFAULT_PATH_PAIR_BUDGET,
}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A parsed, resolved scenario ready to run."""

    spec: HistorySpec
    checks: tuple[str, ...]
    subset: tuple[int, ...]
    tolerances: Tolerances
    subset_policy: str
    kent_policy: str
    shots: int
    seed: int
    alpha: float
    budget: int
    echo: dict

    def options(self) -> dict:
        return {
            "validation_tol": self.tolerances.validation,
            "decoherence_tol": self.tolerances.decoherence,
            "subset_policy": self.subset_policy,
            "kent_policy": self.kent_policy,
            "shots": self.shots,
            "seed": self.seed,
            "alpha": self.alpha,
            "budget": self.budget,
        }


@dataclass(frozen=True)
class Report:
    format_version: str
    package_version: str
    seed: int
    scenario: dict
    options: dict
    probabilities: tuple[tuple[tuple[str, ...], float], ...]
    checks: tuple[tuple[str, object], ...]

    def verdicts(self) -> tuple[bool, ...]:
        out = []
        for _, payload in self.checks:
            if isinstance(payload, CriterionReport):
                out.append(payload.verdict)
            else:
                out.append(payload.consistent)
        return tuple(out)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _fail_unknown_keys(node: dict, allowed: set[str], path: str) -> None:
    for key in node:
        if key not in allowed:
            raise UnknownKey(f"{path}: unknown key {key!r} (allowed: {sorted(allowed)})")


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ScenarioSyntaxError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _as_float(node, path: str) -> float:
    if isinstance(node, bool) or node is None:
        raise ScenarioSyntaxError(f"{path}: expected a number")
    if isinstance(node, (int, float)):
        return float(node)
    if isinstance(node, str):
        # YAML 1.1 reads bare scientific notation like 1e-9 as a string.
        try:
            return float(node)
        except ValueError:
            pass
    raise ScenarioSyntaxError(f"{path}: expected a number, got {node!r}")


def _as_int(node, path: str) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioSyntaxError(f"{path}: expected an integer, got {node!r}")
    return node


def _as_str(node, path: str) -> str:
    if not isinstance(node, str):
        raise ScenarioSyntaxError(f"{path}: expected a string, got {node!r}")
    return node


def _parse_matrix(node, path: str) -> np.ndarray:
    """Nested arrays of [re, im] pairs."""
    if not isinstance(node, list) or not node:
        raise ScenarioSyntaxError(f"{path}: expected a nonempty list of rows")
    rows = []
    for r, row in enumerate(node):
        if not isinstance(row, list) or len(row) != len(node):
            raise ScenarioSyntaxError(f"{path}[{r}]: matrix must be square")
        entries = []
        for c, cell in enumerate(row):
            if not isinstance(cell, list) or len(cell) != 2:
                raise ScenarioSyntaxError(
                    f"{path}[{r}][{c}]: expected [re, im], got {cell!r}"
                )
            entries.append(complex(_as_float(cell[0], f"{path}[{r}][{c}][0]"),
                                   _as_float(cell[1], f"{path}[{r}][{c}][1]")))
        rows.append(entries)
    return np.array(rows, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class _System:
    model: str
    dim: int
    grid: GridSystem | None = None


def _parse_system(node, path: str) -> _System:
    node = _require_mapping(node, path)
    model = _as_str(node.get("model"), f"{path}.model") if "model" in node else None
    if model is None:
        raise ScenarioSyntaxError(f"{path}: missing key 'model'")
    if model == "spin_half":
        _fail_unknown_keys(node, {"model"}, path)
        return _System(model="spin_half", dim=2)
    if model == "grid":
        _fail_unknown_keys(node, {"model", "n_points", "x_min", "x_max"}, path)
        for key in ("n_points", "x_min", "x_max"):
            if key not in node:
                raise ScenarioSyntaxError(f"{path}: missing key {key!r}")
        grid = GridSystem(
            n_points=_as_int(node["n_points"], f"{path}.n_points"),
            x_min=_as_float(node["x_min"], f"{path}.x_min"),
            x_max=_as_float(node["x_max"], f"{path}.x_max"),
        )
        return _System(model="grid", dim=grid.n_points, grid=grid)
    if model == "custom":
        _fail_unknown_keys(node, {"model", "dim"}, path)
        if "dim" not in node:
            raise ScenarioSyntaxError(f"{path}: missing key 'dim'")
        dim = _as_int(node["dim"], f"{path}.dim")
        if dim < 1:
            raise ScenarioSyntaxError(f"{path}.dim: must be >= 1")
        return _System(model="custom", dim=dim)
    raise UnknownModel(f"{path}.model: unknown model {model!r} "
                       "(known: spin_half, grid, custom)")


def _named_node(node, path: str) -> tuple[str, dict]:
    """Accept 'name' or {name: ..., params...}; returns (name, params)."""
    if isinstance(node, str):
        return node, {}
    node = _require_mapping(node, path)
    if "name" not in node:
        raise ScenarioSyntaxError(f"{path}: expected a name string, "
                                  "a {name: ...} mapping, or a {matrix: ...} mapping")
    params = dict(node)
    name = _as_str(params.pop("name"), f"{path}.name")
    return name, params


def _parse_state(node, system: _System, tol: Tolerances, path: str):
    if isinstance(node, dict) and "matrix" in node:
        _fail_unknown_keys(node, {"matrix"}, path)
        m = _parse_matrix(node["matrix"], f"{path}.matrix")
        if m.shape[0] != system.dim:
            raise DimensionMismatch(
                f"{path}: matrix dim {m.shape[0]} != system dim {system.dim}"
            )
        return core.validate_density(m, tol)
    name, params = _named_node(node, path)
    if system.model == "spin_half":
        lib = spin_half_library(tol)
        plain = {"up_z": lib.up_z, "down_z": lib.down_z, "up_x": lib.up_x, "mixed": lib.mixed}
        if name in plain:
            _fail_unknown_keys(params, set(), path)
            return plain[name]
        if name == "near_identity":
            _fail_unknown_keys(params, {"epsilon"}, path)
            if "epsilon" not in params:
                raise ScenarioSyntaxError(f"{path}: near_identity needs 'epsilon'")
            return lib.near_identity(_as_float(params["epsilon"], f"{path}.epsilon"), tol)
        raise UnknownModel(f"{path}: unknown spin_half state {name!r}")
    if system.model == "grid":
        if name == "wavepacket":
            _fail_unknown_keys(params, {"center", "sigma"}, path)
            for key in ("center", "sigma"):
                if key not in params:
                    raise ScenarioSyntaxError(f"{path}: wavepacket needs {key!r}")
            return gaussian_wavepacket(
                system.grid,
                _as_float(params["center"], f"{path}.center"),
                _as_float(params["sigma"], f"{path}.sigma"),
                tol,
            )
        raise UnknownModel(f"{path}: unknown grid state {name!r}")
    raise UnknownModel(f"{path}: custom systems take inline matrices only")


def _parse_unitary(node, system: _System, tol: Tolerances, path: str) -> UnitaryOp:
    if isinstance(node, dict) and "matrix" in node:
        _fail_unknown_keys(node, {"matrix"}, path)
        m = _parse_matrix(node["matrix"], f"{path}.matrix")
        if m.shape[0] != system.dim:
            raise DimensionMismatch(
                f"{path}: matrix dim {m.shape[0]} != system dim {system.dim}"
            )
        return core.validate_unitary(m, tol)
    name, params = _named_node(node, path)
    if name == "identity":
        _fail_unknown_keys(params, set(), path)
        return core.validate_unitary(np.eye(system.dim), tol)
    if system.model == "spin_half":
        lib = spin_half_library(tol)
        named = {
            "hadamard": lib.hadamard.matrix,
            "sigma_x": lib.sigma_x,
            "sigma_y": lib.sigma_y,
            "sigma_z": lib.sigma_z,
        }
        if name in named:
            _fail_unknown_keys(params, set(), path)
            return core.validate_unitary(named[name], tol)
        raise UnknownModel(f"{path}: unknown spin_half unitary {name!r}")
    if system.model == "grid":
        if name == "free_particle":
            _fail_unknown_keys(params, {"mass", "time"}, path)
            for key in ("mass", "time"):
                if key not in params:
                    raise ScenarioSyntaxError(f"{path}: free_particle needs {key!r}")
            return free_particle_unitary(
                system.grid,
                _as_float(params["mass"], f"{path}.mass"),
                _as_float(params["time"], f"{path}.time"),
                tol,
            )
        raise UnknownModel(f"{path}: unknown grid unitary {name!r}")
    raise UnknownModel(f"{path}: unknown unitary {name!r} for custom system")


def _parse_centers(node, path: str) -> list[float]:
    if isinstance(node, list):
        return [_as_float(c, f"{path}[{k}]") for k, c in enumerate(node)]
    node = _require_mapping(node, path)
    _fail_unknown_keys(node, {"start", "stop", "spacing"}, path)
    for key in ("start", "stop", "spacing"):
        if key not in node:
            raise ScenarioSyntaxError(f"{path}: centers range needs {key!r}")
    start = _as_float(node["start"], f"{path}.start")
    stop = _as_float(node["stop"], f"{path}.stop")
    spacing = _as_float(node["spacing"], f"{path}.spacing")
    if spacing <= 0 or stop < start:
        raise ScenarioSyntaxError(f"{path}: need stop >= start and spacing > 0")
    count = int(np.floor((stop - start) / spacing + 0.5)) + 1
    return [start + k * spacing for k in range(count)]


def _parse_instrument(node, system: _System, tol: Tolerances, path: str) -> Instrument | None:
    if isinstance(node, str) and node == "none":
        return None
    if isinstance(node, str) and node == "trivial":
        return trivial_instrument(system.dim, tol)
    if isinstance(node, dict) and "effects" in node:
        _fail_unknown_keys(node, {"effects"}, path)
        eff_nodes = node["effects"]
        if not isinstance(eff_nodes, list) or not eff_nodes:
            raise ScenarioSyntaxError(f"{path}.effects: expected a nonempty list")
        effects = []
        for k, e in enumerate(eff_nodes):
            e = _require_mapping(e, f"{path}.effects[{k}]")
            _fail_unknown_keys(e, {"label", "index", "matrix"}, f"{path}.effects[{k}]")
            for key in ("label", "matrix"):
                if key not in e:
                    raise ScenarioSyntaxError(f"{path}.effects[{k}]: missing {key!r}")
            m = _parse_matrix(e["matrix"], f"{path}.effects[{k}].matrix")
            if m.shape[0] != system.dim:
                raise DimensionMismatch(
                    f"{path}.effects[{k}]: matrix dim {m.shape[0]} != system dim {system.dim}"
                )
            effects.append(Effect(
                _as_str(e["label"], f"{path}.effects[{k}].label"),
                _as_int(e.get("index", 0), f"{path}.effects[{k}].index"),
                m,
            ))
        return core.validate_instrument(effects, tol)
    name, params = _named_node(node, path)
    if name == "trivial":
        _fail_unknown_keys(params, set(), path)
        return trivial_instrument(system.dim, tol)
    if system.model == "spin_half":
        lib = spin_half_library(tol)
        named = {
            "projective_x": lib.projective_x,
            "projective_y": lib.projective_y,
            "projective_z": lib.projective_z,
            "fuzzy": lib.fuzzy,
        }
        if name in named:
            _fail_unknown_keys(params, set(), path)
            return named[name]
        if name == "directions":
            _fail_unknown_keys(params, {"directions"}, path)
            dirs_node = params.get("directions", "axes")
            if dirs_node == "axes":
                from .models import AXIS_DIRECTIONS

                dirs = SpinDirectionSet(AXIS_DIRECTIONS)
            elif isinstance(dirs_node, list):
                vecs = []
                for k, v in enumerate(dirs_node):
                    if not isinstance(v, list) or len(v) != 3:
                        raise ScenarioSyntaxError(
                            f"{path}.directions[{k}]: expected a 3-vector"
                        )
                    vecs.append(tuple(_as_float(c, f"{path}.directions[{k}][{j}]")
                                      for j, c in enumerate(v)))
                dirs = SpinDirectionSet(tuple(vecs))
            else:
                raise ScenarioSyntaxError(f"{path}.directions: expected 'axes' or a list")
            return spin_direction_instrument(dirs, tol)
        raise UnknownModel(f"{path}: unknown spin_half instrument {name!r}")
    if system.model == "grid":
        if name == "gaussian":
            _fail_unknown_keys(params, {"width", "centers"}, path)
            for key in ("width", "centers"):
                if key not in params:
                    raise ScenarioSyntaxError(f"{path}: gaussian needs {key!r}")
            return gaussian_instrument(
                system.grid,
                _as_float(params["width"], f"{path}.width"),
                _parse_centers(params["centers"], f"{path}.centers"),
                tol,
            )
        raise UnknownModel(f"{path}: unknown grid instrument {name!r}")
    raise UnknownModel(f"{path}: unknown instrument {name!r} for custom system")


def parse_scenario(text: str) -> Scenario:
    """Parse and resolve a scenario document; strict about unknown keys."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        column = mark.column + 1 if mark is not None else None
        where = f" at line {line}, column {column}" if line is not None else ""
        raise ScenarioSyntaxError(f"not valid YAML{where}: {exc}", line=line, column=column)
    doc = _require_mapping(doc, "scenario")
    _fail_unknown_keys(
        doc, {"system", "initial_state", "steps", "checks", "S", "check_options"},
        "scenario",
    )
    for key in ("system", "initial_state", "steps", "checks"):
        if key not in doc:
            raise ScenarioSyntaxError(f"scenario: missing key {key!r}")

    opts_node = _require_mapping(doc.get("check_options", {}) or {}, "check_options")
    _fail_unknown_keys(opts_node, set(_OPTION_DEFAULTS), "check_options")
    opts = dict(_OPTION_DEFAULTS)
    for key, value in opts_node.items():
        if key in ("validation_tol", "decoherence_tol", "alpha"):
            opts[key] = _as_float(value, f"check_options.{key}")
        elif key in ("shots", "seed", "budget"):
            opts[key] = _as_int(value, f"check_options.{key}")
        else:
            opts[key] = _as_str(value, f"check_options.{key}")
    if opts["subset_policy"] not in ("all", "singletons"):
        raise ScenarioSyntaxError("check_options.subset_policy: expected 'all' or 'singletons'")
    if opts["kent_policy"] not in ("all", "singletons_plus_full"):
        raise ScenarioSyntaxError(
            "check_options.kent_policy: expected 'all' or 'singletons_plus_full'"
        )
    tol = Tolerances(validation=opts["validation_tol"], decoherence=opts["decoherence_tol"])

    system = _parse_system(doc["system"], "system")
    initial = _parse_state(doc["initial_state"], system, tol, "initial_state")

    steps_node = doc["steps"]
    if not isinstance(steps_node, list) or not steps_node:
        raise ScenarioSyntaxError("steps: expected a nonempty list")
    steps = []
    for k, s in enumerate(steps_node):
        s = _require_mapping(s, f"steps[{k}]")
        _fail_unknown_keys(s, {"unitary", "instrument"}, f"steps[{k}]")
        for key in ("unitary", "instrument"):
            if key not in s:
                raise ScenarioSyntaxError(
                    f"steps[{k}]: missing {key!r} (use 'identity' / 'none' explicitly)"
                )
        steps.append(Step(
            unitary=_parse_unitary(s["unitary"], system, tol, f"steps[{k}].unitary"),
            instrument=_parse_instrument(s["instrument"], system, tol, f"steps[{k}].instrument"),
        ))
    spec = HistorySpec(initial=initial, steps=tuple(steps))

    checks_node = doc["checks"]
    if not isinstance(checks_node, list) or not checks_node:
        raise ScenarioSyntaxError("checks: expected a nonempty list")
    checks = []
    for k, c in enumerate(checks_node):
        name = _as_str(c, f"checks[{k}]")
        if name not in CHECK_NAMES:
            raise ScenarioSyntaxError(
                f"checks[{k}]: unknown check {name!r} (known: {', '.join(CHECK_NAMES)})"
            )
        if name in checks:
            raise ScenarioSyntaxError(f"checks[{k}]: duplicate check {name!r}")
        checks.append(name)

    subset_node = doc.get("S", [])
    if not isinstance(subset_node, list):
        raise ScenarioSyntaxError("S: expected a list of step positions")
    subset = tuple(_as_int(v, f"S[{k}]") for k, v in enumerate(subset_node))
    from .histories import _normalize_subset

    subset = _normalize_subset(spec, subset)

    return Scenario(
        spec=spec,
        checks=tuple(checks),
        subset=subset,
        tolerances=tol,
        subset_policy=opts["subset_policy"],
        kent_policy=opts["kent_policy"],
        shots=opts["shots"],
        seed=opts["seed"],
        alpha=opts["alpha"],
        budget=opts["budget"],
        echo=doc,
    )


def with_overrides(
    scenario: Scenario,
    tol: float | None = None,
    subsets: str | None = None,
    shots: int | None = None,
    seed: int | None = None,
    alpha: float | None = None,
    budget: int | None = None,
) -> Scenario:
    """Apply CLI-style overrides; ``tol`` replaces the decoherence tolerance."""
    tolerances = scenario.tolerances
    if tol is not None:
        tolerances = Tolerances(validation=tolerances.validation, decoherence=tol)
    return replace(
        scenario,
        tolerances=tolerances,
        subset_policy=subsets if subsets is not None else scenario.subset_policy,
        shots=shots if shots is not None else scenario.shots,
        seed=seed if seed is not None else scenario.seed,
        alpha=alpha if alpha is not None else scenario.alpha,
        budget=budget if budget is not None else scenario.budget,
    )


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_scenario(scenario: Scenario) -> Report:
    """Execute the requested checks in declared order; never partial — any
    check error propagates (the CLI turns it into an error report, exit 2)."""
    spec = scenario.spec
    tol = scenario.tolerances
    probabilities = marginal_distribution(spec, (), tol, scenario.budget)
    checks: list[tuple[str, object]] = []
    for name in scenario.checks:
        if name == "weak":
            functional = decoherence_functional(spec, tol, scenario.budget)
            checks.append((name, check_weak(functional, tol)))
        elif name == "measurement_based":
            checks.append((name, check_measurement_based(
                spec, tol, subset_policy=scenario.subset_policy, budget=scenario.budget
            )))
        elif name == "kent":
            checks.append((name, check_kent(spec, tol=tol, policy=scenario.kent_policy)))
        elif name == "protocol":
            cfg = ProtocolConfig(
                spec=spec,
                subset=scenario.subset,
                shots=scenario.shots,
                seed=scenario.seed,
                alpha=scenario.alpha,
            )
            checks.append((name, run_protocol(cfg, tol)))
    return Report(
        format_version=REPORT_FORMAT_VERSION,
        package_version=PACKAGE_VERSION,
        seed=scenario.seed,
        scenario=scenario.echo,
        options=scenario.options(),
        probabilities=tuple(sorted((tuple(k), float(v)) for k, v in probabilities.items())),
        checks=tuple(checks),
    )


# ---------------------------------------------------------------------------
# Emission and round-trip
# ---------------------------------------------------------------------------


def _witness_to_json(w: Witness) -> dict:
    def encode(obj):
        if isinstance(obj, tuple):
            return [encode(o) for o in obj]
        return obj

    return {"location": encode(w.location), "residual": w.residual}


def _tuplify(obj):
    if isinstance(obj, list):
        return tuple(_tuplify(o) for o in obj)
    return obj


def _criterion_to_json(r: CriterionReport) -> dict:
    return {
        "criterion": r.criterion,
        "verdict": r.verdict,
        "max_residual": r.max_residual,
        "witnesses": [_witness_to_json(w) for w in r.witnesses],
        "per_subset": None if r.per_subset is None else
            [[list(subset), residual] for subset, residual in r.per_subset],
        "policy": r.policy,
        "notes": list(r.notes),
    }


def _criterion_from_json(d: dict) -> CriterionReport:
    return CriterionReport(
        criterion=d["criterion"],
        verdict=bool(d["verdict"]),
        max_residual=float(d["max_residual"]),
        witnesses=tuple(
            Witness(location=_tuplify(w["location"]), residual=float(w["residual"]))
            for w in d["witnesses"]
        ),
        per_subset=None if d["per_subset"] is None else tuple(
            (tuple(int(i) for i in subset), float(residual))
            for subset, residual in d["per_subset"]
        ),
        policy=d["policy"],
        notes=tuple(d["notes"]),
    )


def _dist_to_json(dist: dict) -> list:
    return [[list(k), v] for k, v in sorted(dist.items())]


def _dist_from_json(rows: list) -> dict:
    return {tuple(k): float(v) for k, v in rows}


def _protocol_to_json(r: ProtocolResult) -> dict:
    return {
        "dist_with": _dist_to_json(r.dist_with),
        "dist_without": _dist_to_json(r.dist_without),
        "tv_distance": r.tv_distance,
        "exact_tv": r.exact_tv,
        "consistent": r.consistent,
        "statistic": r.statistic,
        "p_value": r.p_value,
        "dof": r.dof,
        "mode": r.mode,
    }


def _protocol_from_json(d: dict) -> ProtocolResult:
    return ProtocolResult(
        dist_with=_dist_from_json(d["dist_with"]),
        dist_without=_dist_from_json(d["dist_without"]),
        tv_distance=float(d["tv_distance"]),
        exact_tv=float(d["exact_tv"]),
        consistent=bool(d["consistent"]),
        statistic=None if d["statistic"] is None else float(d["statistic"]),
        p_value=None if d["p_value"] is None else float(d["p_value"]),
        dof=None if d["dof"] is None else int(d["dof"]),
        mode=d["mode"],
    )


def report_to_json(report: Report) -> dict:
    checks = []
    for name, payload in report.checks:
        if isinstance(payload, CriterionReport):
            checks.append({"check": name, "kind": "criterion",
                           "report": _criterion_to_json(payload)})
        else:
            checks.append({"check": name, "kind": "protocol",
                           "result": _protocol_to_json(payload)})
    return {
        "format_version": report.format_version,
        "package_version": report.package_version,
        "seed": report.seed,
        "scenario": report.scenario,
        "options": report.options,
        "probabilities": [[list(labels), p] for labels, p in report.probabilities],
        "checks": checks,
    }


def report_from_json(doc: dict) -> Report:
    checks = []
    for entry in doc["checks"]:
        if entry["kind"] == "criterion":
            checks.append((entry["check"], _criterion_from_json(entry["report"])))
        else:
            checks.append((entry["check"], _protocol_from_json(entry["result"])))
    return Report(
        format_version=doc["format_version"],
        package_version=doc["package_version"],
        seed=int(doc["seed"]),
        scenario=doc["scenario"],
        options=doc["options"],
        probabilities=tuple(
            (tuple(labels), float(p)) for labels, p in doc["probabilities"]
        ),
        checks=tuple(checks),
    )


def parse_report(text: str) -> Report:
    """Inverse of emit_report(..., 'structured')."""
    return report_from_json(json.loads(text))


def _format_labels(labels: tuple[str, ...]) -> str:
    return "(" + ", ".join(labels) + ")" if labels else "()"


def _emit_text(report: Report) -> str:
    lines: list[str] = []
    lines.append("decohist report")
    lines.append(f"format {report.format_version}, package {report.package_version}, "
                 f"seed {report.seed}")
    lines.append("")
    lines.append("outcome probabilities:")
    width = max((len(_format_labels(lbls)) for lbls, _ in report.probabilities), default=2)
    total = 0.0
    for labels, p in report.probabilities:
        lines.append(f"  {_format_labels(labels):<{width}}  {p:.12f}")
        total += p
    tol = report.options["validation_tol"]
    lines.append(f"  sum = {total:.12f} (|sum - 1| = {abs(total - 1.0):.3e}, "
                 f"tolerance {tol:g})")
    for name, payload in report.checks:
        lines.append("")
        if isinstance(payload, CriterionReport):
            verdict = "PASS (decoherent)" if payload.verdict else "FAIL (not decoherent)"
            lines.append(f"[{name}] verdict: {verdict}")
            lines.append(f"  max residual {payload.max_residual:.6e} "
                         f"(tolerance {report.options['decoherence_tol']:g}, "
                         f"policy {payload.policy})")
            if payload.per_subset is not None:
                lines.append("  per-subset residuals:")
                for subset, residual in payload.per_subset:
                    label = "{" + ", ".join(str(k) for k in subset) + "}"
                    lines.append(f"    S={label:<12} {residual:.6e}")
            if payload.witnesses:
                lines.append("  worst witnesses:")
                for w in payload.witnesses:
                    lines.append(f"    {w.location!r}  residual {w.residual:.6e}")
            for note in payload.notes:
                lines.append(f"  note: {note}")
        else:
            verdict = "PASS (consistent)" if payload.consistent else "FAIL (inconsistent)"
            lines.append(f"[{name}] verdict: {verdict}")
            lines.append(f"  mode {payload.mode}, tv {payload.tv_distance:.6e}, "
                         f"exact tv {payload.exact_tv:.6e}")
            if payload.p_value is not None:
                lines.append(f"  chi-square {payload.statistic:.6f}, dof {payload.dof}, "
                             f"p {payload.p_value:.6g}, alpha {report.options['alpha']:g}")
            lines.append("  distributions (with | without):")
            keys = sorted(set(payload.dist_with) | set(payload.dist_without))
            for key in keys:
                lines.append(
                    f"    {_format_labels(key):<{max(width, 2)}}  "
                    f"{payload.dist_with.get(key, 0.0):.6f} | "
                    f"{payload.dist_without.get(key, 0.0):.6f}"
                )
    lines.append("")
    return "\n".join(lines)


def emit_report(report: Report, format: str = "text") -> str:
    """Render a report; 'structured' is stable sorted JSON, 'text' is aligned tables."""
    if format == "structured":
        return json.dumps(report_to_json(report), indent=2, sort_keys=True) + "\n"
    if format == "text":
        return _emit_text(report)
    raise ValidationError(f"unknown report format {format!r}")
