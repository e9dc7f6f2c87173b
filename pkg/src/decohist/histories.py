"""Decoherence functionals of declared histories.

A history spec is an initial state plus ordered steps, each a unitary applied
first and then an optional instrument. The functional is

    D(alpha; alpha') = tr( C_alpha rho C_alpha'^dagger ),
    C_alpha = A^n_{mu_n i_n} U_n ... A^1_{mu_1 i_1} U_1,

indexed by ordered pairs of outcome paths alpha = ((mu_1, i_1), ...). Steps
without an instrument contribute only their unitary, so omitting a middle
measurement composes the neighboring unitaries exactly.

Step positions are 1-based throughout the public API (step 1 is the first
step), matching the U_1 ... U_n numbering above; subsets, witnesses and
reports all use that convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import core
from .core import DEFAULT_TOLERANCES, DensityMatrix, Instrument, Tolerances, UnitaryOp
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    PathMismatch,
    SubsetInvalid,
    ValidationError,
    ZeroProbabilityOutcome,
)

# Dense path-pair enumeration is exponential in the number of measured steps;
# refuse anything beyond this many (path, path) pairs unless overridden.
DEFAULT_PATH_PAIR_BUDGET = 10**6

# Label of the single outcome of a trivial instrument {1}.
TRIVIAL_LABEL = "·"

OutcomePath = tuple[tuple[str, int], ...]


@dataclass(frozen=True, eq=False)
class Step:
    """One time slot: evolve by ``unitary``, then apply ``instrument`` (or nothing)."""

    unitary: UnitaryOp
    instrument: Instrument | None = None

    def __post_init__(self):
        if self.instrument is not None and self.instrument.dim != self.unitary.dim:
            raise DimensionMismatch(
                f"instrument dim {self.instrument.dim} != unitary dim {self.unitary.dim}"
            )

    @property
    def dim(self) -> int:
        return self.unitary.dim


@dataclass(frozen=True, eq=False)
class HistorySpec:
    """Initial state plus ordered steps; at least one step carries an instrument."""

    initial: DensityMatrix
    steps: tuple[Step, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.steps:
            raise ValidationError("history needs at least one step")
        for s in self.steps:
            if s.dim != self.initial.dim:
                raise DimensionMismatch(f"step dim {s.dim} != state dim {self.initial.dim}")
        if all(s.instrument is None for s in self.steps):
            raise ValidationError("history needs at least one instrument")

    @property
    def dim(self) -> int:
        return self.initial.dim

    @property
    def measured_positions(self) -> tuple[int, ...]:
        """1-based positions of steps that carry an instrument."""
        return tuple(k for k, s in enumerate(self.steps, 1) if s.instrument is not None)

    def instrument_at(self, position: int) -> Instrument:
        if not 1 <= position <= len(self.steps):
            raise SubsetInvalid(f"step position {position} out of range")
        inst = self.steps[position - 1].instrument
        if inst is None:
            raise SubsetInvalid(f"step {position} carries no instrument")
        return inst


@dataclass(frozen=True, eq=False)
class DecoherenceFunctional:
    """D(alpha; alpha') over the enumerated outcome paths.

    ``positions`` are the 1-based measured-step positions the path entries
    refer to; ``labels`` maps each path to its outcome-label tuple (the
    grouping metadata used to coarse-grain internal indices away).
    """

    paths: tuple[OutcomePath, ...]
    values: np.ndarray
    positions: tuple[int, ...]
    labels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    def grouping(self) -> dict[OutcomePath, tuple[str, ...]]:
        return dict(zip(self.paths, self.labels))


def _measured_instruments(steps: tuple[Step, ...]) -> list[tuple[int, Instrument]]:
    return [(k, s.instrument) for k, s in enumerate(steps, 1) if s.instrument is not None]


def _enumerate_paths(instruments: list[Instrument]) -> tuple[tuple[OutcomePath, ...], tuple[tuple[str, ...], ...]]:
    """All outcome paths in canonical order: product over steps, last step fastest."""
    per_step = [[(e.outcome_label, e.internal_index) for e in inst.effects] for inst in instruments]
    paths = tuple(itertools.product(*per_step))
    labels = tuple(tuple(lbl for lbl, _ in p) for p in paths)
    return paths, labels


def path_operator(spec: HistorySpec, path: OutcomePath) -> np.ndarray:
    """C_alpha = A^n U_n ... A^1 U_1 for one outcome path."""
    measured = _measured_instruments(spec.steps)
    if len(path) != len(measured):
        raise PathMismatch(f"path length {len(path)} != measured steps {len(measured)}")
    op = np.eye(spec.dim, dtype=np.complex128)
    cursor = 0
    for step in spec.steps:
        op = step.unitary.matrix @ op
        if step.instrument is not None:
            label, index = path[cursor]
            match = [e for e in step.instrument.effects
                     if e.outcome_label == label and e.internal_index == index]
            if not match:
                raise PathMismatch(f"step has no effect ({label!r}, {index})")
            op = match[0].matrix @ op
            cursor += 1
    op.setflags(write=False)
    return op


def _functional_from_steps(
    initial: np.ndarray,
    steps: tuple[Step, ...],
    tol: Tolerances,
    budget: int,
) -> DecoherenceFunctional:
    """Build D for the given step list (which may legitimately have no instruments,
    as happens when every measured step is omitted: D is then the scalar [[1]])."""
    measured = _measured_instruments(steps)
    instruments = [inst for _, inst in measured]
    positions = tuple(pos for pos, _ in measured)
    n_paths = 1
    for inst in instruments:
        n_paths *= len(inst.effects)
    if n_paths * n_paths > budget:
        raise BudgetExceeded(
            f"{n_paths}^2 = {n_paths * n_paths} path pairs exceed budget {budget}"
        )
    dim = initial.shape[0]
    # Expand path operators level by level so shared prefixes are computed once.
    # Expansion order (old index * k + new effect) matches the canonical
    # product enumeration with the last step varying fastest.
    ops = [np.eye(dim, dtype=np.complex128)]
    for step in steps:
        u = step.unitary.matrix
        ops = [u @ c for c in ops]
        if step.instrument is not None:
            ops = [e.matrix @ c for c in ops for e in step.instrument.effects]
    stack = np.array(ops)
    # D(a, b) = tr(C_a rho C_b') = sum_{ij} (C_a rho)_{ij} conj(C_b)_{ij};
    # each entry is an independent contraction, so evaluation order cannot
    # change results between serial and data-parallel runs.
    left = stack @ initial
    values = np.einsum("aij,bij->ab", left, stack.conj())
    paths, labels = _enumerate_paths(instruments)

    herm = float(np.max(np.abs(values - values.conj().T)))
    if herm > tol.validation:
        raise ValidationError(f"functional not Hermitian in paths: residual {herm:.3e}")
    diag = np.diagonal(values)
    if float(np.max(np.abs(diag.imag))) > tol.validation:
        raise ValidationError("functional diagonal has imaginary residual")
    if float(diag.real.min()) < -tol.validation:
        raise ValidationError("functional diagonal has negative entry")
    total = float(diag.real.sum())
    if abs(total - 1.0) > tol.validation:
        raise ValidationError(f"functional diagonal sums to {total:.12g}, not 1")
    return DecoherenceFunctional(paths=paths, values=values, positions=positions, labels=labels)


def decoherence_functional(
    spec: HistorySpec,
    tol: Tolerances = DEFAULT_TOLERANCES,
    budget: int = DEFAULT_PATH_PAIR_BUDGET,
) -> DecoherenceFunctional:
    """The full functional D(alpha; alpha') of the spec."""
    return _functional_from_steps(spec.initial.matrix, spec.steps, tol, budget)


def grouped_diagonal(
    functional: DecoherenceFunctional,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> dict[tuple[str, ...], float]:
    """Outcome-label probabilities: diagonal entries summed over internal indices."""
    diag = np.diagonal(functional.values)
    if float(np.max(np.abs(diag.imag), initial=0.0)) > tol.validation:
        raise ValidationError("diagonal has imaginary residual")
    out: dict[tuple[str, ...], float] = {}
    for lbls, value in zip(functional.labels, diag.real):
        out[lbls] = out.get(lbls, 0.0) + float(value)
    if out and min(out.values()) < -tol.validation:
        raise ValidationError("grouped probability below zero")
    total = sum(out.values())
    if abs(total - 1.0) > tol.validation:
        raise ValidationError(f"grouped probabilities sum to {total:.12g}, not 1")
    return out


def posterior_state(
    rho: DensityMatrix,
    inst: Instrument,
    label: str,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[float, DensityMatrix]:
    """Outcome probability and normalized post-measurement state for one label."""
    probs = core.outcome_probabilities(inst, rho.matrix)
    labels = inst.labels
    if label not in labels:
        raise ValidationError(f"instrument has no outcome labeled {label!r}")
    p = float(probs[labels.index(label)])
    if p <= tol.validation:
        raise ZeroProbabilityOutcome(
            f"outcome {label!r} has probability {p:.3e}", probability=p
        )
    post = core.apply_outcome(inst, label, rho.matrix) / p
    return p, core.validate_density(post, tol)


def _normalize_subset(spec: HistorySpec, subset) -> tuple[int, ...]:
    """Sorted tuple of 1-based measured positions; rejects anything else."""
    positions = tuple(sorted(set(int(k) for k in subset)))
    measured = set(spec.measured_positions)
    for k in positions:
        if k not in measured:
            raise SubsetInvalid(f"step {k} is not a measured step (measured: {sorted(measured)})")
    return positions


def _steps_with_omitted(spec: HistorySpec, subset: tuple[int, ...]) -> tuple[Step, ...]:
    return tuple(
        Step(unitary=s.unitary, instrument=None) if pos in subset else s
        for pos, s in enumerate(spec.steps, 1)
    )


def omit_functional(
    spec: HistorySpec,
    subset,
    tol: Tolerances = DEFAULT_TOLERANCES,
    budget: int = DEFAULT_PATH_PAIR_BUDGET,
) -> DecoherenceFunctional:
    """D with the instruments at ``subset`` removed (their unitaries retained)."""
    positions = _normalize_subset(spec, subset)
    return _functional_from_steps(
        spec.initial.matrix, _steps_with_omitted(spec, positions), tol, budget
    )


def marginal_functional(
    spec: HistorySpec,
    subset,
    tol: Tolerances = DEFAULT_TOLERANCES,
    budget: int = DEFAULT_PATH_PAIR_BUDGET,
    method: str = "channel",
) -> DecoherenceFunctional:
    """D summed over the outcomes at ``subset``, set equal on both sides.

    Two independent routes are kept deliberately: ``channel`` composes the
    measure-and-forget map at the marginalized steps; ``pathsum`` builds the
    full functional and sums matching path pairs. Their agreement is a tested
    invariant, not an implementation shortcut.
    """
    positions = _normalize_subset(spec, subset)
    if method == "channel":
        return _marginal_by_channel(spec, positions, tol, budget)
    if method == "pathsum":
        return _marginal_by_pathsum(spec, positions, tol, budget)
    raise ValidationError(f"unknown marginalization method {method!r}")


def _marginal_by_channel(
    spec: HistorySpec,
    subset: tuple[int, ...],
    tol: Tolerances,
    budget: int,
) -> DecoherenceFunctional:
    remaining = [
        (pos, s.instrument)
        for pos, s in enumerate(spec.steps, 1)
        if s.instrument is not None and pos not in subset
    ]
    n_paths = 1
    for _, inst in remaining:
        n_paths *= len(inst.effects)
    if n_paths * n_paths > budget:
        raise BudgetExceeded(
            f"{n_paths}^2 = {n_paths * n_paths} path pairs exceed budget {budget}"
        )
    dim = spec.dim
    # pair tensor M[a, b] holds A..rho..A' for branch pair (a, b)
    m = spec.initial.matrix[np.newaxis, np.newaxis, :, :].astype(np.complex128)
    for pos, step in enumerate(spec.steps, 1):
        u = step.unitary.matrix
        m = np.einsum("ij,abjk,lk->abil", u, m, u.conj())
        inst = step.instrument
        if inst is None:
            continue
        if pos in subset:
            na, nb = m.shape[:2]
            flat = m.reshape(na * nb, dim, dim)
            flat = np.array([core.apply_channel(inst, x) for x in flat])
            m = flat.reshape(na, nb, dim, dim)
        else:
            a = np.array([e.matrix for e in inst.effects])
            k = a.shape[0]
            left = np.einsum("eij,abjk->aebik", a, m)
            both = np.einsum("aebik,flk->aebfil", left, a.conj())
            na, nb = m.shape[:2]
            m = both.reshape(na * k, nb * k, dim, dim)
    values = np.einsum("abii->ab", m)
    paths, labels = _enumerate_paths([inst for _, inst in remaining])
    positions = tuple(pos for pos, _ in remaining)
    return _validated_functional(values, paths, labels, positions, tol)


def _marginal_by_pathsum(
    spec: HistorySpec,
    subset: tuple[int, ...],
    tol: Tolerances,
    budget: int,
) -> DecoherenceFunctional:
    full = _functional_from_steps(spec.initial.matrix, spec.steps, tol, budget)
    keep = [j for j, pos in enumerate(full.positions) if pos not in subset]
    drop = [j for j, pos in enumerate(full.positions) if pos in subset]
    remaining_inst = [spec.instrument_at(full.positions[j]) for j in keep]
    paths, labels = _enumerate_paths(remaining_inst)
    index_of = {p: k for k, p in enumerate(paths)}
    reduced_idx = np.array(
        [index_of[tuple(p[j] for j in keep)] for p in full.paths], dtype=np.intp
    )
    group_key = [tuple(p[j] for j in drop) for p in full.paths]
    group_ids: dict[tuple, int] = {}
    group_idx = np.array([group_ids.setdefault(g, len(group_ids)) for g in group_key])
    mask = group_idx[:, None] == group_idx[None, :]
    values = np.zeros((len(paths), len(paths)), dtype=np.complex128)
    np.add.at(
        values,
        (reduced_idx[:, None], reduced_idx[None, :]),
        full.values * mask,
    )
    positions = tuple(full.positions[j] for j in keep)
    return _validated_functional(values, paths, labels, positions, tol)


def _validated_functional(values, paths, labels, positions, tol) -> DecoherenceFunctional:
    herm = float(np.max(np.abs(values - values.conj().T)))
    if herm > tol.validation:
        raise ValidationError(f"functional not Hermitian in paths: residual {herm:.3e}")
    total = float(np.diagonal(values).real.sum())
    if abs(total - 1.0) > tol.validation:
        raise ValidationError(f"functional diagonal sums to {total:.12g}, not 1")
    return DecoherenceFunctional(paths=tuple(paths), values=values,
                                 positions=tuple(positions), labels=tuple(labels))


# ---------------------------------------------------------------------------
# Diagonal-only propagation. The measurement-based criterion and the exact
# protocol mode need outcome-label distributions, never full functionals, and
# branch states can be dropped after the last remaining measured step because
# everything later is trace preserving.
# ---------------------------------------------------------------------------


def _label_distribution(
    initial: np.ndarray,
    steps: tuple[Step, ...],
    modes: dict[int, str],
    budget: int,
    tol: Tolerances,
) -> dict[tuple[str, ...], float]:
    """Distribution over label tuples of 'branch' steps.

    ``modes`` maps measured 1-based positions to 'branch' (keep outcomes),
    'forget' (apply measure-and-forget channel) or 'skip' (omit instrument).
    """
    branch_positions = [pos for pos, mode in modes.items() if mode == "branch"]
    if not branch_positions:
        return {(): float(np.trace(initial).real)}
    last_branch = max(branch_positions)
    n_branches = 1
    for pos in branch_positions:
        inst = steps[pos - 1].instrument
        n_branches *= len(inst.labels)
    if n_branches > budget:
        raise BudgetExceeded(f"{n_branches} outcome branches exceed budget {budget}")

    branches: list[tuple[tuple[str, ...], np.ndarray]] = [((), initial)]
    dist: dict[tuple[str, ...], float] = {}
    for pos, step in enumerate(steps, 1):
        u = step.unitary.matrix
        branches = [(lbls, u @ x @ u.conj().T) for lbls, x in branches]
        inst = step.instrument
        if inst is None:
            continue
        mode = modes[pos]
        if mode == "skip":
            continue
        if mode == "forget":
            branches = [(lbls, core.apply_channel(inst, x)) for lbls, x in branches]
            continue
        if pos == last_branch:
            for lbls, x in branches:
                probs = core.outcome_probabilities(inst, x)
                for label, p in zip(inst.labels, probs):
                    dist[lbls + (label,)] = float(p)
            return dist
        branches = [
            (lbls + (label,), core.apply_outcome(inst, label, x))
            for lbls, x in branches
            for label in inst.labels
        ]
    raise AssertionError("unreachable: last branch step must emit")


def marginal_distribution(
    spec: HistorySpec,
    subset,
    tol: Tolerances = DEFAULT_TOLERANCES,
    budget: int = DEFAULT_PATH_PAIR_BUDGET,
) -> dict[tuple[str, ...], float]:
    """Label distribution over remaining steps with ``subset`` performed-and-ignored.

    Equals grouped_diagonal(marginal_functional(spec, subset)); the equality is
    a tested invariant.
    """
    positions = _normalize_subset(spec, subset)
    modes = {
        pos: ("forget" if pos in positions else "branch")
        for pos in spec.measured_positions
    }
    return _label_distribution(spec.initial.matrix, spec.steps, modes, budget, tol)


def omitted_distribution(
    spec: HistorySpec,
    subset,
    tol: Tolerances = DEFAULT_TOLERANCES,
    budget: int = DEFAULT_PATH_PAIR_BUDGET,
) -> dict[tuple[str, ...], float]:
    """Label distribution over remaining steps with ``subset`` not measured at all."""
    positions = _normalize_subset(spec, subset)
    modes = {
        pos: ("skip" if pos in positions else "branch")
        for pos in spec.measured_positions
    }
    return _label_distribution(spec.initial.matrix, spec.steps, modes, budget, tol)
