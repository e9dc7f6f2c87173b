"""Validated complex-matrix algebra and quantum measurement primitives.

All operators and states are dense square complex128 arrays (dimensionless,
hbar = 1). Arrays held by the value types are read-only copies, so every value
is immutable after construction and safe to share across threads.

Tolerances are absolute, not relative: every matrix in scope (states,
projectors, contractions) has entries bounded by about 1, so an absolute
threshold on entries and probabilities is meaningful.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    IncompleteInstrument,
    NotHermitian,
    NotPSD,
    NotUnitary,
    TraceNotOne,
    ValidationError,
)


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances: ``validation`` guards matrix invariants,
    ``decoherence`` is the verdict threshold for the criteria."""

    validation: float = 1e-9
    decoherence: float = 1e-9

    def __post_init__(self):
        if not (self.validation > 0 and self.decoherence > 0):
            raise ValidationError("tolerances must be positive")


DEFAULT_TOLERANCES = Tolerances()


def as_complex_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce input to a read-only square complex128 array.

    Rejects non-square shapes and non-finite entries. Always copies, so the
    caller cannot mutate the result through the original object.
    """
    arr = np.array(m, dtype=np.complex128, order="C")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def hermiticity_residual(m: np.ndarray) -> float:
    """max |M - M'| over entries."""
    return float(np.max(np.abs(m - m.conj().T)))


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A quantum state: Hermitian, PSD, unit trace. Build via validate_density."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_complex_matrix(self.matrix, "density matrix"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """A unitary evolution operator. Build via validate_unitary."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", as_complex_matrix(self.matrix, "unitary"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Effect:
    """One measurement operator A_{mu i}: outcome label mu, internal index i."""

    outcome_label: str
    internal_index: int
    matrix: np.ndarray

    def __post_init__(self):
        if not isinstance(self.outcome_label, str) or not self.outcome_label:
            raise ValidationError("outcome_label must be a nonempty string")
        if not isinstance(self.internal_index, int) or self.internal_index < 0:
            raise ValidationError("internal_index must be a nonnegative integer")
        object.__setattr__(self, "matrix", as_complex_matrix(self.matrix, "effect"))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Instrument:
    """A measurement step: effects {A_{mu i}} with sum A'A = 1.

    ``kind`` is inferred by validate_instrument, never declared, so a scenario
    file cannot lie about an instrument being projective.
    """

    effects: tuple[Effect, ...]
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(self.effects))
        if not self.effects:
            raise ValidationError("instrument needs at least one effect")
        if self.kind not in ("projective", "generalized"):
            raise ValidationError(f"unknown instrument kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    @property
    def labels(self) -> tuple[str, ...]:
        """Outcome labels in canonical (first appearance) order."""
        seen: dict[str, None] = {}
        for e in self.effects:
            seen.setdefault(e.outcome_label, None)
        return tuple(seen)

    def effects_for(self, label: str) -> tuple[Effect, ...]:
        out = tuple(e for e in self.effects if e.outcome_label == label)
        if not out:
            raise ValidationError(f"instrument has no outcome labeled {label!r}")
        return out


def validate_density(m, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """Validate Hermiticity, positivity and unit trace; report the violation."""
    arr = as_complex_matrix(m, "density matrix")
    herm = hermiticity_residual(arr)
    if herm > tol.validation:
        raise NotHermitian(f"density matrix not Hermitian: residual {herm:.3e}", residual=herm)
    eigs = np.linalg.eigvalsh((arr + dagger(arr)) / 2)
    min_eig = float(eigs[0])
    if min_eig < -tol.validation:
        raise NotPSD(f"density matrix not PSD: min eigenvalue {min_eig:.3e}", min_eigenvalue=min_eig)
    trace = complex(np.trace(arr))
    if abs(trace - 1.0) > tol.validation:
        raise TraceNotOne(f"density matrix trace {trace:.12g} != 1", trace=trace)
    return DensityMatrix(arr)


def validate_unitary(m, tol: Tolerances = DEFAULT_TOLERANCES) -> UnitaryOp:
    """Validate |U'U - 1| <= tolerance."""
    arr = as_complex_matrix(m, "unitary")
    residual = float(np.max(np.abs(dagger(arr) @ arr - np.eye(arr.shape[0]))))
    if residual > tol.validation:
        raise NotUnitary(f"operator not unitary: residual {residual:.3e}", residual=residual)
    return UnitaryOp(arr)


def _is_projective(effects: tuple[Effect, ...], tol: Tolerances) -> bool:
    """Projective iff Hermitian, idempotent, mutually exclusive, one index per label."""
    labels = [e.outcome_label for e in effects]
    if len(set(labels)) != len(labels):
        return False
    mats = [e.matrix for e in effects]
    for a in mats:
        if hermiticity_residual(a) > tol.validation:
            return False
        if float(np.max(np.abs(a @ a - a))) > tol.validation:
            return False
    for i, a in enumerate(mats):
        for j, b in enumerate(mats):
            if i != j and float(np.max(np.abs(a @ b))) > tol.validation:
                return False
    return True


def validate_instrument(effects, tol: Tolerances = DEFAULT_TOLERANCES) -> Instrument:
    """Validate completeness and classify the instrument's kind."""
    effects = tuple(effects)
    if not effects:
        raise ValidationError("instrument needs at least one effect")
    dim = effects[0].dim
    for e in effects:
        if e.dim != dim:
            raise DimensionMismatch(f"effect dims differ: {e.dim} vs {dim}")
    pairs = [(e.outcome_label, e.internal_index) for e in effects]
    if len(set(pairs)) != len(pairs):
        raise ValidationError("duplicate (label, index) pair in instrument")
    total = np.zeros((dim, dim), dtype=np.complex128)
    for e in effects:
        total += dagger(e.matrix) @ e.matrix
    residual = float(np.max(np.abs(total - np.eye(dim))))
    if residual > tol.validation:
        raise IncompleteInstrument(
            f"effects incomplete: |sum A'A - 1| = {residual:.3e}", residual=residual
        )
    kind = "projective" if _is_projective(effects, tol) else "generalized"
    return Instrument(effects=effects, kind=kind)


def psd_sqrt(m, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-tolerance, 0) are clipped to 0; anything lower is an
    error. Dims here are small enough that eigendecomposition beats iterative
    schemes on clarity with no meaningful cost.
    """
    arr = as_complex_matrix(m, "psd_sqrt input")
    herm = hermiticity_residual(arr)
    if herm > tol.validation:
        raise NotHermitian(f"psd_sqrt input not Hermitian: residual {herm:.3e}", residual=herm)
    w, v = np.linalg.eigh((arr + dagger(arr)) / 2)
    min_eig = float(w[0])
    if min_eig < -tol.validation:
        raise NotPSD(f"psd_sqrt input has eigenvalue {min_eig:.3e}", min_eigenvalue=min_eig)
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ dagger(v)
    root = (root + dagger(root)) / 2
    root.setflags(write=False)
    return root


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with row-major index convention:
    the joint index of (r_a, r_b) is r_a * dim(b) + r_b."""
    out = np.kron(as_complex_matrix(a, "tensor factor"), as_complex_matrix(b, "tensor factor"))
    out.setflags(write=False)
    return out


def state_statistics(rho: DensityMatrix, obs, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[float, float]:
    """Mean and standard deviation of a Hermitian observable in state rho."""
    o = as_complex_matrix(obs, "observable")
    if o.shape[0] != rho.dim:
        raise DimensionMismatch(f"observable dim {o.shape[0]} != state dim {rho.dim}")
    herm = hermiticity_residual(o)
    if herm > tol.validation:
        raise NotHermitian(f"observable not Hermitian: residual {herm:.3e}", residual=herm)
    mean_c = complex(np.einsum("ij,ji->", rho.matrix, o))
    if abs(mean_c.imag) > tol.validation:
        raise ValidationError(f"mean has imaginary residual {mean_c.imag:.3e}")
    mean = mean_c.real
    second = complex(np.einsum("ij,jk,ki->", rho.matrix, o, o)).real
    var = second - mean * mean
    if var < -tol.validation:
        raise ValidationError(f"negative variance {var:.3e}")
    return mean, float(np.sqrt(max(var, 0.0)))


# ---------------------------------------------------------------------------
# Cached per-instrument structure. Instruments are immutable and hashed by
# identity, so caching on the instance is sound; the cached payloads are small
# (diagonals and per-label weights) except for dense POVM stacks, which only
# arise for small dimensions in practice.
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _label_groups(inst: Instrument) -> tuple[tuple[str, tuple[int, ...]], ...]:
    """(label, effect positions) in canonical label order."""
    groups: dict[str, list[int]] = {}
    for k, e in enumerate(inst.effects):
        groups.setdefault(e.outcome_label, []).append(k)
    return tuple((label, tuple(pos)) for label, pos in groups.items())


@functools.lru_cache(maxsize=None)
def _diagonal_stack(inst: Instrument):
    """(n_effects, dim) array of diagonals if every effect is exactly diagonal, else None."""
    diags = []
    for e in inst.effects:
        d = np.diagonal(e.matrix)
        if not np.array_equal(e.matrix, np.diag(d)):
            return None
        diags.append(d)
    out = np.array(diags)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=None)
def _damping_matrix(inst: Instrument):
    """G with (G)_{xy} = sum_e d_e(x) conj(d_e(y)) for all-diagonal instruments.

    The measure-and-forget channel of such an instrument is the elementwise
    product rho * G.
    """
    ds = _diagonal_stack(inst)
    if ds is None:
        return None
    g = np.einsum("ex,ey->xy", ds, ds.conj())
    g.setflags(write=False)
    return g


@functools.lru_cache(maxsize=None)
def _povm_weights(inst: Instrument):
    """(n_labels, dim) real weights w_mu(x) = sum_i |d_{mu i}(x)|^2, diagonal case only."""
    ds = _diagonal_stack(inst)
    if ds is None:
        return None
    groups = _label_groups(inst)
    w = np.empty((len(groups), inst.dim))
    for row, (_, idxs) in enumerate(groups):
        w[row] = np.sum(np.abs(ds[list(idxs)]) ** 2, axis=0)
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=None)
def _povm_dense(inst: Instrument) -> np.ndarray:
    """(n_labels, dim, dim) stack of POVM elements E_mu = sum_i A'A."""
    groups = _label_groups(inst)
    out = np.zeros((len(groups), inst.dim, inst.dim), dtype=np.complex128)
    for row, (_, idxs) in enumerate(groups):
        for k in idxs:
            a = inst.effects[k].matrix
            out[row] += dagger(a) @ a
    out.setflags(write=False)
    return out


def apply_channel(inst: Instrument, x: np.ndarray) -> np.ndarray:
    """Measure-and-forget map: x -> sum_{mu i} A x A'."""
    g = _damping_matrix(inst)
    if g is not None:
        return x * g
    out = np.zeros_like(x)
    for e in inst.effects:
        out += e.matrix @ x @ dagger(e.matrix)
    return out


def outcome_probabilities(inst: Instrument, x: np.ndarray) -> np.ndarray:
    """tr(E_mu x) for each outcome label in canonical order (real parts)."""
    w = _povm_weights(inst)
    if w is not None:
        return w @ np.diagonal(x).real
    return np.einsum("mij,ji->m", _povm_dense(inst), x).real


def apply_outcome(inst: Instrument, label: str, x: np.ndarray) -> np.ndarray:
    """Unnormalized post-measurement state sum_i A_{mu i} x A'_{mu i} for label mu."""
    ds = _diagonal_stack(inst)
    idxs = dict(_label_groups(inst)).get(label)
    if idxs is None:
        raise ValidationError(f"instrument has no outcome labeled {label!r}")
    if ds is not None:
        rows = ds[list(idxs)]
        g = np.einsum("ex,ey->xy", rows, rows.conj())
        return x * g
    out = np.zeros_like(x)
    for k in idxs:
        a = inst.effects[k].matrix
        out += a @ x @ dagger(a)
    return out
