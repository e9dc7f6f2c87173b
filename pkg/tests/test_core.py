"""Tests for validation, linear-algebra helpers, and instrument channels."""

import numpy as np
import pytest

from decohist import (
    DimensionMismatch,
    Effect,
    IncompleteInstrument,
    NotHermitian,
    NotPSD,
    NotUnitary,
    Tolerances,
    TraceNotOne,
    apply_channel,
    apply_outcome,
    outcome_probabilities,
    psd_sqrt,
    spin_half_library,
    state_statistics,
    tensor_product,
    validate_density,
    validate_instrument,
    validate_unitary,
)


class TestValidateDensity:
    def test_accepts_diagonal_mixture(self):
        """A diagonal trace-one PSD matrix validates and is frozen read-only."""
        rho = validate_density(np.diag([0.75, 0.25]))
        assert rho.dim == 2
        np.testing.assert_allclose(rho.matrix, np.diag([0.75, 0.25]))
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 0.0

    def test_rejects_non_hermitian(self):
        """An asymmetric matrix raises NotHermitian carrying the residual."""
        with pytest.raises(NotHermitian) as err:
            validate_density(np.array([[0.5, 0.3], [0.0, 0.5]]))
        assert err.value.residual > 0.2

    def test_rejects_negative_eigenvalue(self):
        """A Hermitian matrix with a negative eigenvalue raises NotPSD."""
        with pytest.raises(NotPSD):
            validate_density(np.diag([1.5, -0.5]))

    def test_rejects_wrong_trace(self):
        """Trace 0.9 is outside the validation tolerance."""
        with pytest.raises(TraceNotOne):
            validate_density(np.diag([0.65, 0.25]))

    def test_rejects_non_square(self):
        """A 2x3 array raises DimensionMismatch before any spectral test."""
        with pytest.raises(DimensionMismatch):
            validate_density(np.zeros((2, 3)))

    def test_tolerance_slack_accepts_tiny_violations(self):
        """Violations below the validation tolerance pass."""
        rho = validate_density(np.diag([0.75 + 1e-12, 0.25]))
        assert rho.matrix[0, 0] == pytest.approx(0.75, abs=1e-11)


class TestValidateUnitary:
    def test_accepts_hadamard(self):
        """The Hadamard matrix is unitary."""
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        u = validate_unitary(h)
        np.testing.assert_allclose(u.matrix.conj().T @ u.matrix, np.eye(2), atol=1e-12)

    def test_rejects_scaled_identity(self):
        """2 * identity fails the unitarity residual."""
        with pytest.raises(NotUnitary):
            validate_unitary(2 * np.eye(2))

    def test_accepts_random_phased_permutations(self):
        """Seeded phase-decorated permutations validate for dims 2..6."""
        rng = np.random.default_rng(7)
        for dim in range(2, 7):
            perm = rng.permutation(dim)
            u = np.zeros((dim, dim), dtype=complex)
            u[perm, np.arange(dim)] = np.exp(2j * np.pi * rng.random(dim))
            assert validate_unitary(u).dim == dim


class TestValidateInstrument:
    def test_fuzzy_completeness(self):
        """The fuzzy instrument satisfies sum of A'A = identity exactly."""
        lib = spin_half_library()
        total = sum(
            e.matrix.conj().T @ e.matrix for e in lib.fuzzy.effects
        )
        np.testing.assert_allclose(total, np.eye(2), atol=1e-12)

    def test_rejects_incomplete_effects(self):
        """Dropping one effect of a projective pair breaks completeness."""
        lib = spin_half_library()
        with pytest.raises(IncompleteInstrument):
            validate_instrument([lib.projective_z.effects[0]])

    def test_kind_inference_projective(self):
        """Orthogonal projectors are classified as projective."""
        lib = spin_half_library()
        assert lib.projective_z.kind == "projective"
        assert lib.projective_x.kind == "projective"

    def test_kind_inference_generalized(self):
        """The fuzzy instrument is not projective."""
        lib = spin_half_library()
        assert lib.fuzzy.kind == "generalized"

    def test_labels_group_internal_indices(self):
        """Two effects sharing a label are grouped under one outcome."""
        iso = np.eye(2) / np.sqrt(2)
        inst = validate_instrument(
            [Effect("a", 0, iso), Effect("a", 1, iso)]
        )
        assert inst.labels == ("a",)
        assert len(inst.effects_for("a")) == 2

    def test_rejects_mixed_dimensions(self):
        """Effects of different dimension raise DimensionMismatch."""
        with pytest.raises(DimensionMismatch):
            validate_instrument(
                [Effect("a", 0, np.eye(2) / np.sqrt(2)), Effect("b", 0, np.eye(3) / np.sqrt(2))]
            )


class TestPsdSqrt:
    def test_diagonal_case(self):
        """sqrt(diag(4, 9)) = diag(2, 3)."""
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_roundtrip_random_psd(self):
        """Squaring the root recovers seeded PSD matrices for dims 2..8."""
        tol = Tolerances()
        rng = np.random.default_rng(11)
        for dim in range(2, 9):
            g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            m = g @ g.conj().T
            root = psd_sqrt(m)
            assert np.max(np.abs(root @ root - m)) <= 10 * tol.validation * np.max(np.abs(m))

    def test_clips_tolerated_negative_eigenvalue(self):
        """An eigenvalue just below zero is clipped rather than rejected."""
        root = psd_sqrt(np.diag([1.0, -1e-13]))
        np.testing.assert_allclose(root, np.diag([1.0, 0.0]), atol=1e-6)

    def test_rejects_genuinely_negative(self):
        """A clearly negative matrix raises NotPSD."""
        with pytest.raises(NotPSD):
            psd_sqrt(np.diag([1.0, -0.5]))


class TestTensorProduct:
    def test_identity_times_identity(self):
        """1 (x) 1 = identity on the composite."""
        np.testing.assert_allclose(tensor_product(np.eye(2), np.eye(2)), np.eye(4))

    def test_sigma_z_times_identity(self):
        """sigma_z (x) 1 = diag(1, 1, -1, -1) in row-major convention."""
        lib = spin_half_library()
        np.testing.assert_allclose(
            tensor_product(lib.sigma_z, np.eye(2)), np.diag([1.0, 1.0, -1.0, -1.0])
        )

    def test_pure_state_placement(self):
        """|up><up| (x) |down><down| puts its single 1 at row/col 1."""
        up = np.diag([1.0, 0.0])
        down = np.diag([0.0, 1.0])
        composite = tensor_product(up, down)
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        np.testing.assert_allclose(composite, expected)


class TestStateStatistics:
    def test_up_z_sharp(self):
        """<sigma_z> = 1 with zero spread on the z-up state."""
        lib = spin_half_library()
        mean, spread = state_statistics(lib.up_z, lib.sigma_z)
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert spread == pytest.approx(0.0, abs=1e-9)

    def test_mixed_state(self):
        """The maximally mixed state has <sigma_z> = 0 and unit spread."""
        lib = spin_half_library()
        mean, spread = state_statistics(lib.mixed, lib.sigma_z)
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert spread == pytest.approx(1.0, abs=1e-12)

    def test_position_of_wavepacket(self):
        """A Gaussian wavepacket reports its center and width in position."""
        from decohist import GridSystem, gaussian_wavepacket

        grid = GridSystem(n_points=256, x_min=-32.0, x_max=32.0)
        rho = gaussian_wavepacket(grid, center=3.0, sigma=2.0)
        mean, spread = state_statistics(rho, grid.position_operator())
        assert mean == pytest.approx(3.0, abs=1e-6)
        assert spread == pytest.approx(2.0, rel=1e-3)


class TestChannels:
    def test_fuzzy_probabilities_on_up(self):
        """The fuzzy instrument reads the z-up state as outcome 0 with certainty."""
        lib = spin_half_library()
        np.testing.assert_allclose(
            outcome_probabilities(lib.fuzzy, lib.up_z.matrix), [1.0, 0.0], atol=1e-12
        )

    def test_fuzzy_probabilities_on_mixed(self):
        """On the maximally mixed state the fuzzy outcomes are (3/4, 1/4)."""
        lib = spin_half_library()
        np.testing.assert_allclose(
            outcome_probabilities(lib.fuzzy, lib.mixed.matrix), [0.75, 0.25], atol=1e-12
        )

    def test_fuzzy_channel_damps_coherence(self):
        """The channel keeps the diagonal and scales off-diagonals by 1/sqrt(2)."""
        lib = spin_half_library()
        out = apply_channel(lib.fuzzy, lib.up_x.matrix)
        np.testing.assert_allclose(np.diag(out), [0.5, 0.5], atol=1e-12)
        assert out[0, 1] == pytest.approx(0.5 / np.sqrt(2), abs=1e-12)

    def test_apply_outcome_unnormalized(self):
        """Selecting one outcome returns the unnormalized branch A rho A'."""
        lib = spin_half_library()
        branch = apply_outcome(lib.fuzzy, "1", lib.mixed.matrix)
        np.testing.assert_allclose(branch, np.diag([0.0, 0.25]), atol=1e-12)

    def test_channel_preserves_trace(self):
        """Completeness makes every channel trace-preserving on seeded states."""
        lib = spin_half_library()
        rng = np.random.default_rng(5)
        for _ in range(20):
            g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
            for inst in (lib.fuzzy, lib.projective_x, lib.projective_y):
                out = apply_channel(inst, rho)
                assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        """Outcome probabilities of a valid instrument always sum to 1."""
        lib = spin_half_library()
        rng = np.random.default_rng(9)
        for _ in range(20):
            g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            rho = g @ g.conj().T
            rho /= np.trace(rho).real
            p = outcome_probabilities(lib.fuzzy, rho)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)
            assert (p >= -1e-12).all()
