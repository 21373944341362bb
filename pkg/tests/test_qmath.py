"""Spin operators, dissipator, entropy, and eigendecomposition."""

import numpy as np
import pytest

from gascollide import (DensityMatrix, Operator, SpinQuantum, dissipator, eigh, gibbs_state,
                        spin_operators, trace_distance, von_neumann_entropy)


def random_density(d, rng, pure=False):
    if pure:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return DensityMatrix.from_vector(v)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def random_unitary(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


class TestSpinOperators:
    def test_spin_half_is_pauli_raising(self):
        jz, jp, jm = spin_operators(0.5)
        # basis ordered m = -1/2, +1/2: J+ has a single entry 1 coupling them
        nz = np.nonzero(jp.entries)
        assert len(nz[0]) == 1
        assert jp.entries[1, 0] == pytest.approx(1.0)
        assert np.allclose(np.diag(jz.entries), [-0.5, 0.5])
        assert np.allclose(jm.entries, jp.entries.conj().T)

    def test_j20_dimension(self):
        jz, _, _ = spin_operators(20)
        assert jz.dim == 41

    @pytest.mark.parametrize("j", [0.5, 1.0, 1.5, 2.0, 7.5, 13.0, 25.0])
    def test_angular_momentum_algebra(self, j):
        jz, jp, jm = spin_operators(j)
        comm_pm = jp.entries @ jm.entries - jm.entries @ jp.entries
        assert np.max(np.abs(comm_pm - 2.0 * jz.entries)) < 1e-12
        comm_zp = jz.entries @ jp.entries - jp.entries @ jz.entries
        assert np.max(np.abs(comm_zp - jp.entries)) < 1e-12
        comm_zm = jz.entries @ jm.entries - jm.entries @ jz.entries
        assert np.max(np.abs(comm_zm + jm.entries)) < 1e-12

    def test_matrix_element_values(self):
        j = 2.0
        _, jp, _ = spin_operators(j)
        m = np.arange(-j, j)
        expected = np.sqrt(j * (j + 1) - m * (m + 1))
        assert np.allclose(np.diag(jp.entries, k=-1), expected)

    @pytest.mark.parametrize("bad", [0.3, -0.5, 0.0, np.nan])
    def test_rejects_non_half_integer(self, bad):
        with pytest.raises(ValueError):
            spin_operators(bad)


class TestDissipator:
    def test_sigma_minus_on_excited(self):
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        excited = DensityMatrix.pure(2, 1)
        out = dissipator(Operator(sm), excited)
        expected = np.diag([1.0, -1.0]).astype(complex)  # ground minus excited projector
        assert np.allclose(out, expected, atol=1e-14)

    def test_identity_channel_is_null(self):
        rng = np.random.default_rng(0)
        rho = random_density(4, rng)
        out = dissipator(Operator(np.eye(4, dtype=complex)), rho)
        assert np.max(np.abs(out)) < 1e-14

    @pytest.mark.parametrize("seed", range(5))
    def test_hermitian_traceless(self, seed):
        rng = np.random.default_rng(seed)
        d = rng.integers(2, 7)
        l_op = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = random_density(d, rng)
        out = dissipator(l_op, rho)
        assert abs(np.trace(out)) < 1e-12
        assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dissipator(np.eye(2, dtype=complex), DensityMatrix.maximally_mixed(3))


class TestEntropy:
    def test_pure_state_zero(self):
        assert von_neumann_entropy(DensityMatrix.pure(5, 2)) == 0.0

    def test_maximally_mixed_qubit(self):
        s = von_neumann_entropy(DensityMatrix.maximally_mixed(2))
        assert s == pytest.approx(np.log(2), abs=1e-14)

    def test_two_level_example(self):
        s = von_neumann_entropy(DensityMatrix.from_populations([0.2, 0.8]))
        expected = -0.2 * np.log(0.2) - 0.8 * np.log(0.8)
        assert s == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("seed", range(4))
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(5, rng)
        u = random_unitary(5, rng)
        rotated = u @ rho.entries @ u.conj().T
        assert von_neumann_entropy(rotated) == pytest.approx(
            von_neumann_entropy(rho), abs=1e-10)


class TestEigh:
    def test_diagonal_input(self):
        vals, _ = eigh(np.diag([3.0, -1.0, 2.0]).astype(complex))
        assert np.allclose(vals, [-1.0, 2.0, 3.0])

    def test_identity(self):
        vals, vecs = eigh(np.eye(4, dtype=complex))
        assert np.allclose(vals, 1.0)
        assert np.allclose(vecs.conj().T @ vecs, np.eye(4))

    def test_reconstruction(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        a = a + a.conj().T
        vals, vecs = eigh(a)
        recon = vecs @ np.diag(vals) @ vecs.conj().T
        assert np.linalg.norm(recon - a) < 1e-10
        assert np.all(np.diff(vals) >= 0)

    def test_resymmetrizes_small_defect(self):
        a = np.diag([1.0, 2.0]).astype(complex)
        a[0, 1] = 1e-12  # asymmetric but below tolerance
        vals, _ = eigh(a)
        assert np.allclose(vals, [1.0, 2.0], atol=1e-10)

    def test_rejects_non_hermitian(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        with pytest.raises(ValueError):
            eigh(a)


class TestDensityMatrixInvariants:
    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_rejects_non_hermitian(self):
        a = np.array([[0.5, 0.3], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            DensityMatrix(a)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.2, -0.2]).astype(complex))

    def test_relaxed_tolerances_accept_integrator_noise(self):
        a = np.diag([0.5 + 3e-9, 0.5 - 5e-9]).astype(complex)
        DensityMatrix(a, trace_tol=1e-8, herm_tol=1e-8, psd_tol=1e-7)

    def test_entries_are_frozen(self):
        rho = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.entries[0, 0] = 0.7


def test_gibbs_state_matches_direct_weights():
    h = np.diag([0.0, 1.0, 2.5]).astype(complex)
    beta = 0.7
    w = np.exp(-beta * np.array([0.0, 1.0, 2.5]))
    w /= w.sum()
    rho = gibbs_state(h, beta)
    assert np.allclose(rho.populations(), w, atol=1e-14)
    # negative temperature = inverted weights
    rho_inv = gibbs_state(h, -beta)
    assert np.all(np.diff(rho_inv.populations()) > 0)


def test_trace_distance_basics():
    a = DensityMatrix.pure(2, 0)
    b = DensityMatrix.pure(2, 1)
    assert trace_distance(a, b) == pytest.approx(1.0, abs=1e-12)
    assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-14)


def test_spin_quantum_validation():
    assert SpinQuantum(2.5).dim == 6
    with pytest.raises(ValueError):
        SpinQuantum(1.2)
