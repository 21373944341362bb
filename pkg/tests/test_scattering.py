"""Kinematics, Born amplitudes, micro-reversibility, channel operators."""

import numpy as np
import pytest

from gascollide import (AmplitudeModel, ChannelClosedError, GasEnvironment, InteractionSpec,
                        LevelSystem, QuadratureSpec, born_gaussian_amplitude,
                        check_microreversibility, derived_scales, effective_hamiltonian,
                        enumerate_channels, lindblad_channel_operator, outgoing_momentum,
                        spin_exchange_coupling)


def spin_setup(j=1.0, omega_s=1.0, delta=0.5, t_a=1.0, t_m=1.0, v0=0.4, radius=0.8,
               density=0.7, mass=1.0):
    dim = int(round(2 * j + 1))
    m_vals = np.arange(-j, j + 0.5)
    levels = LevelSystem(omega_s * m_vals)
    env = GasEnvironment(ancilla_energies=[0.0, omega_s + delta], T_A=t_a, T_M=t_m,
                         density=density, mass=mass)
    spec = InteractionSpec(V0=v0, R=radius, coupling=spin_exchange_coupling(j))
    return levels, env, spec, AmplitudeModel.born_gaussian(levels, spec, env)


class TestOutgoingMomentum:
    def test_elastic_returns_input(self):
        assert outgoing_momentum(2.3, 0.0, 0.5, 0.5, 1.7) == pytest.approx(2.3, rel=1e-15)

    def test_zero_momentum_endothermic_closed(self):
        with pytest.raises(ChannelClosedError):
            outgoing_momentum(0.0, 1.0, 0.0, 0.0, 1.0)

    def test_radicand_arithmetic(self):
        # p^2 = 4, 2m(E + eps_k - eps_l) = 3  ->  |q| = 1
        assert outgoing_momentum(2.0, 1.0, 0.5, 0.0, 1.0) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("seed", range(6))
    def test_round_trip_identity(self, seed):
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.5, 3.0)
        e, ek, el, m = rng.uniform(-0.4, 0.4, 4)
        m = abs(m) + 0.5
        try:
            q = outgoing_momentum(p, e, ek, el, m)
        except ChannelClosedError:
            return
        back = outgoing_momentum(q, -e, el, ek, m)
        assert back == pytest.approx(p, rel=1e-12)

    def test_rejects_negative_momentum(self):
        with pytest.raises(ValueError):
            outgoing_momentum(-1.0, 0.0, 0.0, 0.0, 1.0)


class TestBornAmplitude:
    def test_zero_coupling_element(self):
        levels, env, spec, _ = spin_setup()
        # J+ sigma- has no (i=j, k=l) diagonal element
        f = born_gaussian_amplitude(spec, env, (1, 1, 0, 0), [1.0, 0, 0], [1.0, 0, 0])
        assert f == 0.0

    def test_forward_value(self):
        levels, env, spec, _ = spin_setup(j=1.0)
        scales = derived_scales(env, spec)
        p = np.array([0.9, -0.2, 0.4])
        f = born_gaussian_amplitude(spec, env, (2, 1, 0, 1), p, p)
        expected = -np.sqrt(np.pi / 2) * spec.R * spec.V0 / scales.E_R \
            * spec.coupling[2, 1, 0, 1]
        assert f == pytest.approx(complex(expected), rel=1e-14)

    def test_momentum_transfer_suppression(self):
        levels, env, spec, _ = spin_setup()
        scales = derived_scales(env, spec)
        p = np.array([1.0, 0.0, 0.0])
        q = p + np.array([0.0, scales.p_R, 0.0])  # |q - p| = p_R
        f_fwd = born_gaussian_amplitude(spec, env, (2, 1, 0, 1), p, p)
        f_off = born_gaussian_amplitude(spec, env, (2, 1, 0, 1), q, p)
        assert abs(f_off) / abs(f_fwd) == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_model_value_enforces_energy_shell(self):
        levels, env, spec, model = spin_setup(delta=0.3)
        p = np.array([2.0, 0.0, 0.0])
        de = model.channel_delta_e(2, 1, 0, 1)
        q_mag = np.sqrt(p @ p - 2 * env.mass * de)
        omega = np.array([0.0, 1.0, 0.0])
        model.value(2, 1, 0, 1, q_mag * omega, p)  # on shell: fine
        with pytest.raises(ValueError):
            model.value(2, 1, 0, 1, 1.5 * q_mag * omega, p)

    def test_model_value_closed_channel(self):
        levels, env, spec, model = spin_setup(delta=5.0)
        # system de-excitation with ancilla excitation costs ~hbar*Delta
        de = model.channel_delta_e(0, 1, 1, 0)
        assert de > 0
        p = np.array([1e-3, 0.0, 0.0])
        with pytest.raises(ChannelClosedError):
            model.value(0, 1, 1, 0, p, p)


class TestMicroReversibility:
    def test_born_real_hermitian_passes(self):
        _, _, _, model = spin_setup()
        report = check_microreversibility(model, samples=2000, tol=1e-12)
        assert report.passed
        assert report.max_violation == 0.0
        assert report.n_evaluated > 0

    def test_zero_coupling_trivially_passes(self):
        levels = LevelSystem([0.0, 1.0])
        env = GasEnvironment(ancilla_energies=[0.0, 1.0], T_A=1, T_M=1, density=1, mass=1)
        spec = InteractionSpec(V0=1.0, R=1.0, coupling=np.zeros((2, 2, 2, 2), complex))
        model = AmplitudeModel.born_gaussian(levels, spec, env)
        report = check_microreversibility(model, samples=100, tol=1e-12)
        assert report.passed and report.max_violation == 0.0

    # A tabulated model is micro-reversible only to its interpolation
    # accuracy (the forward and reversed lookups hit different grid cells,
    # and on-shell tables have a sqrt kink at channel thresholds), so the
    # clean-table tolerance reflects the grid, not 1e-12.
    def test_corrupted_table_fails(self, tmp_path):
        levels, env, spec, model = spin_setup(j=0.5)
        path = tmp_path / "amps.csv"
        _write_spin_table(path, model, corrupt=True, n_p=48, n_ct=33)
        table = AmplitudeModel.from_table(path, levels, env)
        report = check_microreversibility(table, samples=4000, tol=0.05)
        assert not report.passed
        assert report.max_violation > 0.05
        assert report.worst_channel in {(1, 0, 0, 1), (0, 1, 1, 0)}

    def test_clean_table_passes_at_grid_accuracy(self, tmp_path):
        levels, env, spec, model = spin_setup(j=0.5)
        path = tmp_path / "amps.csv"
        _write_spin_table(path, model, corrupt=False, n_p=48, n_ct=33)
        table = AmplitudeModel.from_table(path, levels, env)
        report = check_microreversibility(table, samples=4000, tol=0.05)
        assert report.passed, f"max violation {report.max_violation}"


def _write_spin_table(path, born_model, corrupt=False, n_p=24, n_ct=17, p_max=6.0):
    """Tabulate the Born spin amplitudes on a tensor grid (optionally with
    one corrupted node breaking time-reversal symmetry)."""
    p_grid = np.linspace(1e-3, p_max, n_p)
    ct_grid = np.linspace(-1.0, 1.0, n_ct)
    lines = ["p_mag,cos_theta,i,j,k,l,re,im"]
    for (i, j, k, l) in born_model.channel_indices():
        for pm in p_grid:
            for ct in ct_grid:
                de = born_model.channel_delta_e(i, j, k, l)
                rad = pm**2 - 2 * born_model.env.mass * de
                qm = np.sqrt(max(rad, 0.0))  # continuous continuation below threshold
                f = complex(np.asarray(born_model.value_polar(i, j, k, l, qm, pm, ct)))
                if corrupt and (i, j, k, l) == (1, 0, 0, 1) and pm == p_grid[10] \
                        and ct == ct_grid[8]:
                    f *= 3.0
                lines.append(f"{float(pm)!r},{float(ct)!r},{i},{j},{k},{l},"
                             f"{float(f.real)!r},{float(f.imag)!r}")
    path.write_text("\n".join(lines) + "\n")


class TestChannelOperators:
    def test_distinct_gap_ladder_single_entry(self):
        # gaps all distinct: each (E, k, l) picks out at most one pair
        levels = LevelSystem([0.0, 1.0, 2.3, 3.9])
        env = GasEnvironment(ancilla_energies=[0.0, 0.8], T_A=1, T_M=1, density=1, mass=1)
        rng = np.random.default_rng(2)
        a = rng.standard_normal((4, 4, 2, 2))
        v = a + a.transpose(1, 0, 3, 2)  # real symmetric: hermitian
        spec = InteractionSpec(V0=0.5, R=1.0, coupling=v.astype(complex))
        model = AmplitudeModel.born_gaussian(levels, spec, env)
        p = np.array([2.5, 0.3, -0.1])
        omega = np.array([0.0, 0.0, 1.0])
        for ch in enumerate_channels(levels, env, model):
            op = lindblad_channel_operator(levels, model, ch.E, ch.k, ch.l, omega, p)
            assert np.count_nonzero(op.entries) <= 1

    def test_elastic_forward_is_diagonal_forward_amplitudes(self):
        levels = LevelSystem([0.0, 1.0, 2.3])
        env = GasEnvironment(ancilla_energies=[0.0, 0.8], T_A=1, T_M=1, density=1, mass=1)
        v = np.zeros((3, 3, 2, 2), dtype=complex)
        for i in range(3):
            v[i, i, 0, 0] = 1.0 + 0.3 * i
            v[i, i, 1, 1] = 0.5
        spec = InteractionSpec(V0=0.7, R=1.2, coupling=v)
        model = AmplitudeModel.born_gaussian(levels, spec, env)
        p = np.array([0.0, 0.0, 1.7])
        op = lindblad_channel_operator(levels, model, 0.0, 0, 0, p / np.linalg.norm(p), p)
        assert np.allclose(op.entries, np.diag(np.diag(op.entries)))
        for i in range(3):
            expected = model.value(i, i, 0, 0, p, p)
            assert op.entries[i, i] == pytest.approx(expected, rel=1e-13)

    def test_spin_case_only_two_active_channels(self):
        levels, env, spec, model = spin_setup(j=1.0, omega_s=1.0, delta=0.4)
        p = np.array([2.0, 0.0, 0.5])
        omega = np.array([1.0, 0.0, 0.0])
        active = []
        for e in (-1.0, 0.0, 1.0):
            for k in (0, 1):
                for l in (0, 1):
                    op = lindblad_channel_operator(levels, model, e, k, l, omega, p)
                    if np.max(np.abs(op.entries)) > 0:
                        active.append((e, k, l))
        assert sorted(active) == [(-1.0, 1, 0), (1.0, 0, 1)]

    def test_linear_in_interaction_strength(self):
        levels, env, spec, model = spin_setup(v0=0.4)
        scaled_spec = InteractionSpec(V0=3.0 * spec.V0, R=spec.R, coupling=spec.coupling)
        scaled = AmplitudeModel.born_gaussian(levels, scaled_spec, env)
        p = np.array([1.5, 0.2, 0.0])
        omega = np.array([0.0, 1.0, 0.0])
        op1 = lindblad_channel_operator(levels, model, 1.0, 0, 1, omega, p)
        op3 = lindblad_channel_operator(levels, scaled, 1.0, 0, 1, omega, p)
        assert np.max(np.abs(op3.entries - 3.0 * op1.entries)) < 1e-12 * np.max(np.abs(op3.entries))

    def test_all_closed_returns_zero_operator(self):
        levels, env, spec, model = spin_setup(delta=50.0)
        de = model.channel_delta_e(0, 1, 1, 0)  # heavily endothermic
        p = np.array([0.1, 0.0, 0.0])
        assert p @ p < 2 * env.mass * de
        op = lindblad_channel_operator(levels, model, -1.0, 1, 0, [1, 0, 0], p)
        assert np.all(op.entries == 0)


class TestEffectiveHamiltonian:
    def test_spin_exchange_vanishes(self):
        levels, env, spec, model = spin_setup()
        h = effective_hamiltonian(levels, env=env, model=model, quad=QuadratureSpec())
        assert np.max(np.abs(h.entries)) == 0.0

    def test_constant_diagonal_coupling_proportional_to_identity(self):
        levels = LevelSystem([0.0, 1.0, 2.3])
        env = GasEnvironment(ancilla_energies=[0.0, 0.8], T_A=1.2, T_M=0.9,
                             density=0.35, mass=1.0)
        v = np.zeros((3, 3, 2, 2), dtype=complex)
        for i in range(3):
            for k in range(2):
                v[i, i, k, k] = 1.0
        spec = InteractionSpec(V0=0.6, R=1.1, coupling=v)
        model = AmplitudeModel.born_gaussian(levels, spec, env)
        h = effective_hamiltonian(levels, model, env, QuadratureSpec())
        scales = derived_scales(env, spec)
        # forward amplitude is p-independent: h_eff = -2 pi hbar^2 n/m * f0 * Id
        f0 = -np.sqrt(np.pi / 2) * spec.R * spec.V0 / scales.E_R
        expected = -2.0 * np.pi * env.hbar**2 * env.density / env.mass * f0
        assert np.allclose(h.entries, expected * np.eye(3), rtol=1e-9)
        assert np.max(np.abs(h.entries - h.entries.conj().T)) < 1e-12

    def test_vanishing_density_limit(self):
        levels = LevelSystem([0.0, 1.0])
        v = np.zeros((2, 2, 2, 2), dtype=complex)
        v[0, 0, 0, 0] = v[1, 1, 0, 0] = v[0, 0, 1, 1] = v[1, 1, 1, 1] = 1.0
        spec = InteractionSpec(V0=1.0, R=1.0, coupling=v)
        dense = GasEnvironment(ancilla_energies=[0.0, 0.5], T_A=1, T_M=1, density=1.0, mass=1)
        dilute = GasEnvironment(ancilla_energies=[0.0, 0.5], T_A=1, T_M=1, density=1e-12, mass=1)
        h_dense = effective_hamiltonian(levels, AmplitudeModel.born_gaussian(levels, spec, dense),
                                        dense, QuadratureSpec())
        h_dilute = effective_hamiltonian(levels, AmplitudeModel.born_gaussian(levels, spec, dilute),
                                         dilute, QuadratureSpec())
        # linear in density, so the dilute limit is the zero operator
        assert np.allclose(h_dilute.entries, 1e-12 * h_dense.entries, rtol=1e-9)
        assert np.max(np.abs(h_dilute.entries)) < 1e-11 * np.max(np.abs(h_dense.entries))

    def test_commutes_with_bare_hamiltonian(self):
        levels = LevelSystem([0.0, 1.0, 2.3])
        env = GasEnvironment(ancilla_energies=[0.0, 0.8], T_A=1, T_M=1, density=0.5, mass=1)
        rng = np.random.default_rng(4)
        a = rng.standard_normal((3, 3, 2, 2))
        v = (a + a.transpose(1, 0, 3, 2)).astype(complex)
        spec = InteractionSpec(V0=0.5, R=1.0, coupling=v)
        model = AmplitudeModel.born_gaussian(levels, spec, env)
        h = effective_hamiltonian(levels, model, env, QuadratureSpec())
        h_s = levels.hamiltonian().entries
        comm = h.entries @ h_s - h_s @ h.entries
        assert np.max(np.abs(comm)) < 1e-10


class TestTableModel:
    def test_round_trip_interpolation_at_nodes(self, tmp_path):
        levels, env, spec, model = spin_setup(j=0.5)
        path = tmp_path / "t.csv"
        _write_spin_table(path, model, n_p=12, n_ct=9)
        table = AmplitudeModel.from_table(path, levels, env)
        pm, ct = 2.1703, 0.25  # on-grid nodes are exact
        p_grid = np.linspace(1e-3, 6.0, 12)
        ct_grid = np.linspace(-1.0, 1.0, 9)
        got = table.value_polar(1, 0, 0, 1, p_grid[4], p_grid[4], ct_grid[6])
        want = model.value_polar(1, 0, 0, 1, p_grid[4], p_grid[4], ct_grid[6])
        assert complex(np.asarray(got)) == pytest.approx(complex(np.asarray(want)), rel=1e-12)

    def test_extrapolation_is_counted(self, tmp_path):
        levels, env, spec, model = spin_setup(j=0.5)
        path = tmp_path / "t.csv"
        _write_spin_table(path, model, n_p=8, n_ct=7, p_max=2.0)
        table = AmplitudeModel.from_table(path, levels, env)
        from gascollide.scattering import EvalStats

        stats = EvalStats()
        table.value_polar(1, 0, 0, 1, 5.0, 5.0, 0.0, stats=stats)  # beyond p grid
        assert stats.extrapolated == 1
        # constant extrapolation clamps to the edge value
        edge = table.value_polar(1, 0, 0, 1, 2.0, 2.0, 0.0)
        far = table.value_polar(1, 0, 0, 1, 9.0, 9.0, 0.0)
        assert complex(np.asarray(far)) == pytest.approx(complex(np.asarray(edge)), rel=1e-12)

    def test_rejects_incomplete_grid(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("p_mag,cos_theta,i,j,k,l,re,im\n"
                        "1.0,0.0,0,0,0,0,1.0,0.0\n"
                        "2.0,0.5,0,0,0,0,1.0,0.0\n")
        levels = LevelSystem([0.0, 1.0])
        env = GasEnvironment(ancilla_energies=[0.0], T_A=1, T_M=1, density=1, mass=1)
        with pytest.raises(ValueError):
            AmplitudeModel.from_table(path, levels, env)
