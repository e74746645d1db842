import numpy as np
import pytest

from crwsim.chain import ChainParams, LindbladSet, build_hamiltonian, build_lindblad, initial_transfer_state
from crwsim.dynamics import (
    IntegrationError,
    TimeGrid,
    TrajectoryResult,
    evolve_lindblad,
    evolve_schrodinger,
    evolve_schrodinger_td,
    liouvillian_matrix,
    standard_observables,
)
from crwsim.operators import QOperator, QState, SpaceDescriptor, ket_bra


def two_level(omega=0.0):
    space = SpaceDescriptor((2,))
    h = omega * np.array([[0, 1], [1, 0]], dtype=complex)
    return space, QOperator(space, h)


def ground(space):
    v = np.zeros(space.dim, dtype=complex)
    v[0] = 1.0
    return QState(space, "pure", v)


def proj1(space):
    return {"p1": QOperator(space, ket_bra(2, 1, 1))}


class TestTimeGrid:
    def test_times(self):
        g = TimeGrid(0.0, 1.0, 4)
        np.testing.assert_allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])

    def test_stride(self):
        g = TimeGrid(0.0, 1.0, 4, stride=2)
        np.testing.assert_allclose(g.times, [0, 0.5, 1.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 0)
        with pytest.raises(ValueError):
            TimeGrid(0.0, 1.0, 5, stride=2)


class TestSchrodinger:
    def test_zero_hamiltonian_constant(self):
        space, h = two_level(0.0)
        res = evolve_schrodinger(h, ground(space), TimeGrid(0, 10, 20), proj1(space))
        np.testing.assert_allclose(res.series["p1"], 0.0, atol=1e-14)

    @pytest.mark.parametrize("method", ["spectral", "krylov", "rk4"])
    def test_rabi_formula(self, method):
        om = 0.7
        space, h = two_level(om)
        grid = TimeGrid(0, 8.0, 160)
        res = evolve_schrodinger(h, ground(space), grid, proj1(space), method=method)
        expected = np.sin(om * grid.times) ** 2
        tol = 1e-8
        assert np.abs(res.series["p1"] - expected).max() <= tol

    def test_energy_conserved(self):
        p = ChainParams(n=2, delta=10.0, j_c=0.5, omega=0.02, boundary="periodic")
        h = build_hamiltonian(p)
        psi0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2))
        res = evolve_schrodinger(h, psi0, TimeGrid(0, 200.0, 100), {"energy": h})
        drift = np.abs(res.series["energy"] - res.series["energy"][0]).max()
        assert drift <= 1e-8

    def test_krylov_matches_spectral_large(self):
        p = ChainParams(n=3, delta=10.0, j_c=0.5, omega=0.02, boundary="periodic")
        h = build_hamiltonian(p)
        psi0 = initial_transfer_state(p, 0.0, 1.0)
        obs = standard_observables(p)
        grid = TimeGrid(0, 100.0, 25)
        a = evolve_schrodinger(h, psi0, grid, obs, method="spectral")
        b = evolve_schrodinger(h, psi0, grid, obs, method="krylov")
        for k in obs:
            np.testing.assert_allclose(a.series[k], b.series[k], atol=1e-10)

    def test_rk4_norm_abort(self):
        space, h = two_level(5.0)
        with pytest.raises(IntegrationError):
            evolve_schrodinger(h, ground(space), TimeGrid(0, 100.0, 10),
                               proj1(space), method="rk4", dt=0.5)

    def test_step_halving_converges(self):
        om = 0.9
        space, h = two_level(om)
        grid = TimeGrid(0, 10.0, 20)
        dt = 0.01 / h.norm_scale()
        a = evolve_schrodinger(h, ground(space), grid, proj1(space), method="rk4", dt=dt)
        b = evolve_schrodinger(h, ground(space), grid, proj1(space), method="rk4", dt=dt / 2)
        assert np.abs(a.series["p1"] - b.series["p1"]).max() <= 1e-6


class TestTimeDependent:
    def test_static_limit_matches_spectral(self):
        p = ChainParams(n=2, delta=5.0, j_c=0.5, omega=0.05)
        h = build_hamiltonian(p)
        psi0 = initial_transfer_state(p, 0.0, 1.0)
        obs = standard_observables(p)
        grid = TimeGrid(0, 40.0, 40)
        a = evolve_schrodinger(h, psi0, grid, obs)
        b = evolve_schrodinger_td(lambda t: h.matrix, psi0, grid, obs)
        for k in obs:
            np.testing.assert_allclose(a.series[k], b.series[k], atol=1e-8)

    def test_expm_matches_rk4_on_driven_system(self):
        space = SpaceDescriptor((2,))
        sx = np.array([[0, 1], [1, 0]], dtype=complex)

        def h_func(t):
            return 0.4 * np.sin(0.3 * t) * sx

        grid = TimeGrid(0, 20.0, 40)
        obs = proj1(space)
        # the midpoint exponential is 2nd order in the substep
        a = evolve_schrodinger_td(h_func, ground(space), grid, obs, dt=0.002)
        b = evolve_schrodinger_td(h_func, ground(space), grid, obs, dt=0.02, method="rk4")
        np.testing.assert_allclose(a.series["p1"], b.series["p1"], atol=1e-7)


def decaying_atom(gamma=0.25):
    space = SpaceDescriptor((2,))
    h = QOperator(space, np.zeros((2, 2), dtype=complex))
    l_op = QOperator(space, np.sqrt(gamma) * ket_bra(2, 0, 1))
    excited = QState(space, "pure", np.array([0, 1], dtype=complex))
    return space, h, LindbladSet((l_op,)), excited


class TestLindblad:
    def test_vectorization_identity(self):
        # vec(A rho B) = (A kron B^T) vec(rho) for row-major vec
        rng = np.random.default_rng(5)
        a, b, rho = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
                     for _ in range(3))
        lhs = (a @ rho @ b).reshape(-1)
        rhs = np.kron(a, b.T) @ rho.reshape(-1)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_liouvillian_reproduces_rhs(self):
        space, h, lset, _ = decaying_atom(0.3)
        rng = np.random.default_rng(9)
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        sup = liouvillian_matrix(h, lset, sparse=False)
        lhs = (sup @ rho.reshape(-1)).reshape(2, 2)
        l_mat = lset.operators[0].dense()
        ldl = l_mat.conj().T @ l_mat
        rhs = (-1j * (h.dense() @ rho - rho @ h.dense())
               + l_mat @ rho @ l_mat.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    @pytest.mark.parametrize("method", ["dense_expm", "krylov", "rk4"])
    def test_exponential_decay(self, method):
        gamma = 0.25
        space, h, lset, excited = decaying_atom(gamma)
        grid = TimeGrid(0, 12.0, 120)
        res = evolve_lindblad(h, lset, excited.to_density(), grid,
                              {"pe": QOperator(space, ket_bra(2, 1, 1))}, method=method)
        expected = np.exp(-gamma * grid.times)
        assert np.abs(res.series["pe"] - expected).max() <= 1e-7

    def test_closed_system_limit_matches_schrodinger(self):
        p = ChainParams(n=2, delta=10.0, j_c=0.5, omega=0.05, boundary="open")
        h = build_hamiltonian(p)
        psi0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2))
        obs = standard_observables(p)
        grid = TimeGrid(0, 300.0, 150)
        pure = evolve_schrodinger(h, psi0, grid, obs)
        mixed = evolve_lindblad(h, LindbladSet(()), psi0.to_density(), grid, obs)
        for k in obs:
            assert np.abs(pure.series[k] - mixed.series[k]).max() <= 1e-7

    def test_methods_agree_on_decaying_chain(self):
        # dense expm, sparse Krylov and rk4 on the same 36-dimensional system
        p = ChainParams(n=2, delta=1.0, j_c=0.5, omega=0.3, gamma=0.02, kappa=0.02)
        h = build_hamiltonian(p)
        lset = build_lindblad(p)
        rho0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2)).to_density()
        obs = standard_observables(p)
        grid = TimeGrid(0, 20.0, 20)
        ref = evolve_lindblad(h, lset, rho0, grid, obs, method="dense_expm")
        for method in ("krylov", "rk4"):
            alt = evolve_lindblad(h, lset, rho0, grid, obs, method=method)
            for k in obs:
                assert np.abs(ref.series[k] - alt.series[k]).max() <= 1e-7, (method, k)

    def test_trace_and_positivity_preserved(self):
        p = ChainParams(n=2, delta=1.0, j_c=0.5, omega=0.3, gamma=0.02, kappa=0.02)
        h = build_hamiltonian(p)
        rho0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2)).to_density()
        res = evolve_lindblad(h, build_lindblad(p), rho0, TimeGrid(0, 50.0, 50),
                              standard_observables(p))
        rho_f = res.final_state
        assert abs(np.trace(rho_f).real - 1.0) <= 1e-7
        assert np.linalg.eigvalsh(rho_f).min() >= -1e-8

    def test_trace_drift_aborts(self):
        # rk4 far past its stability limit: the trace-drift guard must fire
        space, h, lset, excited = decaying_atom(5.0)
        with pytest.raises(IntegrationError):
            evolve_lindblad(h, lset, excited.to_density(), TimeGrid(0, 20.0, 10),
                            {"pe": QOperator(space, ket_bra(2, 1, 1))},
                            method="rk4", dt=1.0)

    def test_transfer_at_operating_point_closed_system(self):
        # empty jump set on the driven chain: master equation shows the
        # half-period pi/(2 Theta_r) transfer
        p = ChainParams(n=3, delta=10.0, j_c=0.5, omega=0.02, boundary="periodic")
        h = build_hamiltonian(p)
        rho0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2)).to_density()
        obs = standard_observables(p)
        tf = np.pi / (2 * 2e-4)
        res = evolve_lindblad(h, LindbladSet(()), rho0, TimeGrid(0, tf, 160), obs)
        assert res.series["pop_one_1"][-1] < 0.05
        assert res.series["pop_one_3"][-1] > 0.4


class TestObservables:
    def test_projectors_idempotent_orthogonal(self):
        p = ChainParams(n=3, delta=10.0, j_c=0.5, omega=0.02)
        obs = standard_observables(p)
        projs = [obs[f"pop_one_{j}"].dense() for j in (1, 2, 3)] + [obs["pop_ground"].dense()]
        for i, a in enumerate(projs):
            np.testing.assert_allclose(a @ a, a, atol=1e-14)
            for b in projs[i + 1:]:
                np.testing.assert_allclose(a @ b, 0.0, atol=1e-14)

    def test_identity_resolution_on_single_excitation_sector(self):
        from crwsim.chain import excitation_number

        p = ChainParams(n=2, delta=10.0, j_c=0.5, omega=0.02)
        obs = standard_observables(p)
        total = (obs["pop_one_1"].dense() + obs["pop_one_2"].dense()
                 + obs["pop_ground"].dense() + obs["pop_excited"].dense()
                 + obs["pop_photon"].dense())
        n_exc = np.diag(excitation_number(p).dense()).real
        sector = np.where(n_exc <= 1.0 + 1e-12)[0]
        np.testing.assert_allclose(total[np.ix_(sector, sector)],
                                   np.eye(len(sector)), atol=1e-12)

    def test_initial_population_half(self):
        p = ChainParams(n=3, delta=10.0, j_c=0.5, omega=0.02, boundary="periodic")
        psi0 = initial_transfer_state(p, 1 / np.sqrt(2), 1 / np.sqrt(2))
        from crwsim.operators import expectation
        val = expectation(standard_observables(p)["pop_one_1"], psi0)
        assert val.real == pytest.approx(0.5, abs=1e-12)


class TestTrajectoryResult:
    def test_csv_format(self, tmp_path):
        res = TrajectoryResult(
            times=np.array([0.0, 1.0]),
            series={"a": np.array([0.25, 0.5])},
            stderr={"a": np.array([0.01, 0.02])},
            n_traj=10,
        )
        path = tmp_path / "out.csv"
        res.to_csv(path, {"seed": 7})
        lines = path.read_text().splitlines()
        assert lines[0] == "# crwsim csv v1"
        assert lines[1].startswith("# meta = {") and '"seed": 7' in lines[1]
        assert lines[2] == "t,a,a_stderr"
        assert lines[3].split(",")[1] == "0.25"
        # 17 significant digits survive the round trip
        val = float(lines[3].split(",")[1])
        assert val == 0.25

    def test_population_bounds_check(self):
        res = TrajectoryResult(times=np.array([0.0]), series={"p": np.array([1.5])})
        with pytest.raises(ValueError):
            res.check_population_bounds(["p"])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            TrajectoryResult(times=np.array([0.0, 1.0]), series={"p": np.array([1.0])})
