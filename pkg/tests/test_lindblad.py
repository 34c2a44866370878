import numpy as np
import pytest

from seqmag.chain import (
    CapacityError,
    PureState,
    SpinChainParams,
    build_hamiltonian,
    evolve,
    make_propagator,
    site_operator,
)
from seqmag.protocol import MeasurementSchedule, enumerate_distribution
from seqmag.estimation import fisher_sweep
from seqmag.lindblad import (
    DensityMatrix,
    DephasingParams,
    build_liouvillian,
    dephasing_sweep_csv,
    enumerate_distribution_lindblad,
    evolve_lindblad,
    fisher_dephasing_sweep,
)

PARAMS_4 = SpinChainParams(4, field_x=0.1)


def rk4_lindblad(params, gamma, rho, duration, n_steps=4000):
    """Fixed-step RK4 integration of the dephasing master equation."""
    h = build_hamiltonian(params).matrix
    szs = [site_operator(params.n_sites, s, "z")
           for s in range(1, params.n_sites + 1)]

    def rhs(r):
        out = -1j * (h @ r - r @ h)
        for sz in szs:
            out += (gamma / 2.0) * (sz @ r @ sz - r)
        return out

    dt = duration / n_steps
    for _ in range(n_steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


class TestDensityMatrix:
    def test_pure_state_has_unit_purity(self):
        rho = DensityMatrix.from_pure(PureState.all_down(3))
        assert abs(rho.purity() - 1.0) < 1e-12

    def test_rejects_non_hermitian(self):
        mat = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
        with pytest.raises(ValueError):
            DensityMatrix(mat)

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        mat = np.array([[1.2, 0.0], [0.0, -0.2]], dtype=complex)
        with pytest.raises(ValueError):
            DensityMatrix(mat)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            DephasingParams(rate=-0.1)


class TestEvolveLindblad:
    def test_zero_rate_matches_unitary_evolution(self):
        psi0 = PureState.all_down(4)
        rho0 = DensityMatrix.from_pure(psi0)
        rho_t = evolve_lindblad(PARAMS_4, DephasingParams(0.0), rho0, 5.0)
        prop = make_propagator(build_hamiltonian(PARAMS_4))
        psi_t = evolve(prop, psi0, 5.0)
        expected = np.outer(psi_t.amplitudes, psi_t.amplitudes.conj())
        assert np.max(np.abs(rho_t.matrix - expected)) < 1e-10

    def test_single_qubit_coherence_decay(self):
        # H = 0, plus state: rho_01(t) = rho_01(0) exp(-gamma t)
        params = SpinChainParams(1)
        gamma, t = 0.3, 2.5
        rho0 = DensityMatrix.from_pure(PureState.all_plus(1))
        rho_t = evolve_lindblad(params, DephasingParams(gamma), rho0, t)
        assert abs(rho_t.matrix[0, 1] - 0.5 * np.exp(-gamma * t)) < 1e-10
        assert abs(rho_t.matrix[0, 0] - 0.5) < 1e-10

    def test_matches_rk4_oracle(self):
        gamma, t = 0.05, 4.0
        rho0 = DensityMatrix.from_pure(PureState.all_down(4))
        rho_exact = evolve_lindblad(PARAMS_4, DephasingParams(gamma), rho0, t)
        rho_rk4 = rk4_lindblad(PARAMS_4, gamma, rho0.matrix.copy(), t)
        assert np.max(np.abs(rho_exact.matrix - rho_rk4)) < 1e-6

    def test_purity_never_increases(self):
        gamma = 0.1
        rho = DensityMatrix.from_pure(PureState.all_down(3))
        params = SpinChainParams(3, field_x=0.2)
        purities = [rho.purity()]
        for _ in range(5):
            rho = evolve_lindblad(params, DephasingParams(gamma), rho, 2.0)
            purities.append(rho.purity())
        for before, after in zip(purities, purities[1:]):
            assert after <= before + 1e-10

    def test_output_stays_physical(self):
        rho = DensityMatrix.from_pure(PureState.all_down(4))
        rho_t = evolve_lindblad(PARAMS_4, DephasingParams(0.2), rho, 10.0)
        eigs = np.linalg.eigvalsh(rho_t.matrix)
        assert eigs[0] > -1e-10
        assert abs(np.sum(eigs) - 1.0) < 1e-9

    def test_capacity_guard(self):
        big = SpinChainParams(9, field_x=0.1)
        rho = DensityMatrix.from_pure(PureState.all_down(9))
        with pytest.raises(CapacityError):
            evolve_lindblad(big, DephasingParams(0.1), rho, 1.0)

    def test_liouvillian_annihilates_maximally_mixed(self):
        # the dephasing channel is unital: identity is a fixed point
        params = SpinChainParams(3)  # no field: H commutes with nothing needed
        liou = build_liouvillian(SpinChainParams(3), DephasingParams(0.4))
        ident = np.eye(8, dtype=complex).reshape(-1) / 8.0
        assert np.max(np.abs(liou @ ident)) < 1e-12


class TestDistribution:
    SCHED = MeasurementSchedule.uniform(3, 4.0)

    def test_completeness(self):
        dist = enumerate_distribution_lindblad(PARAMS_4, DephasingParams(0.05),
                                               self.SCHED)
        assert len(dist.probabilities) == 8
        assert abs(sum(dist.probabilities.values()) - 1.0) < 1e-9

    def test_zero_rate_matches_closed_system(self):
        lossy = enumerate_distribution_lindblad(PARAMS_4, DephasingParams(0.0),
                                                self.SCHED)
        closed = enumerate_distribution(PARAMS_4, self.SCHED)
        for string, p in closed.probabilities.items():
            assert abs(lossy.probabilities[string] - p) < 1e-9

    def test_continuity_in_rate(self):
        tiny = enumerate_distribution_lindblad(PARAMS_4, DephasingParams(1e-8),
                                               self.SCHED)
        zero = enumerate_distribution_lindblad(PARAMS_4, DephasingParams(0.0),
                                               self.SCHED)
        for string, p in zero.probabilities.items():
            assert abs(tiny.probabilities[string] - p) < 1e-6

    def test_quantum_jump_oracle(self):
        """Unravel the master equation into pure-state trajectories.

        The generator (gamma/2)(sz_j rho sz_j - rho) has jump operators
        L_j = sqrt(gamma/2) sz_j, and L^dag L is proportional to the
        identity, so jumps form a Poisson process of rate n * gamma / 2
        and the deterministic part is plain unitary evolution with a
        uniformly random sz_j applied at each jump.
        """
        gamma, tau, n_seq, n_traj = 0.02, 4.0, 3, 20000
        params = PARAMS_4
        sched = MeasurementSchedule.uniform(n_seq, tau)
        ham = build_hamiltonian(params)
        prop = make_propagator(ham)
        site = sched.site(params)
        szs = [site_operator(params.n_sites, s, "z")
               for s in range(1, params.n_sites + 1)]
        n_sites = params.n_sites
        from seqmag.chain import collapse, measure_probability, projector
        proj_up = projector(n_sites, site, "z", +1)
        proj_down = projector(n_sites, site, "z", -1)
        rng = np.random.default_rng(2024)
        counts: dict[str, int] = {}
        for _ in range(n_traj):
            psi = PureState.all_down(n_sites)
            outcome = []
            for _ in range(n_seq):
                elapsed = 0.0
                while True:
                    wait = rng.exponential(2.0 / (gamma * n_sites))
                    if elapsed + wait >= tau:
                        psi = evolve(prop, psi, tau - elapsed)
                        break
                    psi = evolve(prop, psi, wait)
                    jump = szs[rng.integers(n_sites)]
                    psi = PureState(jump @ psi.amplitudes)
                    elapsed += wait
                p_up = measure_probability(psi, proj_up)
                if rng.random() < p_up:
                    psi = collapse(psi, proj_up, p_up)
                    outcome.append("u")
                else:
                    psi = collapse(psi, proj_down, 1.0 - p_up)
                    outcome.append("d")
            key = "".join(outcome)
            counts[key] = counts.get(key, 0) + 1
        dist = enumerate_distribution_lindblad(params, DephasingParams(gamma),
                                               sched)
        for string, p in dist.probabilities.items():
            freq = counts.get(string, 0) / n_traj
            sigma = np.sqrt(max(p * (1 - p), 1e-12) / n_traj)
            assert abs(freq - p) < 4 * sigma + 1e-4, (string, freq, p)


class TestFisherDephasingSweep:
    def test_zero_rate_reproduces_closed_sweep(self):
        rows = fisher_dephasing_sweep(PARAMS_4, 4.0, 4, [0.0])
        closed = fisher_sweep(PARAMS_4, 4.0, 4)
        by_n = {r["n_seq"]: r["fisher"] for r in rows}
        for res in closed:
            assert abs(by_n[res.n_seq] - res.value) < 1e-6 * max(1, res.value)

    def test_dephasing_degrades_information(self):
        rows = fisher_dephasing_sweep(PARAMS_4, 4.0, 4, [0.0, 0.1])
        clean = {r["n_seq"]: r["fisher"] for r in rows if r["gamma"] == 0.0}
        lossy = {r["n_seq"]: r["fisher"] for r in rows if r["gamma"] == 0.1}
        for n_seq in clean:
            assert lossy[n_seq] <= clean[n_seq] + 1e-9

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            fisher_dephasing_sweep(PARAMS_4, 4.0, 2, [-0.1])

    def test_csv_export(self):
        rows = fisher_dephasing_sweep(PARAMS_4, 4.0, 2, [0.0, 0.05])
        text = dephasing_sweep_csv(rows)
        lines = text.strip().splitlines()
        assert lines[0].split(",") == ["gamma", "n_seq", "fisher", "pruned_mass"]
        assert len(lines) == 1 + 4
