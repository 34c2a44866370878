import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from seqmag.chain import (
    CapacityError,
    DegenerateOutcomeError,
    Operator,
    PureState,
    SpinChainParams,
    build_hamiltonian,
    collapse,
    evolve,
    magnetization_series,
    make_propagator,
    measure_probability,
    projector,
    site_operator,
)


def naive_kronecker_hamiltonian(n, coupling, field_x, field_z):
    """Independent assembly by explicit scalar matrix elements.

    Spin states indexed by bits (site 1 = most significant, 1 = up);
    matrix elements of sigma^a pairs worked out per basis state rather
    than through the production kron helper.
    """
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    bit = lambda state, site: (state >> (n - site)) & 1

    for state in range(dim):
        for j in range(1, n):
            b1, b2 = bit(state, j), bit(state, j + 1)
            # zz: diagonal, sign (+1 if aligned)
            h[state, state] -= coupling * (1 if b1 == b2 else -1)
            # xx + yy: flips both spins; nonzero only for anti-aligned pairs,
            # where (xx + yy) contributes 2
            if b1 != b2:
                flipped = state ^ (1 << (n - j)) ^ (1 << (n - j - 1))
                h[flipped, state] -= coupling * 2
        # field on site 1
        b1 = bit(state, 1)
        h[state, state] += field_z * (1 if b1 == 1 else -1)
        h[state ^ (1 << (n - 1)), state] += field_x
    return h


class TestHamiltonian:
    def test_single_spin_spectrum(self):
        h = build_hamiltonian(SpinChainParams(1, field_x=0.3, field_z=0.4))
        assert np.allclose(np.linalg.eigvalsh(h.matrix), [-0.5, 0.5])

    def test_two_spin_heisenberg_spectrum(self):
        h = build_hamiltonian(SpinChainParams(2))
        assert np.allclose(np.linalg.eigvalsh(h.matrix), [-1, -1, -1, 3])

    def test_matches_naive_kronecker_oracle(self):
        params = SpinChainParams(6, field_x=0.1)
        h = build_hamiltonian(params)
        oracle = naive_kronecker_hamiltonian(6, 1.0, 0.1, 0.0)
        assert h.matrix.shape == (64, 64)
        assert h.tag == "hermitian"
        assert np.max(np.abs(h.matrix - oracle)) < 1e-12

    def test_naive_oracle_with_both_fields(self):
        h = build_hamiltonian(SpinChainParams(4, field_x=0.15, field_z=0.1))
        oracle = naive_kronecker_hamiltonian(4, 1.0, 0.15, 0.1)
        assert np.max(np.abs(h.matrix - oracle)) < 1e-12

    def test_bond_offsets_change_hamiltonian(self):
        base = build_hamiltonian(SpinChainParams(3, field_x=0.1))
        offs = ((0.02, -0.01, 0.03), (0.0, 0.0, 0.0))
        pert = build_hamiltonian(SpinChainParams(3, field_x=0.1, bond_offsets=offs))
        assert np.max(np.abs(pert.matrix - base.matrix)) > 1e-3
        # zero offsets reproduce the isotropic case exactly
        zero = build_hamiltonian(
            SpinChainParams(3, field_x=0.1, bond_offsets=((0, 0, 0), (0, 0, 0))))
        assert np.array_equal(zero.matrix, base.matrix)

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            SpinChainParams(30)

    def test_bond_offsets_wrong_length(self):
        with pytest.raises(ValueError):
            SpinChainParams(4, bond_offsets=((0, 0, 0),))


class TestPropagator:
    def test_sigma_z_eigensystem(self):
        prop = make_propagator(Operator(site_operator(1, 1, "z"), tag="hermitian"))
        assert np.allclose(prop.eigenvalues, [-1, 1])
        assert np.allclose(np.abs(prop.eigenvectors), np.eye(2))

    def test_reconstruction_random_hermitian(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
        h = Operator((a + a.conj().T) / 2, tag="hermitian")
        prop = make_propagator(h)
        recon = (prop.eigenvectors * prop.eigenvalues) @ prop.eigenvectors.conj().T
        assert np.max(np.abs(recon - h.matrix)) < 1e-9
        gram = prop.eigenvectors.conj().T @ prop.eigenvectors
        assert np.max(np.abs(gram - np.eye(64))) < 1e-10

    def test_evolution_matches_expm_oracle(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        h = Operator((a + a.conj().T) / 2, tag="hermitian")
        psi = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi = PureState(psi / np.linalg.norm(psi))
        t = 0.83
        direct = scipy.linalg.expm(-1j * h.matrix * t) @ psi.amplitudes
        evolved = evolve(make_propagator(h), psi, t)
        assert np.max(np.abs(evolved.amplitudes - direct)) < 1e-8

    def test_requires_hermitian_tag(self):
        with pytest.raises(ValueError):
            make_propagator(Operator(np.eye(2), tag="general"))


def trotter_up_probability(params, t, n_steps):
    """Second-order Trotter split (bond terms vs field term) with
    step doubling and Richardson extrapolation; independent of the
    eigendecomposition route."""
    n = params.n_sites
    field = params.field_x * site_operator(n, 1, "x") + \
        params.field_z * site_operator(n, 1, "z")
    bonds = build_hamiltonian(params).matrix - field

    def run(steps):
        dt = t / steps
        u_half_field = scipy.linalg.expm(-1j * field * dt / 2)
        u_bonds = scipy.linalg.expm(-1j * bonds * dt)
        psi = PureState.all_down(n).amplitudes
        step_u = u_half_field @ u_bonds @ u_half_field
        for _ in range(steps):
            psi = step_u @ psi
        proj = projector(n, n, "z", +1).matrix
        return float(np.real(np.vdot(psi, proj @ psi)))

    p1, p2 = run(n_steps), run(2 * n_steps)
    return p2 + (p2 - p1) / 3.0  # second-order Richardson


class TestEvolve:
    def test_all_down_is_stationary_without_field(self):
        params = SpinChainParams(5)
        prop = make_propagator(build_hamiltonian(params))
        psi0 = PureState.all_down(5)
        psi_t = evolve(prop, psi0, 3.7)
        # eigenstate: only a global phase exp(+iJ(N-1)t)
        phase = np.exp(1j * 4 * 3.7)
        assert np.max(np.abs(psi_t.amplitudes - phase * psi0.amplitudes)) < 1e-10

    def test_zero_duration_is_identity(self):
        params = SpinChainParams(3, field_x=0.2)
        prop = make_propagator(build_hamiltonian(params))
        rng = np.random.default_rng(0)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        psi = PureState(amps / np.linalg.norm(amps))
        out = evolve(prop, psi, 0.0)
        assert np.max(np.abs(out.amplitudes - psi.amplitudes)) < 1e-12

    def test_matches_trotter_oracle(self):
        params = SpinChainParams(6, field_x=0.1)
        prop = make_propagator(build_hamiltonian(params))
        psi = evolve(prop, PureState.all_down(6), 6.0)
        p_up = measure_probability(psi, projector(6, 6, "z", +1))
        assert abs(p_up - trotter_up_probability(params, 6.0, 600)) < 1e-6

    def test_composition(self):
        params = SpinChainParams(4, field_x=0.17, field_z=0.05)
        prop = make_propagator(build_hamiltonian(params))
        psi0 = PureState.all_down(4)
        two_step = evolve(prop, evolve(prop, psi0, 1.3), 2.4)
        one_step = evolve(prop, psi0, 3.7)
        assert np.max(np.abs(two_step.amplitudes - one_step.amplitudes)) < 1e-9

    def test_energy_conservation(self):
        params = SpinChainParams(5, field_x=0.12)
        h = build_hamiltonian(params)
        prop = make_propagator(h)
        psi0 = PureState.all_down(5)
        e0 = np.real(np.vdot(psi0.amplitudes, h.matrix @ psi0.amplitudes))
        for t in (0.5, 2.0, 11.0):
            psi = evolve(prop, psi0, t)
            e = np.real(np.vdot(psi.amplitudes, h.matrix @ psi.amplitudes))
            assert abs(e - e0) < 1e-9 * max(1.0, abs(e0))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=0.0, max_value=20.0),
           st.floats(min_value=-0.2, max_value=0.2))
    def test_norm_preserved(self, t, bx):
        params = SpinChainParams(4, field_x=bx)
        prop = make_propagator(build_hamiltonian(params))
        psi = evolve(prop, PureState.all_down(4), t)
        assert abs(np.linalg.norm(psi.amplitudes) - 1.0) < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(st.floats(min_value=0.001, max_value=0.2),
           st.floats(min_value=0.1, max_value=10.0))
    def test_parity_even_in_field_x(self, bx, t):
        # with B_z = 0, conjugating by prod sigma_z maps B_x -> -B_x while
        # fixing the all-down state and the z projectors
        proj = projector(4, 4, "z", +1)
        probs = []
        for sign in (1, -1):
            prop = make_propagator(build_hamiltonian(
                SpinChainParams(4, field_x=sign * bx)))
            psi = evolve(prop, PureState.all_down(4), t)
            probs.append(measure_probability(psi, proj))
        assert abs(probs[0] - probs[1]) < 1e-10


class TestMeasurement:
    def test_all_down_probabilities(self):
        psi = PureState.all_down(4)
        assert measure_probability(psi, projector(4, 4, "z", -1)) == 1.0
        assert measure_probability(psi, projector(4, 4, "z", +1)) == 0.0

    def test_x_projector_on_superposition(self):
        # independent dense-algebra evaluation of <psi|Pi|psi>
        rng = np.random.default_rng(5)
        amps = rng.normal(size=8) + 1j * rng.normal(size=8)
        amps /= np.linalg.norm(amps)
        psi = PureState(amps)
        proj = projector(3, 3, "x", +1)
        expected = np.real(amps.conj() @ proj.matrix @ amps)
        assert abs(measure_probability(psi, proj) - expected) < 1e-12

    def test_collapse_fixed_point(self):
        psi = PureState.all_down(3)
        proj = projector(3, 3, "z", -1)
        out = collapse(psi, proj, 1.0)
        assert np.max(np.abs(out.amplitudes - psi.amplitudes)) < 1e-12

    def test_collapse_idempotent(self):
        params = SpinChainParams(4, field_x=0.15)
        prop = make_propagator(build_hamiltonian(params))
        psi = evolve(prop, PureState.all_down(4), 4.0)
        proj = projector(4, 4, "z", +1)
        p = measure_probability(psi, proj)
        once = collapse(psi, proj, p)
        twice = collapse(once, proj, measure_probability(once, proj))
        assert np.max(np.abs(twice.amplitudes - once.amplitudes)) < 1e-10

    def test_collapse_support(self):
        # after projecting site 4 up, no amplitude on basis states with
        # site 4 down (least significant bit = 0)
        params = SpinChainParams(4, field_x=0.2)
        prop = make_propagator(build_hamiltonian(params))
        psi = evolve(prop, PureState.all_down(4), 5.0)
        proj = projector(4, 4, "z", +1)
        out = collapse(psi, proj, measure_probability(psi, proj))
        down_support = out.amplitudes[::2]  # bit 0 of the last site
        assert np.max(np.abs(down_support)) < 1e-12

    def test_collapse_below_floor_raises(self):
        psi = PureState.all_down(3)
        with pytest.raises(DegenerateOutcomeError):
            collapse(psi, projector(3, 3, "z", +1), 0.0)


class TestMagnetization:
    def test_stationary_ferromagnet(self):
        series = magnetization_series(SpinChainParams(4), 2, np.linspace(0, 10, 7))
        assert np.max(np.abs(series.values + 1.0)) < 1e-12

    def test_small_time_expansion(self):
        # m_1(t) = -1 + 2 t^2 <psi0| H Pi_1^up H |psi0> + O(t^4)
        params = SpinChainParams(2, field_x=0.2)
        h = build_hamiltonian(params).matrix
        psi0 = PureState.all_down(2).amplitudes
        proj = projector(2, 1, "z", +1).matrix
        coeff = 2.0 * np.real(psi0.conj() @ h @ proj @ h @ psi0)
        for t in (1e-3, 2e-3, 5e-3):
            series = magnetization_series(params, 1, np.array([t]))
            assert abs(series.values[0] - (-1.0 + coeff * t**2)) < 10 * t**4

    def test_readout_site_lags_field_site(self):
        # threshold-crossing time grows with distance from the field site
        times = np.linspace(0.0, 12.0, 240)
        params = SpinChainParams(8, field_x=0.2)
        first = magnetization_series(params, 1, times).values
        last = magnetization_series(params, 8, times).values
        threshold = 1e-3

        def crossing(values):
            idx = np.argmax(np.abs(values + 1.0) > threshold)
            return times[idx]

        assert crossing(last) > crossing(first)
