"""Exact representation and evolution of the spin-chain probe.

The probe is a Heisenberg chain of N spin-1/2 sites with a local field
(B_x, 0, B_z) acting on site 1,

    H = -sum_j sum_a (J + dJ_a[j]) s_j^a s_{j+1}^a + B_x s_1^x + B_z s_1^z,

evolved exactly through eigendecomposition.  Energies are in units of J,
times in units of 1/J.

Basis ordering: site 1 is the most significant bit; within a site,
down = bit 0, up = bit 1.  The all-down product state is basis index 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_MAX_SITES = 12
OUTCOME_FLOOR = 1e-12

# Pauli matrices in the (down, up) single-site ordering; this is the
# standard set conjugated by sigma_x, so the algebra is intact while
# keeping down = index 0.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class CapacityError(Exception):
    """Requested system size exceeds the configured dense-algebra limit."""


class DegenerateOutcomeError(Exception):
    """Collapse requested on an outcome whose probability is below the floor."""


class NumericsError(Exception):
    """A numerical routine failed to converge or violated its contract."""


@dataclass(frozen=True)
class SpinChainParams:
    """Probe definition: size, exchange coupling, local field, bond offsets.

    ``bond_offsets`` holds optional per-bond (x, y, z) additive offsets to
    the coupling; empty/None means isotropic.
    """

    n_sites: int
    coupling: float = 1.0
    field_x: float = 0.0
    field_z: float = 0.0
    bond_offsets: tuple[tuple[float, float, float], ...] | None = None
    max_sites: int = DEFAULT_MAX_SITES

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if self.n_sites > self.max_sites:
            raise CapacityError(
                f"n_sites={self.n_sites} exceeds maximum {self.max_sites} "
                f"(state dimension 2^{self.n_sites})"
            )
        if self.bond_offsets is not None:
            offsets = tuple(tuple(float(c) for c in bond) for bond in self.bond_offsets)
            if len(offsets) != self.n_sites - 1:
                raise ValueError(
                    f"bond_offsets needs {self.n_sites - 1} entries, got {len(offsets)}"
                )
            if any(len(bond) != 3 for bond in offsets):
                raise ValueError("each bond offset needs 3 components (x, y, z)")
            object.__setattr__(self, "bond_offsets", offsets)

    @property
    def dim(self) -> int:
        return 2**self.n_sites


@dataclass(frozen=True)
class PureState:
    """State vector of the 2^N dimensional probe Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm} deviates from 1 beyond 1e-10")

    @classmethod
    def all_down(cls, n_sites: int) -> "PureState":
        amps = np.zeros(2**n_sites, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def all_plus(cls, n_sites: int) -> "PureState":
        """Product of (|down> + |up>)/sqrt(2) on every site."""
        amps = np.full(2**n_sites, 2.0 ** (-n_sites / 2), dtype=complex)
        return cls(amps)

    @property
    def n_sites(self) -> int:
        return int(np.log2(len(self.amplitudes)))

    def overlap_probability(self, other: "PureState") -> float:
        return float(abs(np.vdot(other.amplitudes, self.amplitudes)) ** 2)


@dataclass(frozen=True)
class Operator:
    """Dense operator with a symmetry tag, checked at construction."""

    matrix: np.ndarray
    tag: str = "general"  # hermitian | projector | general

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator must be square, got shape {mat.shape}")
        if self.tag == "hermitian":
            dev = np.max(np.abs(mat - mat.conj().T))
            if dev > 1e-12:
                raise ValueError(f"hermitian tag violated: |A - A^dag| max {dev}")
        elif self.tag == "projector":
            dev = np.max(np.abs(mat @ mat - mat))
            if dev > 1e-10:
                raise ValueError(f"projector tag violated: |A^2 - A| max {dev}")
        elif self.tag != "general":
            raise ValueError(f"unknown tag {self.tag!r}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class MagnetizationSeries:
    """Site-resolved magnetization m_j(t) = p_up(t) - p_down(t)."""

    site: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < -1 - 1e-9) or np.any(self.values > 1 + 1e-9):
            raise ValueError("magnetization outside [-1, 1]")


@lru_cache(maxsize=64)
def site_operator(n_sites: int, site: int, axis: str) -> np.ndarray:
    """Pauli operator on one site (1-indexed) embedded in the full chain."""
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} outside 1..{n_sites}")
    op = np.array([[1.0 + 0j]])
    for j in range(1, n_sites + 1):
        op = np.kron(op, _PAULI[axis] if j == site else IDENTITY_2)
    return op


@lru_cache(maxsize=64)
def projector(n_sites: int, site: int, basis: str, outcome: int) -> Operator:
    """Projector (I + outcome * sigma_site^basis) / 2, outcome in {+1, -1}."""
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    sig = site_operator(n_sites, site, basis)
    mat = (np.eye(2**n_sites) + outcome * sig) / 2.0
    return Operator(mat, tag="projector")


def build_hamiltonian(params: SpinChainParams) -> Operator:
    """Assemble the dense probe Hamiltonian with optional bond offsets."""
    n = params.n_sites
    dim = params.dim
    h = np.zeros((dim, dim), dtype=complex)
    axes = ("x", "y", "z")
    for j in range(1, n):
        offsets = params.bond_offsets[j - 1] if params.bond_offsets else (0.0, 0.0, 0.0)
        for axis, off in zip(axes, offsets):
            coupling = params.coupling + off
            h -= coupling * (
                site_operator(n, j, axis) @ site_operator(n, j + 1, axis)
            )
    if params.field_x != 0.0:
        h += params.field_x * site_operator(n, 1, "x")
    if params.field_z != 0.0:
        h += params.field_z * site_operator(n, 1, "z")
    return Operator(h, tag="hermitian")


@dataclass
class Propagator:
    """Eigendecomposition of a Hamiltonian; evaluates exp(-iHt) exactly.

    Unitaries are cached per duration since the protocol reuses a fixed tau.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    _unitary_cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def unitary(self, duration: float) -> np.ndarray:
        """Dense exp(-iHt), cached per duration."""
        key = float(duration)
        u = self._unitary_cache.get(key)
        if u is None:
            v = self.eigenvectors
            phases = np.exp(-1j * self.eigenvalues * duration)
            u = (v * phases) @ v.conj().T
            self._unitary_cache[key] = u
        return u


def make_propagator(h: Operator) -> Propagator:
    """Diagonalize a hermitian operator for exact evolution."""
    if h.tag != "hermitian":
        raise ValueError("propagator requires a hermitian-tagged operator")
    try:
        evals, evecs = np.linalg.eigh(h.matrix)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(h.matrix)
        raise NumericsError(f"eigendecomposition failed (cond={cond:.3e})") from exc
    return Propagator(eigenvalues=evals, eigenvectors=evecs)


def evolve(prop: Propagator, state: PureState, duration: float) -> PureState:
    """Apply exp(-iHt) to a state through the eigenbasis."""
    if prop.dim != len(state.amplitudes):
        raise ValueError(
            f"dimension mismatch: propagator {prop.dim}, state {len(state.amplitudes)}"
        )
    if duration < 0:
        raise ValueError("duration must be >= 0")
    v = prop.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    coeffs *= np.exp(-1j * prop.eigenvalues * duration)
    amps = v @ coeffs
    # renormalize the 1e-16-level drift so chained evolutions stay exact
    return PureState(amps / np.linalg.norm(amps))


def measure_probability(state: PureState, proj: Operator) -> float:
    """Born probability <psi|Pi|psi>, clamped to [0, 1] near the boundary."""
    if proj.tag != "projector":
        raise ValueError("measure_probability requires a projector-tagged operator")
    if proj.dim != len(state.amplitudes):
        raise ValueError("dimension mismatch between state and projector")
    p = float(np.real(np.vdot(state.amplitudes, proj.matrix @ state.amplitudes)))
    if p < 0:
        if p < -1e-12:
            raise NumericsError(f"probability {p} below 0 beyond tolerance")
        p = 0.0
    if p > 1:
        if p > 1 + 1e-12:
            raise NumericsError(f"probability {p} above 1 beyond tolerance")
        p = 1.0
    return p


def collapse(state: PureState, proj: Operator, probability: float) -> PureState:
    """Project and renormalize: Pi|psi> / sqrt(p)."""
    if probability <= OUTCOME_FLOOR:
        raise DegenerateOutcomeError(
            f"outcome probability {probability} at or below floor {OUTCOME_FLOOR}"
        )
    amps = proj.matrix @ state.amplitudes
    return PureState(amps / np.linalg.norm(amps))


def magnetization_series(
    params: SpinChainParams, site: int, times: np.ndarray
) -> MagnetizationSeries:
    """m_site(t) = 2 <psi(t)|Pi_site^up|psi(t)> - 1 from the all-down state."""
    if not 1 <= site <= params.n_sites:
        raise ValueError(f"site {site} outside 1..{params.n_sites}")
    prop = make_propagator(build_hamiltonian(params))
    proj_up = projector(params.n_sites, site, "z", +1)
    psi0 = PureState.all_down(params.n_sites)
    values = []
    for t in np.asarray(times, dtype=float):
        psi_t = evolve(prop, psi0, t)
        values.append(2.0 * measure_probability(psi_t, proj_up) - 1.0)
    return MagnetizationSeries(site=site, times=np.asarray(times, dtype=float),
                               values=np.array(values))
