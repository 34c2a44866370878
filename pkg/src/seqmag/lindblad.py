"""Protocol under local dephasing.

Master equation: drho/dt = -i[H, rho] + sum_j (gamma/2)(sz_j rho sz_j - rho).
Evolution is exact through the exponential of the vectorized Liouvillian
(row-major vec, so vec(A rho B) = (A kron B^T) vec(rho)): a cached dense
exponential for small systems, Al-Mohy--Higham expm_multiply on the sparse
Liouvillian above that.  The off-diagonal of a lone qubit decays as
exp(-gamma t) in this convention.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .chain import (
    CapacityError,
    PureState,
    SpinChainParams,
    build_hamiltonian,
    projector,
    site_operator,
)
from .estimation import FisherResult, fisher_from_tables, DEFAULT_DELTA_B
from .protocol import _SYMBOLS, MeasurementSchedule, TrajectoryDistribution

LINDBLAD_MAX_SITES = 8
LINDBLAD_ENUMERATION_CAP = 12
_DENSE_EXPM_MAX_DIM = 1024  # superoperator dimension for the dense-expm path

_superop_cache: dict = {}


@dataclass(frozen=True)
class DephasingParams:
    """Local sigma_z dephasing rate, in units of J."""

    rate: float = 0.0

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("dephasing rate must be >= 0")


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > 1e-10:
            raise ValueError(f"density matrix not hermitian: deviation {herm}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > 1e-9:
            raise ValueError(f"trace {tr} deviates from 1 beyond 1e-9")
        min_eig = float(np.linalg.eigvalsh(mat)[0])
        if min_eig < -1e-8:
            raise ValueError(f"negative eigenvalue {min_eig} beyond tolerance")

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        amps = state.amplitudes
        return cls(np.outer(amps, amps.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _check_capacity(params: SpinChainParams, max_sites: int = LINDBLAD_MAX_SITES):
    if params.n_sites > max_sites:
        raise CapacityError(
            f"open-system n_sites={params.n_sites} exceeds maximum {max_sites} "
            f"(superoperator dimension 4^{params.n_sites})"
        )


def build_liouvillian(params: SpinChainParams, dephasing: DephasingParams) -> sp.csr_matrix:
    """Sparse vectorized Liouvillian for the dephasing master equation."""
    _check_capacity(params)
    n = params.n_sites
    dim = params.dim
    h = sp.csr_matrix(build_hamiltonian(params).matrix)
    eye = sp.identity(dim, format="csr", dtype=complex)
    liou = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    gamma = dephasing.rate
    if gamma > 0:
        for site in range(1, n + 1):
            sz = sp.csr_matrix(site_operator(n, site, "z"))
            liou = liou + (gamma / 2.0) * (sp.kron(sz, sz.T)
                                           - sp.identity(dim * dim, format="csr",
                                                         dtype=complex))
    return sp.csr_matrix(liou)


def _propagation(params: SpinChainParams, dephasing: DephasingParams,
                 duration: float):
    """Map acting on stacked vectorized states (dim^2, n_columns)."""
    dim2 = params.dim ** 2
    if dim2 <= _DENSE_EXPM_MAX_DIM:
        key = (params, dephasing.rate, float(duration))
        e = _superop_cache.get(key)
        if e is None:
            e = expm(build_liouvillian(params, dephasing).toarray() * duration)
            _superop_cache[key] = e
        return lambda mat: e @ mat
    liou_key = (params, dephasing.rate)
    liou = _superop_cache.get(liou_key)
    if liou is None:
        liou = build_liouvillian(params, dephasing)
        _superop_cache[liou_key] = liou
    scaled = sp.csc_matrix(liou * duration)
    return lambda mat: expm_multiply(scaled, mat)


def evolve_lindblad(
    params: SpinChainParams,
    dephasing: DephasingParams,
    rho: DensityMatrix,
    duration: float,
) -> DensityMatrix:
    """Exact master-equation evolution of a density matrix."""
    _check_capacity(params)
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if rho.dim != params.dim:
        raise ValueError("dimension mismatch between rho and params")
    vec = rho.matrix.reshape(-1, 1)
    out = _propagation(params, dephasing, duration)(vec)
    mat = out.reshape(params.dim, params.dim)
    mat = (mat + mat.conj().T) / 2.0  # scrub rounding-level asymmetry
    return DensityMatrix(mat / np.trace(mat).real)


def _density_tree_walk(params_variants, dephasing, schedule, prune_threshold,
                       center, rho0_vec):
    """Level-order outcome-tree walk on vectorized density matrices.

    Branch states are unnormalized so that the trace of a leaf equals its
    trajectory probability.  All field variants share the tree; pruning
    decisions use the ``center`` variant.  Returns per-depth probability
    tables and per-depth pruned masses, both indexed per variant.
    """
    dim = params_variants[0].dim
    n_var = len(params_variants)
    site = schedule.site(params_variants[0])
    projs = {
        sym: projector(params_variants[0].n_sites, site, schedule.basis, out).matrix
        for sym, out in zip(_SYMBOLS[schedule.basis], (+1, -1))
    }
    strings = [""]
    states = [np.array([rho0_vec]).T.copy() for _ in range(n_var)]  # (dim2, nodes)
    per_depth: list[list[dict[str, float]]] = []
    for step, tau in enumerate(schedule.intervals):
        prop_maps = [
            _propagation(params_variants[k], dephasing, tau) for k in range(n_var)
        ]
        evolved = [prop_maps[k](states[k]) for k in range(n_var)]
        level: list[dict[str, float]] = [dict() for _ in range(n_var)]
        next_strings: list[str] = []
        kept: list[list[np.ndarray]] = [[] for _ in range(n_var)]
        n_nodes = evolved[0].shape[1]
        rho_stacks = [evolved[k].reshape(dim, dim, n_nodes) for k in range(n_var)]
        for sym, proj in projs.items():
            branch = [
                np.einsum("ij,jkn,kl->iln", proj, rho_stacks[k], proj, optimize=True)
                for k in range(n_var)
            ]
            probs = [np.real(np.einsum("iin->n", branch[k])) for k in range(n_var)]
            for node in range(n_nodes):
                child_string = strings[node] + sym
                for k in range(n_var):
                    level[k][child_string] = float(probs[k][node])
                if probs[center][node] < prune_threshold:
                    continue
                if step + 1 < schedule.n_seq:
                    next_strings.append(child_string)
                    for k in range(n_var):
                        kept[k].append(branch[k][:, :, node].reshape(-1))
        per_depth.append(level)
        strings = next_strings
        if next_strings:
            states = [np.array(kept[k]).T.copy() for k in range(n_var)]
        else:
            states = [np.zeros((dim * dim, 0), dtype=complex) for _ in range(n_var)]
            if step + 1 < schedule.n_seq:
                # everything pruned: remaining depths inherit empty tables
                for _ in range(step + 1, schedule.n_seq):
                    per_depth.append([dict() for _ in range(n_var)])
                break
    depth_pruned = [
        [max(0.0, 1.0 - sum(level[k].values())) for k in range(n_var)]
        for level in per_depth
    ]
    return per_depth, depth_pruned


def enumerate_distribution_lindblad(
    params: SpinChainParams,
    dephasing: DephasingParams,
    schedule: MeasurementSchedule,
    prune_threshold: float = 0.0,
) -> TrajectoryDistribution:
    """Trajectory distribution with p = Tr(Pi rho) and rho -> Pi rho Pi / p."""
    _check_capacity(params)
    if schedule.n_seq > LINDBLAD_ENUMERATION_CAP:
        raise CapacityError(
            f"n_seq={schedule.n_seq} exceeds open-system enumeration cap "
            f"{LINDBLAD_ENUMERATION_CAP}"
        )
    rho0 = DensityMatrix.from_pure(PureState.all_down(params.n_sites))
    per_depth, depth_pruned = _density_tree_walk(
        [params], dephasing, schedule, prune_threshold, 0, rho0.matrix.reshape(-1)
    )
    table = {s: p for s, p in per_depth[-1][0].items() if not (p < prune_threshold)}
    return TrajectoryDistribution(table, depth_pruned[-1][0], params, schedule)


def fisher_dephasing_sweep(
    params: SpinChainParams,
    tau: float,
    n_seq_max: int,
    gammas,
    delta_b: float = DEFAULT_DELTA_B,
    prune_threshold: float = 1e-12,
    basis: str = "z",
) -> list[dict]:
    """F(n_seq; gamma) table from finite differences on the lossy distribution."""
    _check_capacity(params)
    schedule = MeasurementSchedule.uniform(n_seq_max, tau, basis=basis)
    rho0 = DensityMatrix.from_pure(PureState.all_down(params.n_sites))
    rho0_vec = rho0.matrix.reshape(-1)
    rows = []
    for gamma in gammas:
        if gamma < 0:
            raise ValueError("dephasing rates must be >= 0")
        variants = [replace(params, field_x=params.field_x + s * delta_b)
                    for s in (-1, 0, 1)]
        per_depth, depth_pruned = _density_tree_walk(
            variants, DephasingParams(rate=float(gamma)), schedule,
            prune_threshold, 1, rho0_vec,
        )
        for depth, (tables, pruned) in enumerate(zip(per_depth, depth_pruned), start=1):
            fisher = fisher_from_tables(tables[0], tables[1], tables[2], delta_b,
                                        n_seq=depth, pruned_mass=pruned[1])
            rows.append({"gamma": float(gamma), "n_seq": depth,
                         "fisher": fisher.value, "pruned_mass": fisher.pruned_mass})
    return rows


def dephasing_sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["gamma", "n_seq", "fisher", "pruned_mass"])
    for row in rows:
        writer.writerow([repr(row["gamma"]), row["n_seq"], repr(row["fisher"]),
                         repr(row["pruned_mass"])])
    return buf.getvalue()
