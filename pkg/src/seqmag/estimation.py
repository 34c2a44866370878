"""Precision quantification.

Classical Fisher information from the enumerated trajectory distribution
(central finite differences in B_x), grid-based Bayesian posteriors in one
and two field components, and the average squared relative error
(sigma^2 + bias^2) / |B_true|^2.

Likelihoods are evaluated only at observed outcome strings (never via full
2^n_seq enumeration) and are vectorized over the candidate-field grid:
Hamiltonians for a chunk of grid points are diagonalized as a stacked
batch and the observed strings are walked as a shared prefix tree.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .chain import (
    PureState,
    SpinChainParams,
    build_hamiltonian,
    projector,
    site_operator,
)
from .protocol import (
    _SYMBOLS,
    _tree_walk,
    MeasurementSchedule,
    Trajectory,
    TrajectoryDataset,
    TrajectoryDistribution,
    make_propagator,
)

DEFAULT_DELTA_B = 1e-5
PROBABILITY_FLOOR = 1e-12
LOGLIKE_FLOOR = 1e-300
_GRID_CHUNK = 2048


class DegeneratePosteriorError(Exception):
    """Every grid point has zero likelihood for the observed data."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over the prior interval for one field component."""

    lo: float = -0.2
    hi: float = 0.2
    n_points: int = 401

    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)


DEFAULT_GRID_1D = GridSpec()
DEFAULT_GRID_2D = (GridSpec(n_points=201), GridSpec(n_points=201))


@dataclass
class FisherResult:
    value: float
    delta_b: float
    pruned_mass: float
    n_seq: int
    per_trajectory: dict[str, float] | None = None
    warning: str | None = None


@dataclass
class ErrorMetrics:
    mean: np.ndarray
    variance: float
    bias: float
    delta_sq: float


@dataclass
class PosteriorGrid:
    """Normalized posterior over a uniform 1-D or 2-D field grid."""

    axes: tuple[np.ndarray, ...]
    log_likelihood: np.ndarray
    probabilities: np.ndarray

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @classmethod
    def from_log_likelihood(cls, axes, loglike) -> "PosteriorGrid":
        loglike = np.asarray(loglike, dtype=float)
        finite = np.isfinite(loglike)
        if not finite.any():
            raise DegeneratePosteriorError("likelihood is zero on the whole grid")
        shifted = loglike - loglike[finite].max()
        raw = np.where(finite, np.exp(np.where(finite, shifted, 0.0)), 0.0)
        post = cls(axes=tuple(np.asarray(a, float) for a in axes),
                   log_likelihood=loglike, probabilities=raw)
        post._normalize()
        return post

    def _normalize(self):
        self.probabilities = self.probabilities / self._quadrature(self.probabilities)

    def _quadrature(self, values: np.ndarray) -> float:
        out = values
        for dim in reversed(range(self.ndim)):
            out = np.trapezoid(out, self.axes[dim], axis=dim)
        return float(out)

    def mean(self) -> float:
        if self.ndim != 1:
            raise ValueError("mean() is 1-D only; use mean_vector()")
        return self._quadrature(self.axes[0] * self.probabilities)

    def variance(self) -> float:
        mu = self.mean()
        return self._quadrature((self.axes[0] - mu) ** 2 * self.probabilities)

    def std(self) -> float:
        return float(np.sqrt(self.variance()))

    def mean_vector(self) -> np.ndarray:
        if self.ndim != 2:
            raise ValueError("mean_vector() is 2-D only")
        bx, bz = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.array([self._quadrature(bx * self.probabilities),
                         self._quadrature(bz * self.probabilities)])

    def covariance(self) -> np.ndarray:
        mu = self.mean_vector()
        bx, bz = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        dx, dz = bx - mu[0], bz - mu[1]
        return np.array([
            [self._quadrature(dx * dx * self.probabilities),
             self._quadrature(dx * dz * self.probabilities)],
            [self._quadrature(dx * dz * self.probabilities),
             self._quadrature(dz * dz * self.probabilities)],
        ])

    def fold_abs(self) -> "PosteriorGrid":
        """Fold a symmetric 1-D grid onto |B|.

        Used when parity makes the sign of the field unidentifiable
        (z basis, B_z = 0): the posterior is then an even function and the
        physically meaningful density lives on the field magnitude.
        """
        if self.ndim != 1:
            raise ValueError("fold_abs() is 1-D only")
        axis = self.axes[0]
        n = len(axis)
        if n % 2 != 1 or abs(axis[0] + axis[-1]) > 1e-12:
            raise ValueError("fold_abs() needs a symmetric odd-length grid")
        half = n // 2
        pos_axis = axis[half:]
        folded = self.probabilities[half:] + self.probabilities[half::-1][: half + 1]
        with np.errstate(divide="ignore"):
            loglike = np.log(np.maximum(folded, 0.0))
        post = PosteriorGrid(axes=(pos_axis,), log_likelihood=loglike,
                             probabilities=folded)
        post._normalize()
        return post

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.ndim == 1:
            writer.writerow(["field", "probability"])
            for b, p in zip(self.axes[0], self.probabilities):
                writer.writerow([repr(float(b)), repr(float(p))])
        else:
            writer.writerow(["field_x", "field_z", "probability"])
            for i, bx in enumerate(self.axes[0]):
                for j, bz in enumerate(self.axes[1]):
                    writer.writerow([repr(float(bx)), repr(float(bz)),
                                     repr(float(self.probabilities[i, j]))])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------

def fisher_from_tables(
    table_minus: dict[str, float],
    table_center: dict[str, float],
    table_plus: dict[str, float],
    delta_b: float,
    n_seq: int,
    pruned_mass: float = 0.0,
    keep_per_trajectory: bool = False,
) -> FisherResult:
    """F = sum_leaves (dP/dB)^2 / P with central finite differences."""
    value = 0.0
    per_traj: dict[str, float] = {}
    max_diff = 0.0
    for string, p in table_center.items():
        if p <= PROBABILITY_FLOOR:
            continue
        diff = table_plus.get(string, 0.0) - table_minus.get(string, 0.0)
        max_diff = max(max_diff, abs(diff))
        contrib = (diff / (2.0 * delta_b)) ** 2 / p
        value += contrib
        if keep_per_trajectory:
            per_traj[string] = contrib
    warning = None
    if table_center and max_diff < 1e-11 and value > 0:
        warning = (
            f"finite-difference step {delta_b} may be below the noise floor "
            f"(max |P(+d) - P(-d)| = {max_diff:.3e})"
        )
    return FisherResult(value=value, delta_b=delta_b, pruned_mass=pruned_mass,
                        n_seq=n_seq, per_trajectory=per_traj or None,
                        warning=warning)


def _fisher_walk(params, schedule, delta_b, prune_threshold, record_depths):
    """Shared tree walk at B_x - d, B_x, B_x + d (pruning on the center)."""
    fields = (params.field_x - delta_b, params.field_x, params.field_x + delta_b)
    unitaries = []
    for bx in fields:
        prop = make_propagator(build_hamiltonian(replace(params, field_x=bx)))
        unitaries.append([prop.unitary(t) for t in schedule.intervals])
    site = schedule.site(params)
    proj_up = projector(params.n_sites, site, schedule.basis, +1).matrix
    proj_dn = projector(params.n_sites, site, schedule.basis, -1).matrix
    psi0 = PureState.all_down(params.n_sites).amplitudes
    return _tree_walk(unitaries, proj_up, proj_dn, psi0,
                      _SYMBOLS[schedule.basis], prune_threshold,
                      center=1, record_depths=record_depths)


def classical_fisher(
    params: SpinChainParams,
    schedule: MeasurementSchedule,
    delta_b: float = DEFAULT_DELTA_B,
    prune_threshold: float = 1e-12,
    keep_per_trajectory: bool = False,
) -> FisherResult:
    """Classical Fisher information of the full trajectory distribution."""
    if delta_b <= 0:
        raise ValueError("delta_b must be > 0")
    tables, pruned = _fisher_walk(params, schedule, delta_b, prune_threshold,
                                  record_depths=False)
    return fisher_from_tables(tables[0], tables[1], tables[2], delta_b,
                              n_seq=schedule.n_seq, pruned_mass=pruned[1],
                              keep_per_trajectory=keep_per_trajectory)


def fisher_sweep(
    params: SpinChainParams,
    tau: float,
    n_seq_max: int,
    basis: str = "z",
    delta_b: float = DEFAULT_DELTA_B,
    prune_threshold: float = 1e-12,
) -> list[FisherResult]:
    """F(n_seq) for n_seq = 1..n_seq_max from a single tree walk."""
    schedule = MeasurementSchedule.uniform(n_seq_max, tau, basis=basis)
    per_depth, depth_pruned = _fisher_walk(params, schedule, delta_b,
                                           prune_threshold, record_depths=True)
    results = []
    for depth, (tables, pruned) in enumerate(zip(per_depth, depth_pruned), start=1):
        results.append(fisher_from_tables(tables[0], tables[1], tables[2],
                                          delta_b, n_seq=depth,
                                          pruned_mass=pruned[1]))
    return results


def fisher_sweep_csv(results: list[FisherResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n_seq", "fisher", "inverse_fisher", "pruned_mass"])
    for res in results:
        inv = 1.0 / res.value if res.value > 0 else float("inf")
        writer.writerow([res.n_seq, repr(res.value), repr(inv), repr(res.pruned_mass)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Grid likelihood machinery
# ---------------------------------------------------------------------------

def _build_trie(counts: dict[str, int]) -> dict:
    """Prefix tree of observed outcome strings; leaves carry counts."""
    root: dict = {}
    for string, count in counts.items():
        node = root
        for sym in string:
            node = node.setdefault(sym, {})
        node["#"] = count
    return root


def _batched_step_unitaries(evals, evecs, tau):
    phases = np.exp(-1j * evals * tau)  # (C, dim)
    return np.einsum("cik,ck,cjk->cij", evecs, phases, evecs.conj(), optimize=True)


def _walk_trie_chunk(node, states, depth, step_unitaries, projs, loglike):
    """Accumulate count * log ||proj ... proj U psi0||^2 per grid point."""
    evolved = np.einsum("cij,cj->ci", step_unitaries[depth], states, optimize=True)
    for sym, child in node.items():
        if sym == "#":
            continue
        branch = evolved @ projs[sym].T
        count = child.get("#")
        if count is not None:
            p = np.real(np.einsum("ci,ci->c", branch.conj(), branch))
            with np.errstate(divide="ignore"):
                logs = np.where(p > LOGLIKE_FLOOR, np.log(np.maximum(p, LOGLIKE_FLOOR)),
                                -np.inf)
            loglike += count * logs
        if any(k != "#" for k in child):
            _walk_trie_chunk(child, branch, depth + 1, step_unitaries, projs, loglike)


def log_likelihood_grid(
    datasets,
    base_params: SpinChainParams,
    fields_x: np.ndarray,
    fields_z: np.ndarray,
    initial_state: PureState | None = None,
) -> np.ndarray:
    """Joint log-likelihood of one or more datasets on a flat field grid.

    The multinomial coefficient is omitted (constant in B).  Returns an
    array aligned with ``fields_x``/``fields_z``; grid points where any
    observed step has vanishing probability get -inf.
    """
    datasets = list(datasets)
    fields_x = np.asarray(fields_x, dtype=float)
    fields_z = np.asarray(fields_z, dtype=float)
    n = base_params.n_sites
    h_zero = build_hamiltonian(replace(base_params, field_x=0.0, field_z=0.0)).matrix
    op_x = site_operator(n, 1, "x")
    op_z = site_operator(n, 1, "z")
    psi0 = (initial_state or PureState.all_down(n)).amplitudes
    total = np.zeros(len(fields_x), dtype=float)
    for start in range(0, len(fields_x), _GRID_CHUNK):
        sl = slice(start, start + _GRID_CHUNK)
        fx, fz = fields_x[sl], fields_z[sl]
        hams = (h_zero[None, :, :]
                + fx[:, None, None] * op_x[None, :, :]
                + fz[:, None, None] * op_z[None, :, :])
        evals, evecs = np.linalg.eigh(hams)
        unitary_cache: dict[float, np.ndarray] = {}
        chunk_loglike = np.zeros(len(fx), dtype=float)
        for dataset in datasets:
            if not dataset.trajectories:
                continue
            schedule = dataset.schedule
            step_unitaries = []
            for tau in schedule.intervals:
                u = unitary_cache.get(tau)
                if u is None:
                    u = _batched_step_unitaries(evals, evecs, tau)
                    unitary_cache[tau] = u
                step_unitaries.append(u)
            site = schedule.site(base_params)
            up, down = _SYMBOLS[schedule.basis]
            projs = {up: projector(n, site, schedule.basis, +1).matrix,
                     down: projector(n, site, schedule.basis, -1).matrix}
            states = np.broadcast_to(psi0, (len(fx), len(psi0)))
            _walk_trie_chunk(_build_trie(dataset.counts), states, 0,
                             step_unitaries, projs, chunk_loglike)
        total[sl] = chunk_loglike
    return total


def log_likelihood(
    dataset: TrajectoryDataset,
    candidate_field,
    params: SpinChainParams | None = None,
) -> float:
    """Log-likelihood of one dataset at a single candidate field.

    ``candidate_field`` is B_x, or a (B_x, B_z) pair.
    """
    params = params or dataset.params
    if np.isscalar(candidate_field):
        bx, bz = float(candidate_field), params.field_z
    else:
        bx, bz = float(candidate_field[0]), float(candidate_field[1])
    return float(log_likelihood_grid([dataset], params,
                                     np.array([bx]), np.array([bz]))[0])


# ---------------------------------------------------------------------------
# Posteriors
# ---------------------------------------------------------------------------

def posterior(
    dataset: TrajectoryDataset,
    params: SpinChainParams | None = None,
    grid: GridSpec = DEFAULT_GRID_1D,
    initial_state: PureState | None = None,
    component: str = "x",
) -> PosteriorGrid:
    """1-D posterior over one field component, uniform prior on the grid.

    ``component`` selects which field component the grid scans ("x" or
    "z"); the other is held at its value in ``params``.
    """
    params = params or dataset.params
    axis = grid.axis()
    if component == "x":
        fx, fz = axis, np.full_like(axis, params.field_z)
    elif component == "z":
        fx, fz = np.full_like(axis, params.field_x), axis
    else:
        raise ValueError("component must be 'x' or 'z'")
    loglike = log_likelihood_grid([dataset], params, fx, fz,
                                  initial_state=initial_state)
    return PosteriorGrid.from_log_likelihood((axis,), loglike)


def posterior_2d(
    datasets,
    params: SpinChainParams,
    grid: tuple[GridSpec, GridSpec] = DEFAULT_GRID_2D,
) -> PosteriorGrid:
    """Joint (B_x, B_z) posterior from one or more per-basis datasets.

    With a z half and an x half this is the overlap of the two per-basis
    posteriors: their log-likelihoods simply add.
    """
    ax_x, ax_z = grid[0].axis(), grid[1].axis()
    bx, bz = np.meshgrid(ax_x, ax_z, indexing="ij")
    loglike = log_likelihood_grid(datasets, params, bx.ravel(), bz.ravel())
    return PosteriorGrid.from_log_likelihood((ax_x, ax_z),
                                             loglike.reshape(bx.shape))


def single_trajectory_posterior(
    trajectory: Trajectory,
    schedule: MeasurementSchedule,
    params: SpinChainParams,
    grid: GridSpec = DEFAULT_GRID_1D,
    initial_state: PureState | None = None,
) -> PosteriorGrid:
    """Posterior from one trajectory (M = 1)."""
    dataset = TrajectoryDataset(trajectories=[trajectory], seed=0,
                                schedule=schedule, params=params)
    return posterior(dataset, params, grid, initial_state=initial_state)


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------

def error_metrics(post: PosteriorGrid, true_field, fold: bool = False) -> ErrorMetrics:
    """delta_sq = (variance + bias^2) / |B_true|^2 from posterior moments.

    With ``fold=True`` (1-D only) the posterior is folded onto |B| before
    taking moments; use it when parity makes the field sign unidentifiable.
    """
    if post.ndim == 1:
        true = abs(float(true_field)) if fold else float(true_field)
        if true == 0.0:
            raise ZeroDivisionError("delta_sq diverges at B_true = 0")
        work = post.fold_abs() if fold else post
        mean = work.mean()
        var = work.variance()
        bias = abs(mean - (abs(true) if fold else true))
        return ErrorMetrics(mean=np.array(mean), variance=var, bias=bias,
                            delta_sq=(var + bias**2) / true**2)
    true_vec = np.asarray(true_field, dtype=float)
    norm_sq = float(true_vec @ true_vec)
    if norm_sq == 0.0:
        raise ZeroDivisionError("delta_sq diverges at |B_true| = 0")
    mean = post.mean_vector()
    cov = post.covariance()
    var = float(np.trace(cov))
    bias = float(np.linalg.norm(mean - true_vec))
    return ErrorMetrics(mean=mean, variance=var, bias=bias,
                        delta_sq=(var + bias**2) / norm_sq)


def _sample_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=master_seed,
                                      spawn_key=(index,)).generate_state(1)[0])


def averaged_error(
    params: SpinChainParams,
    schedule: MeasurementSchedule,
    m_repeats: int,
    n_samples: int,
    seed: int,
    grid: GridSpec = DEFAULT_GRID_1D,
    fold: bool | None = None,
    params_per_trajectory=None,
) -> float:
    """Mean delta_sq over independently generated datasets.

    ``fold=None`` folds automatically in the parity-degenerate case
    (z basis with B_z = 0).
    """
    from .protocol import sample_dataset

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if fold is None:
        fold = schedule.basis == "z" and params.field_z == 0.0
    values = []
    for idx in range(n_samples):
        dataset = sample_dataset(params, schedule, m_repeats,
                                 _sample_seed(seed, idx),
                                 params_per_trajectory=params_per_trajectory)
        post = posterior(dataset, params, grid)
        values.append(error_metrics(post, params.field_x, fold=fold).delta_sq)
    return float(np.mean(values))
