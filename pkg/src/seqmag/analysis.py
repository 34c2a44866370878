"""Resource accounting and scaling fits.

Total-time budget T = M (t_init + n_seq (tau + t_meas)), power-law
regression y = alpha * x^(-beta) + epsilon via damped Gauss-Newton, and
the time-resource scaling experiment that produces the universal-collapse
coordinates (T^-nu n_seq^-beta, delta_sq).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, asdict

import numpy as np

from .chain import SpinChainParams
from .estimation import GridSpec, DEFAULT_GRID_1D, averaged_error, _sample_seed
from .protocol import MeasurementSchedule


class BudgetError(Exception):
    """Total time too small to fit a single protocol repetition."""


@dataclass(frozen=True)
class ResourceModel:
    """Per-repetition time costs, in units of 1/J."""

    tau: float
    t_init: float = 600.0
    t_meas: float = 50.0

    def __post_init__(self):
        if self.tau <= 0 or self.t_init <= 0 or self.t_meas <= 0:
            raise ValueError("all times must be > 0")

    def repetition_time(self, n_seq: int) -> float:
        return self.t_init + n_seq * (self.tau + self.t_meas)


@dataclass
class FitResult:
    alpha: float
    beta: float
    epsilon: float
    rss: float
    converged: bool
    n_iterations: int
    nu: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def repeats_for_budget(model: ResourceModel, total_time: float, n_seq: int) -> int:
    """M = floor(T / (t_init + n_seq (tau + t_meas)))."""
    if n_seq < 1:
        raise ValueError("n_seq must be >= 1")
    m = int(np.floor(total_time / model.repetition_time(n_seq)))
    if m < 1:
        raise BudgetError(
            f"total time {total_time} cannot fit one repetition of "
            f"{model.repetition_time(n_seq)} at n_seq={n_seq}"
        )
    return m


def invert_budget(model: ResourceModel, total_time: float, m_repeats: int) -> float:
    """n_seq = (T - M t_init) / (M (tau + t_meas)), the algebraic inverse."""
    return (total_time - m_repeats * model.t_init) / (
        m_repeats * (model.tau + model.t_meas)
    )


def fit_power_law(x, y, with_offset: bool = True, log_space: bool = False) -> FitResult:
    """Least-squares fit of y = alpha * x^(-beta) + epsilon.

    Initialized from a log-log linear regression with epsilon = 0, then
    refined with a damped Gauss-Newton iteration whose residual is monotone
    non-increasing.  ``log_space=True`` fits log y instead (diagnostic mode,
    offset forced to zero).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4:
        raise ValueError("need at least 4 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("all x and y must be > 0")
    if np.ptp(y) == 0.0:
        return FitResult(alpha=float(y[0]), beta=0.0, epsilon=0.0,
                         rss=0.0, converged=False, n_iterations=0)

    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    if log_space:
        return FitResult(alpha=float(np.exp(intercept)), beta=float(-slope),
                         epsilon=0.0,
                         rss=float(np.sum((np.log(y) - (intercept + slope * np.log(x))) ** 2)),
                         converged=True, n_iterations=0)
    theta = np.array([np.exp(intercept), -slope, 0.0])
    n_free = 3 if with_offset else 2

    def residuals(t):
        return y - (t[0] * x ** (-t[1]) + t[2])

    res = residuals(theta)
    rss = float(res @ res)
    converged = False
    iterations = 0
    for iterations in range(1, 201):
        xa = x ** (-theta[1])
        jac = np.column_stack([xa, -theta[0] * xa * np.log(x), np.ones_like(x)])
        jac = jac[:, :n_free]
        damping = 1e-12
        step = None
        # damped Gauss-Newton: grow the damping until the residual decreases
        for _ in range(60):
            lhs = jac.T @ jac + damping * np.eye(n_free)
            try:
                step = np.linalg.solve(lhs, jac.T @ residuals(theta))
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            trial = theta.copy()
            trial[:n_free] += step
            trial_res = residuals(trial)
            trial_rss = float(trial_res @ trial_res)
            if trial_rss <= rss:
                theta, rss = trial, trial_rss
                break
            damping *= 10.0
        else:
            break
        rel_step = np.linalg.norm(step) / max(np.linalg.norm(theta), 1e-30)
        if rel_step < 1e-10:
            converged = True
            break
    return FitResult(alpha=float(theta[0]), beta=float(theta[1]),
                     epsilon=float(theta[2]), rss=rss,
                     converged=converged, n_iterations=iterations)


@dataclass
class ScalingResult:
    """Scaling-experiment output: the raw table, per-T fits, and collapse."""

    rows: list[dict]                 # total_time, n_seq, m_repeats, delta_sq
    fits_per_time: dict[float, FitResult]
    nu_fit: FitResult
    beta_mean: float
    collapse: list[tuple[float, float]]   # ((J T)^-nu n_seq^-beta, delta_sq)
    skipped: list[dict]

    def table_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["total_time", "n_seq", "m_repeats", "delta_sq"])
        for row in self.rows:
            writer.writerow([repr(row["total_time"]), row["n_seq"],
                             row["m_repeats"], repr(row["delta_sq"])])
        return buf.getvalue()

    def collapse_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["collapse_coordinate", "delta_sq"])
        for coord, val in self.collapse:
            writer.writerow([repr(coord), repr(val)])
        return buf.getvalue()

    def fits_json(self) -> str:
        return json.dumps({
            "per_time": {repr(t): asdict(fit) for t, fit in self.fits_per_time.items()},
            "nu": asdict(self.nu_fit),
            "beta_mean": self.beta_mean,
        }, indent=2)


def scaling_experiment(
    params: SpinChainParams,
    model: ResourceModel,
    time_list,
    n_seq_list,
    seed: int,
    n_samples: int = 10,
    grid: GridSpec = DEFAULT_GRID_1D,
    basis: str = "z",
) -> ScalingResult:
    """Averaged delta_sq over a (T, n_seq) lattice plus power-law fits.

    For every cell, M comes from the time budget and delta_sq is averaged
    over ``n_samples`` fresh datasets.  Per-T fits give alpha(T), beta(T);
    alpha(T) ~ T^-nu is fit in turn, and collapse coordinates use nu and
    the mean beta.
    """
    rows: list[dict] = []
    skipped: list[dict] = []
    for t_idx, total_time in enumerate(time_list):
        for n_seq in n_seq_list:
            try:
                m_repeats = repeats_for_budget(model, total_time, n_seq)
            except BudgetError as exc:
                skipped.append({"total_time": total_time, "n_seq": n_seq,
                                "reason": str(exc)})
                continue
            schedule = MeasurementSchedule.uniform(n_seq, model.tau, basis=basis)
            cell_seed = _sample_seed(seed, t_idx * 100003 + n_seq)
            delta_sq = averaged_error(params, schedule, m_repeats, n_samples,
                                      cell_seed, grid=grid)
            rows.append({"total_time": float(total_time), "n_seq": int(n_seq),
                         "m_repeats": m_repeats, "delta_sq": delta_sq})

    fits_per_time: dict[float, FitResult] = {}
    for total_time in sorted({row["total_time"] for row in rows}):
        sub = [row for row in rows if row["total_time"] == total_time]
        if len(sub) >= 4:
            fits_per_time[total_time] = fit_power_law(
                [row["n_seq"] for row in sub],
                [row["delta_sq"] for row in sub])
    if len(fits_per_time) < 4:
        raise ValueError("need at least 4 feasible T values with >= 4 n_seq cells")
    times = np.array(sorted(fits_per_time))
    alphas = np.array([fits_per_time[t].alpha for t in times])
    nu_fit = fit_power_law(times, alphas, with_offset=False)
    nu_fit.nu = nu_fit.beta
    beta_mean = float(np.mean([fits_per_time[t].beta for t in times]))

    collapse = [
        (row["total_time"] ** (-nu_fit.beta) * row["n_seq"] ** (-beta_mean),
         row["delta_sq"])
        for row in rows
    ]
    return ScalingResult(rows=rows, fits_per_time=fits_per_time, nu_fit=nu_fit,
                         beta_mean=beta_mean, collapse=collapse, skipped=skipped)
