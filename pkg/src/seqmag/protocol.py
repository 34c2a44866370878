"""Sequential measurement engine.

One protocol run: initialize the probe all-down, then repeat n_seq times
(evolve by tau_i, measure the readout site in a fixed basis, collapse).
Supports exhaustive enumeration over the binary outcome tree with pruning,
and seeded Monte Carlo sampling of trajectories and datasets.

Outcome encoding: "u"/"d" for the z basis, "+"/"-" for the x basis.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, asdict, field

import numpy as np

from .chain import (
    CapacityError,
    Operator,
    Propagator,
    PureState,
    SpinChainParams,
    build_hamiltonian,
    make_propagator,
    projector,
)

ENUMERATION_CAP = 20
DEFAULT_PRUNE = 1e-12

_SYMBOLS = {"z": ("u", "d"), "x": ("+", "-")}


@dataclass(frozen=True)
class MeasurementSchedule:
    """Evolution intervals, single readout basis, and readout site."""

    intervals: tuple[float, ...]
    basis: str = "z"  # z | x
    readout_site: int | None = None  # default: last site

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(float(t) for t in self.intervals))
        if len(self.intervals) < 1:
            raise ValueError("schedule needs at least one interval")
        if any(t <= 0 for t in self.intervals):
            raise ValueError("all intervals must be > 0")
        if self.basis not in ("z", "x"):
            raise ValueError(f"basis must be 'z' or 'x', got {self.basis!r}")

    @classmethod
    def uniform(cls, n_seq: int, tau: float, basis: str = "z",
                readout_site: int | None = None) -> "MeasurementSchedule":
        return cls(intervals=(tau,) * n_seq, basis=basis, readout_site=readout_site)

    @property
    def n_seq(self) -> int:
        return len(self.intervals)

    def site(self, params: SpinChainParams) -> int:
        return self.readout_site if self.readout_site is not None else params.n_sites


@dataclass(frozen=True)
class Trajectory:
    """Ordered binary outcomes of one protocol run."""

    outcomes: str
    basis: str

    def __post_init__(self):
        up, down = _SYMBOLS[self.basis]
        if any(c not in (up, down) for c in self.outcomes):
            raise ValueError(f"invalid outcome string {self.outcomes!r} for basis {self.basis}")

    def __len__(self) -> int:
        return len(self.outcomes)


@dataclass
class TrajectoryDistribution:
    """Full probability table over outcome strings, plus discarded mass."""

    probabilities: dict[str, float]
    pruned_mass: float
    params: SpinChainParams
    schedule: MeasurementSchedule

    def total(self) -> float:
        return sum(self.probabilities.values()) + self.pruned_mass

    def marginal(self) -> "TrajectoryDistribution":
        """Sum out the last outcome, giving the (n_seq - 1) distribution."""
        if self.schedule.n_seq < 2:
            raise ValueError("cannot marginalize a length-1 schedule")
        probs: dict[str, float] = {}
        for string, p in self.probabilities.items():
            probs[string[:-1]] = probs.get(string[:-1], 0.0) + p
        shorter = MeasurementSchedule(
            intervals=self.schedule.intervals[:-1],
            basis=self.schedule.basis,
            readout_site=self.schedule.readout_site,
        )
        return TrajectoryDistribution(probs, self.pruned_mass, self.params, shorter)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["outcome", "probability"])
        for string in sorted(self.probabilities):
            writer.writerow([string, repr(self.probabilities[string])])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "probabilities": {k: self.probabilities[k] for k in sorted(self.probabilities)},
                "pruned_mass": self.pruned_mass,
                "params": _params_snapshot(self.params),
                "schedule": {
                    "intervals": list(self.schedule.intervals),
                    "basis": self.schedule.basis,
                    "readout_site": self.schedule.readout_site,
                },
            },
            indent=2,
        )


@dataclass
class TrajectoryDataset:
    """M independent protocol runs and their outcome-string counts."""

    trajectories: list[Trajectory]
    seed: int
    schedule: MeasurementSchedule
    params: SpinChainParams
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            counts: dict[str, int] = {}
            for traj in self.trajectories:
                counts[traj.outcomes] = counts.get(traj.outcomes, 0) + 1
            self.counts = counts

    @property
    def m_repeats(self) -> int:
        return len(self.trajectories)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["outcome", "count"])
        for string in sorted(self.counts):
            writer.writerow([string, self.counts[string]])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "counts": {k: self.counts[k] for k in sorted(self.counts)},
                "m_repeats": self.m_repeats,
                "seed": self.seed,
                "params": _params_snapshot(self.params),
                "schedule": {
                    "intervals": list(self.schedule.intervals),
                    "basis": self.schedule.basis,
                    "readout_site": self.schedule.readout_site,
                },
            },
            indent=2,
        )


def _params_snapshot(params: SpinChainParams) -> dict:
    snap = asdict(params)
    if snap["bond_offsets"] is not None:
        snap["bond_offsets"] = [list(b) for b in snap["bond_offsets"]]
    return snap


def _readout_projectors(params: SpinChainParams, schedule: MeasurementSchedule
                        ) -> tuple[np.ndarray, np.ndarray]:
    site = schedule.site(params)
    p_up = projector(params.n_sites, site, schedule.basis, +1).matrix
    p_dn = projector(params.n_sites, site, schedule.basis, -1).matrix
    return p_up, p_dn


def step_probabilities(state: PureState, basis: str, site: int) -> tuple[float, float]:
    """(p_up, p_down) for measuring one site in the given basis."""
    n = state.n_sites
    pu = projector(n, site, basis, +1)
    amps = pu.matrix @ state.amplitudes
    p_up = float(np.real(np.vdot(amps, amps)))
    p_up = min(max(p_up, 0.0), 1.0)
    return p_up, 1.0 - p_up


def _tree_walk(
    unitaries: list[list[np.ndarray]],
    proj_up: np.ndarray,
    proj_dn: np.ndarray,
    psi0: np.ndarray,
    symbols: tuple[str, str],
    prune_threshold: float,
    center: int = 0,
    record_depths: bool = False,
):
    """Depth-synchronous walk of the binary outcome tree.

    ``unitaries[k][i]`` is the step-i unitary for variant k (several field
    values can ride the same tree so pruning stays aligned; pruning decisions
    use variant ``center``).  Branch states are kept unnormalized so that
    the squared norm of a leaf equals its trajectory probability.

    Returns (distributions, pruned_masses) where distributions[k] maps
    outcome string -> probability; with record_depths=True both become
    lists indexed by depth-1.
    """
    n_var = len(unitaries)
    n_seq = len(unitaries[0])
    nodes: list[tuple[str, list[np.ndarray]]] = [("", [psi0.copy() for _ in range(n_var)])]
    pruned = [0.0] * n_var
    per_depth: list[list[dict[str, float]]] = []
    for i in range(n_seq):
        next_nodes: list[tuple[str, list[np.ndarray]]] = []
        level: list[dict[str, float]] = [dict() for _ in range(n_var)]
        for string, states in nodes:
            evolved = [unitaries[k][i] @ states[k] for k in range(n_var)]
            for sym, proj in ((symbols[0], proj_up), (symbols[1], proj_dn)):
                children = [proj @ evolved[k] for k in range(n_var)]
                probs = [float(np.real(np.vdot(c, c))) for c in children]
                child_string = string + sym
                for k in range(n_var):
                    level[k][child_string] = probs[k]
                if probs[center] < prune_threshold:
                    for k in range(n_var):
                        pruned[k] += probs[k]
                elif i + 1 < n_seq:
                    next_nodes.append((child_string, children))
        per_depth.append(level)
        nodes = next_nodes
    if record_depths:
        # a branch recorded at depth d but pruned from expansion keeps its
        # mass in every deeper pruned tally
        depth_pruned: list[list[float]] = []
        running = [0.0] * n_var
        for d in range(n_seq):
            for k in range(n_var):
                total = sum(per_depth[d][k].values())
                running[k] = max(0.0, 1.0 - total)
            depth_pruned.append(list(running))
        return per_depth, depth_pruned
    return per_depth[-1], pruned


def enumerate_distribution(
    params: SpinChainParams,
    schedule: MeasurementSchedule,
    prune_threshold: float = 0.0,
    initial_state: PureState | None = None,
) -> TrajectoryDistribution:
    """Exhaustive trajectory distribution by depth-first tree expansion."""
    if schedule.n_seq > ENUMERATION_CAP:
        raise CapacityError(
            f"n_seq={schedule.n_seq} exceeds enumeration cap {ENUMERATION_CAP}; "
            "use Monte Carlo sampling instead"
        )
    if prune_threshold < 0:
        raise ValueError("prune_threshold must be >= 0")
    prop = make_propagator(build_hamiltonian(params))
    unitaries = [[prop.unitary(t) for t in schedule.intervals]]
    proj_up, proj_dn = _readout_projectors(params, schedule)
    psi0 = (initial_state or PureState.all_down(params.n_sites)).amplitudes
    dists, pruned = _tree_walk(
        unitaries, proj_up, proj_dn, psi0, _SYMBOLS[schedule.basis], prune_threshold
    )
    probs = {s: p for s, p in dists[0].items() if not (p < prune_threshold)}
    return TrajectoryDistribution(probs, pruned[0], params, schedule)


def sample_trajectory(
    params: SpinChainParams,
    schedule: MeasurementSchedule,
    rng: np.random.Generator,
    initial_state: PureState | None = None,
    propagator: Propagator | None = None,
) -> Trajectory:
    """One protocol run with outcomes drawn from the Born probabilities."""
    prop = propagator or make_propagator(build_hamiltonian(params))
    proj_up, proj_dn = _readout_projectors(params, schedule)
    up, down = _SYMBOLS[schedule.basis]
    psi = (initial_state or PureState.all_down(params.n_sites)).amplitudes
    outcomes = []
    for tau in schedule.intervals:
        psi = prop.unitary(tau) @ psi
        amps_up = proj_up @ psi
        p_up = float(np.real(np.vdot(amps_up, amps_up)))
        if rng.random() < p_up:
            outcomes.append(up)
            psi = amps_up / np.sqrt(p_up)
        else:
            outcomes.append(down)
            amps_dn = proj_dn @ psi
            psi = amps_dn / np.linalg.norm(amps_dn)
    return Trajectory(outcomes="".join(outcomes), basis=schedule.basis)


def _trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    # per-trajectory counter-based seeding: independent of scheduling order
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed,
                                                        spawn_key=(index,)))


def sample_dataset(
    params: SpinChainParams,
    schedule: MeasurementSchedule,
    m_repeats: int,
    rng_seed: int,
    initial_state: PureState | None = None,
    params_per_trajectory=None,
) -> TrajectoryDataset:
    """M independent trajectories, each from a fresh initialization.

    ``params_per_trajectory`` optionally maps (rng, index) -> SpinChainParams
    so disorder studies can redraw the probe at every protocol reset.
    """
    if m_repeats < 1:
        raise ValueError("m_repeats must be >= 1")
    shared_prop = None
    if params_per_trajectory is None:
        shared_prop = make_propagator(build_hamiltonian(params))
    trajectories = []
    for idx in range(m_repeats):
        rng = _trajectory_rng(rng_seed, idx)
        if params_per_trajectory is None:
            traj_params, prop = params, shared_prop
        else:
            traj_params = params_per_trajectory(rng, idx)
            prop = make_propagator(build_hamiltonian(traj_params))
        trajectories.append(
            sample_trajectory(traj_params, schedule, rng,
                              initial_state=initial_state, propagator=prop)
        )
    return TrajectoryDataset(trajectories=trajectories, seed=rng_seed,
                             schedule=schedule, params=params)


def sample_mixed_datasets(
    params: SpinChainParams,
    intervals: tuple[float, ...],
    m_repeats: int,
    rng_seed: int,
    readout_site: int | None = None,
) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    """Two-parameter mode: M/2 z-basis trajectories plus M/2 x-basis ones."""
    if m_repeats % 2 != 0:
        raise ValueError("mixed-basis sampling needs an even m_repeats")
    half = m_repeats // 2
    sched_z = MeasurementSchedule(intervals, basis="z", readout_site=readout_site)
    sched_x = MeasurementSchedule(intervals, basis="x", readout_site=readout_site)
    ds_z = sample_dataset(params, sched_z, half, rng_seed)
    # offset the spawn keys so the two halves never share a stream
    ds_x_trajs = []
    prop = make_propagator(build_hamiltonian(params))
    for idx in range(half):
        rng = _trajectory_rng(rng_seed, half + idx)
        ds_x_trajs.append(sample_trajectory(params, sched_x, rng, propagator=prop))
    ds_x = TrajectoryDataset(trajectories=ds_x_trajs, seed=rng_seed,
                             schedule=sched_x, params=params)
    return ds_z, ds_x
