"""Batch front-end: experiment recipes as JSON configs, one subcommand per task.

``seqmag run <config>`` executes a recipe and writes CSV data files, a JSON
run manifest, and optional SVG plots into the output directory.
``seqmag plot <csv> --spec <file>`` renders a CSV through the SVG backend.

Config parsing is strict: unknown keys are rejected so a typo in a physics
parameter cannot silently fall back to a default.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .chain import CapacityError, SpinChainParams, magnetization_series
from .protocol import MeasurementSchedule, sample_dataset, sample_mixed_datasets
from .estimation import (
    GridSpec,
    averaged_error,
    fisher_sweep,
    fisher_sweep_csv,
    posterior,
    posterior_2d,
)
from .analysis import ResourceModel, scaling_experiment
from .lindblad import fisher_dephasing_sweep, dephasing_sweep_csv
from .disorder import (
    DisorderParams,
    averaged_fisher_disorder,
    disorder_sweep_csv,
    misspecified_bayes_experiment,
    misspecified_csv,
)
from . import svgplot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3

KINDS = ("fisher", "posterior", "posterior2d", "resource", "dephasing",
         "disorder", "misspecified", "magnetization", "collapse")

_SECTION_KEYS = {
    "": {"experiment", "seed", "output_dir", "probe", "schedule", "grid",
         "resource", "dephasing", "disorder", "estimation", "times",
         "n_seq_list", "plots"},
    "probe": {"n_sites", "coupling", "field_x", "field_z", "max_sites"},
    "schedule": {"tau", "n_seq", "basis", "readout_site"},
    "grid": {"lo", "hi", "n_points"},
    "resource": {"t_init", "t_meas"},
    "dephasing": {"rates"},
    "disorder": {"half_widths", "n_samples"},
    "estimation": {"m_repeats", "n_samples"},
}


class ConfigError(Exception):
    pass


def _check_keys(section: dict, name: str):
    allowed = _SECTION_KEYS[name]
    unknown = set(section) - allowed
    if unknown:
        where = f"section {name!r}" if name else "top level"
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; "
                          f"allowed: {sorted(allowed)}")


def load_config(path: str) -> dict:
    try:
        with open(path) as handle:
            config = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be an object")
    _check_keys(config, "")
    for name in _SECTION_KEYS:
        if name and name in config:
            if not isinstance(config[name], dict):
                raise ConfigError(f"section {name!r} must be an object")
            _check_keys(config[name], name)
    kind = config.get("experiment")
    if kind not in KINDS:
        raise ConfigError(f"experiment must be one of {KINDS}, got {kind!r}")
    if "probe" not in config:
        raise ConfigError("config requires a 'probe' section")
    return config


def _resolve_tau(raw, n_sites: int) -> float:
    if raw == "N/J":
        return float(n_sites)
    return float(raw)


def _probe(config: dict, n_sites: int | None = None) -> SpinChainParams:
    section = dict(config["probe"])
    if n_sites is not None:
        section["n_sites"] = n_sites
    return SpinChainParams(**section)


def _grid(config: dict, default_points: int = 401) -> GridSpec:
    section = config.get("grid", {})
    return GridSpec(lo=section.get("lo", -0.2), hi=section.get("hi", 0.2),
                    n_points=section.get("n_points", default_points))


def _schedule_section(config: dict) -> dict:
    if "schedule" not in config:
        raise ConfigError("this experiment requires a 'schedule' section")
    return config["schedule"]


class _Runner:
    def __init__(self, config: dict, out_dir: Path, seed: int):
        self.config = config
        self.out_dir = out_dir
        self.seed = seed
        self.outputs: list[str] = []
        self.plots = bool(config.get("plots", True))

    def write(self, name: str, content: str):
        path = self.out_dir / name
        path.write_text(content)
        self.outputs.append(name)

    # ---- experiment kinds -------------------------------------------------

    def run_magnetization(self):
        probe_cfg = self.config["probe"]
        sizes = probe_cfg["n_sites"]
        sizes = sizes if isinstance(sizes, list) else [sizes]
        sched = _schedule_section(self.config)
        for n in sizes:
            params = _probe(self.config, n)
            t_max = _resolve_tau(sched.get("tau", "N/J"), n) * sched.get("n_seq", 10)
            times = np.linspace(0.0, t_max, 400)
            series = [magnetization_series(params, site, times)
                      for site in (1, params.n_sites)]
            rows = ["time,m_site1,m_siteN"]
            for idx, t in enumerate(times):
                rows.append(f"{t!r},{series[0].values[idx]!r},{series[1].values[idx]!r}")
            self.write(f"magnetization_N{n}.csv", "\n".join(rows) + "\n")
            if self.plots:
                self.write(f"magnetization_N{n}.svg", svgplot.line_plot(
                    [(times, series[0].values, "site 1"),
                     (times, series[1].values, f"site {params.n_sites}")],
                    xlabel="J t", ylabel="magnetization",
                    title=f"N={n}", markers=False))

    def run_fisher(self):
        probe_cfg = self.config["probe"]
        sizes = probe_cfg["n_sites"]
        sizes = sizes if isinstance(sizes, list) else [sizes]
        sched = _schedule_section(self.config)
        plot_series = []
        for n in sizes:
            params = _probe(self.config, n)
            tau = _resolve_tau(sched.get("tau", "N/J"), n)
            results = fisher_sweep(params, tau, sched["n_seq"],
                                   basis=sched.get("basis", "z"))
            self.write(f"fisher_N{n}.csv", fisher_sweep_csv(results))
            plot_series.append(
                ([r.n_seq for r in results],
                 [1.0 / r.value if r.value > 0 else np.nan for r in results],
                 f"N={n}"))
        if self.plots:
            self.write("inverse_fisher.svg", svgplot.line_plot(
                plot_series, xlabel="n_seq", ylabel="1/F",
                log_y=True, title="Inverse Fisher information"))

    def run_posterior(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        est = self.config.get("estimation", {})
        m_repeats = est.get("m_repeats", 1000)
        grid = _grid(self.config)
        n_list = self.config.get("n_seq_list", [sched.get("n_seq", 1)])
        plot_series = []
        for n_seq in n_list:
            schedule = MeasurementSchedule.uniform(n_seq, tau,
                                                   basis=sched.get("basis", "z"))
            dataset = sample_dataset(params, schedule, m_repeats, self.seed)
            post = posterior(dataset, params, grid)
            self.write(f"posterior_nseq{n_seq}.csv", post.to_csv())
            plot_series.append((post.axes[0], post.probabilities, f"n_seq={n_seq}"))
        if self.plots:
            self.write("posterior.svg", svgplot.line_plot(
                plot_series, xlabel="B_x / J", ylabel="posterior density",
                markers=False))

    def run_posterior2d(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        est = self.config.get("estimation", {})
        m_repeats = est.get("m_repeats", 1000)
        section = self.config.get("grid", {})
        grid = (GridSpec(lo=section.get("lo", -0.2), hi=section.get("hi", 0.2),
                         n_points=section.get("n_points", 201)),) * 2
        for n_seq in self.config.get("n_seq_list", [sched.get("n_seq", 1)]):
            intervals = (tau,) * n_seq
            ds_z, ds_x = sample_mixed_datasets(params, intervals, m_repeats,
                                               self.seed)
            post = posterior_2d([ds_z, ds_x], params, grid)
            self.write(f"posterior2d_nseq{n_seq}.csv", post.to_csv())
            if self.plots:
                self.write(f"posterior2d_nseq{n_seq}.svg", svgplot.heatmap(
                    post.axes[0], post.axes[1], post.probabilities,
                    xlabel="B_x / J", ylabel="B_z / J",
                    title=f"joint posterior, n_seq={n_seq}"))

    def _scaling(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        resource = self.config.get("resource", {})
        model = ResourceModel(tau=tau, t_init=resource.get("t_init", 600.0),
                              t_meas=resource.get("t_meas", 50.0))
        est = self.config.get("estimation", {})
        return scaling_experiment(
            params, model,
            self.config["times"], self.config["n_seq_list"], self.seed,
            n_samples=est.get("n_samples", 10), grid=_grid(self.config),
            basis=sched.get("basis", "z"))

    def run_resource(self):
        result = self._scaling()
        self.write("resource_table.csv", result.table_csv())
        self.write("resource_fits.json", result.fits_json())
        if self.plots:
            series = []
            for total_time in sorted(result.fits_per_time):
                sub = [r for r in result.rows if r["total_time"] == total_time]
                series.append(([r["n_seq"] for r in sub],
                               [r["delta_sq"] for r in sub],
                               f"T={total_time:g}"))
            self.write("resource.svg", svgplot.line_plot(
                series, xlabel="n_seq", ylabel="delta_sq", log_y=True))

    def run_collapse(self):
        result = self._scaling()
        self.write("collapse.csv", result.collapse_csv())
        self.write("resource_fits.json", result.fits_json())
        if self.plots:
            coords = sorted(result.collapse)
            self.write("collapse.svg", svgplot.line_plot(
                [([c for c, _ in coords], [v for _, v in coords], "")],
                xlabel="(J T)^-nu n_seq^-beta", ylabel="delta_sq",
                log_x=True, log_y=True, markers=True))

    def run_dephasing(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        rates = self.config.get("dephasing", {}).get("rates", [0.0])
        rows = fisher_dephasing_sweep(params, tau, sched["n_seq"], rates,
                                      basis=sched.get("basis", "z"))
        self.write("fisher_dephasing.csv", dephasing_sweep_csv(rows))
        if self.plots:
            series = []
            for gamma in rates:
                sub = [r for r in rows if r["gamma"] == gamma]
                series.append(([r["n_seq"] for r in sub],
                               [max(r["fisher"], 1e-300) for r in sub],
                               f"gamma={gamma:g}"))
            self.write("fisher_dephasing.svg", svgplot.line_plot(
                series, xlabel="n_seq", ylabel="F", log_y=True))

    def run_disorder(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        section = self.config.get("disorder", {})
        half_widths = section.get("half_widths", [0.0])
        n_samples = section.get("n_samples", 100)
        chunks = []
        for h in half_widths:
            disorder = DisorderParams(half_widths=(h, h, h), n_samples=n_samples)
            rows = averaged_fisher_disorder(params, tau, sched["n_seq"],
                                            disorder, self.seed)
            csv_text = disorder_sweep_csv(rows, h)
            chunks.append(csv_text if not chunks else
                          "\n".join(csv_text.splitlines()[1:]) + "\n")
        self.write("fisher_disorder.csv", "".join(chunks))

    def run_misspecified(self):
        params = _probe(self.config)
        sched = _schedule_section(self.config)
        tau = _resolve_tau(sched.get("tau", "N/J"), params.n_sites)
        resource = self.config.get("resource", {})
        model = ResourceModel(tau=tau, t_init=resource.get("t_init", 600.0),
                              t_meas=resource.get("t_meas", 50.0))
        section = self.config.get("disorder", {})
        h = section.get("half_widths", [0.01])
        h = h[0] if isinstance(h, list) else h
        disorder = DisorderParams(half_widths=(h, h, h),
                                  n_samples=section.get("n_samples", 100))
        rows, fits = misspecified_bayes_experiment(
            params, model, disorder, self.config["times"],
            self.config["n_seq_list"], self.seed,
            n_samples=disorder.n_samples, grid=_grid(self.config),
            basis=sched.get("basis", "z"))
        self.write("misspecified_table.csv", misspecified_csv(rows))
        self.write("misspecified_fits.json", json.dumps({
            "per_n_seq": {str(n): {"g": fit.alpha, "nu": fit.beta,
                                   "epsilon": fit.epsilon}
                          for n, fit in fits.per_n_seq.items()},
            "nu_mean": fits.nu_mean(),
            "g_exponent": fits.g_exponent_fit.beta,
        }, indent=2))


def run(config_path: str, output_dir: str | None = None,
        seed: int | None = None, threads: int | None = None) -> int:
    """Execute one experiment recipe; returns the process exit status."""
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if threads is not None:
        os.environ["SEQMAG_THREADS"] = str(threads)
    out_dir = Path(output_dir or config.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    effective_seed = seed if seed is not None else int(config.get("seed", 0))
    runner = _Runner(config, out_dir, effective_seed)
    start = time.monotonic()
    try:
        getattr(runner, f"run_{config['experiment']}")()
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {
        "schema_version": 1,
        "experiment": config["experiment"],
        "config": config,
        "seed": effective_seed,
        "threads": threads,
        "versions": {"seqmag": __version__, "numpy": np.__version__},
        "wall_time_s": round(time.monotonic() - start, 3),
        "outputs": runner.outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return EXIT_OK


def plot(csv_path: str, spec_path: str) -> int:
    """Render a CSV through the SVG backend, driven by a JSON plot spec."""
    try:
        with open(spec_path) as handle:
            spec = json.load(handle)
        with open(csv_path) as handle:
            reader = csv.reader(handle)
            header = next(reader)
            rows = [row for row in reader if row]
        if not rows or any(len(row) != len(header) for row in rows):
            raise ValueError("malformed CSV: ragged or empty rows")
        columns = {name: np.array([float(row[i]) for row in rows])
                   for i, name in enumerate(header)}
    except (OSError, ValueError, json.JSONDecodeError, StopIteration) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    kind = spec.get("kind", "line")
    output = spec.get("output", str(Path(csv_path).with_suffix(".svg")))
    try:
        if kind == "heatmap":
            x_col, y_col, v_col = spec["x"], spec["y"], spec["value"]
            x_axis = np.unique(columns[x_col])
            y_axis = np.unique(columns[y_col])
            values = columns[v_col].reshape(len(x_axis), len(y_axis))
            svg = svgplot.heatmap(x_axis, y_axis, values,
                                  xlabel=x_col, ylabel=y_col)
        else:
            x_col = spec["x"]
            y_cols = spec["y"] if isinstance(spec["y"], list) else [spec["y"]]
            series = [(columns[x_col], columns[y], y) for y in y_cols]
            svg = svgplot.line_plot(series, xlabel=x_col,
                                    log_x=spec.get("log_x", False),
                                    log_y=spec.get("log_y", False))
    except (KeyError, ValueError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    Path(output).write_text(svg)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="seqmag",
        description="Sequential-measurement spin-chain magnetometry experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment recipe")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int,
                       default=int(os.environ.get("SEQMAG_THREADS", "0")) or None)
    p_plot = sub.add_parser("plot", help="render a CSV as an SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--spec", required=True)
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, output_dir=args.output_dir, seed=args.seed,
                   threads=args.threads)
    return plot(args.csv, args.spec)


if __name__ == "__main__":
    raise SystemExit(main())
