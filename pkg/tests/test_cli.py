import json

import pytest

from seqmag.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_OK, main
from seqmag import svgplot


def write_config(path, **overrides):
    config = {
        "experiment": "fisher",
        "seed": 7,
        "probe": {"n_sites": 4, "field_x": 0.1},
        "schedule": {"tau": "N/J", "n_seq": 3},
    }
    config.update(overrides)
    path.write_text(json.dumps(config))
    return path


class TestRun:
    def test_fisher_run_produces_outputs(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--output-dir", str(out)]) == EXIT_OK
        assert (out / "fisher_N4.csv").exists()
        assert (out / "inverse_fisher.svg").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["experiment"] == "fisher"
        assert manifest["seed"] == 7
        assert "fisher_N4.csv" in manifest["outputs"]
        assert "seqmag" in manifest["versions"]

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", experiment="posterior",
                           estimation={"m_repeats": 100})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(cfg), "--output-dir", str(out_a)]) == EXIT_OK
        assert main(["run", str(cfg), "--output-dir", str(out_b)]) == EXIT_OK
        for name in ("posterior_nseq3.csv", "posterior.svg"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", experiment="posterior",
                           estimation={"m_repeats": 100})
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", str(cfg), "--output-dir", str(out_a)])
        main(["run", str(cfg), "--output-dir", str(out_b), "--seed", "8"])
        a = (out_a / "posterior_nseq3.csv").read_text()
        b = (out_b / "posterior_nseq3.csv").read_text()
        assert a != b
        assert json.loads((out_b / "manifest.json").read_text())["seed"] == 8

    def test_unknown_key_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json")
        config = json.loads(cfg.read_text())
        config["probe"]["couplng"] = 1.0  # typo must not silently default
        cfg.write_text(json.dumps(config))
        assert main(["run", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_unknown_experiment_rejected(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", experiment="fishr")
        assert main(["run", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_malformed_json_rejected(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"experiment": "fisher",')
        assert main(["run", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_missing_file_rejected(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"),
                     "--output-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_oversized_chain_exits_capacity(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json",
                           probe={"n_sites": 30, "field_x": 0.1})
        assert main(["run", str(cfg), "--output-dir", str(tmp_path)]) == EXIT_CAPACITY

    def test_magnetization_run(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", experiment="magnetization",
                           probe={"n_sites": [3, 4], "field_x": 0.1})
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--output-dir", str(out)]) == EXIT_OK
        assert (out / "magnetization_N3.csv").exists()
        assert (out / "magnetization_N4.csv").exists()

    def test_dephasing_run(self, tmp_path):
        cfg = write_config(tmp_path / "cfg.json", experiment="dephasing",
                           dephasing={"rates": [0.0, 0.1]})
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--output-dir", str(out)]) == EXIT_OK
        text = (out / "fisher_dephasing.csv").read_text()
        assert text.splitlines()[0] == "gamma,n_seq,fisher,pruned_mass"
        assert len(text.strip().splitlines()) == 1 + 6


class TestPlot:
    def test_line_plot_from_csv(self, tmp_path):
        csv_file = tmp_path / "data.csv"
        csv_file.write_text("x,y\n1.0,2.0\n2.0,1.0\n3.0,0.5\n")
        spec = tmp_path / "spec.json"
        out = tmp_path / "data.svg"
        spec.write_text(json.dumps({"kind": "line", "x": "x", "y": "y",
                                    "output": str(out)}))
        assert main(["plot", str(csv_file), "--spec", str(spec)]) == EXIT_OK
        assert out.read_text().startswith("<svg")

    def test_heatmap_from_csv(self, tmp_path):
        rows = ["x,y,v"]
        for x in (0.0, 1.0):
            for y in (0.0, 1.0, 2.0):
                rows.append(f"{x},{y},{x + y}")
        csv_file = tmp_path / "grid.csv"
        csv_file.write_text("\n".join(rows) + "\n")
        spec = tmp_path / "spec.json"
        out = tmp_path / "grid.svg"
        spec.write_text(json.dumps({"kind": "heatmap", "x": "x", "y": "y",
                                    "value": "v", "output": str(out)}))
        assert main(["plot", str(csv_file), "--spec", str(spec)]) == EXIT_OK
        assert "<rect" in out.read_text()

    def test_malformed_csv_rejected(self, tmp_path):
        csv_file = tmp_path / "bad.csv"
        csv_file.write_text("x,y\n1.0\n")
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"kind": "line", "x": "x", "y": "y"}))
        assert main(["plot", str(csv_file), "--spec", str(spec)]) == EXIT_CONFIG

    def test_missing_column_rejected(self, tmp_path):
        csv_file = tmp_path / "data.csv"
        csv_file.write_text("x,y\n1.0,2.0\n2.0,1.0\n")
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"kind": "line", "x": "x", "y": "z"}))
        assert main(["plot", str(csv_file), "--spec", str(spec)]) == EXIT_CONFIG


class TestSvgBackend:
    def test_line_plot_deterministic(self):
        series = [([1.0, 2.0, 3.0], [2.0, 1.0, 0.5], "a")]
        a = svgplot.line_plot(series, xlabel="x", ylabel="y")
        b = svgplot.line_plot(series, xlabel="x", ylabel="y")
        assert a == b

    def test_log_axes(self):
        series = [([1.0, 10.0, 100.0], [1e-3, 1e-2, 1e-1], "a")]
        svg = svgplot.line_plot(series, log_x=True, log_y=True)
        assert svg.startswith("<svg")
        assert "polyline" in svg

    def test_heatmap_shape_guard(self):
        import numpy as np
        with pytest.raises(ValueError):
            svgplot.heatmap(np.arange(3.0), np.arange(4.0), np.zeros((4, 3)))
