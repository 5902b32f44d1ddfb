import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from pseudospec import io
from pseudospec.cli import RunConfig, build_parser, main, read_config_file, resolve_config
from pseudospec.errors import PseudospecError
from pseudospec.pseudospectrum import Region, compute_grid, extract_contours


class TestWriters:
    def test_hash_order_independent(self):
        a = io.config_hash({"x": 1, "y": [1.0, 2.0]})
        b = io.config_hash({"y": [1.0, 2.0], "x": 1})
        assert a == b and len(a) == 16
        assert a != io.config_hash({"x": 2, "y": [1.0, 2.0]})

    def test_plain(self):
        out = io._plain({"z": 1 + 2j, "a": np.arange(2), "n": float("nan"), "b": np.bool_(True)})
        assert out == {"z": {"re": 1.0, "im": 2.0}, "a": [0, 1], "n": "nan", "b": True}

    def test_csv_roundtrip(self, tmp_path):
        p = io.write_csv(tmp_path / "a.csv", ("t", "v", "ok"), [(0.1, 1 / 3, True), (2, 2.5, False)],
                         {"config_hash": "abc", "trusted": 1})
        lines = p.read_text().splitlines()
        assert lines[0] == "# config_hash: abc" and lines[2] == "t,v,ok"
        assert lines[3] == "0.10000000000000001,0.33333333333333331,1"
        assert np.allclose(io.read_csv(p), [[0.1, 1 / 3, 1], [2, 2.5, 0]], rtol=0, atol=0)

    def test_json(self, tmp_path):
        p = io.write_json(tmp_path / "a.json", {"b": 1, "a": 2j}, {"seed": 3})
        doc = json.loads(p.read_text())
        assert doc["_meta"] == {"seed": 3} and doc["a"] == {"re": 0.0, "im": 2.0}
        assert list(doc) == sorted(doc)

    def test_svg_well_formed(self, tmp_path):
        g = compute_grid(np.diag([0.0, 2.0]), Region(-1, 3, -1, 1, 41, 21), trust_radius=2.5)
        sets = [extract_contours(g, e) for e in (0.3, 0.6)]
        p = io.write_pseudospectrum_svg(tmp_path / "p.svg", g, sets, {"note": "a < b & c"})
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")
        tags = [el.tag.split("}")[1] for el in root]
        assert tags.count("polyline") == 4 and tags.count("circle") == 2
        assert "rect" in tags  # untrusted corners are shaded


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# comment\nN = 40\ndelta=0.25\nregion = -1,1,-2,2\n")
        ap = build_parser()
        cfg = resolve_config(ap.parse_args(["verify", "--config", str(cfg_file), "--N", "50"]), {"N": 192})
        assert cfg.N == 50 and cfg.delta == 0.25 and cfg.region == (-1, 1, -2, 2)
        cfg = resolve_config(ap.parse_args(["verify", "--config", str(cfg_file)]), {"N": 192})
        assert cfg.N == 40
        cfg = resolve_config(ap.parse_args(["verify"]), {"N": 192})
        assert cfg.N == 192 and cfg.R == RunConfig().R

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("bogus = 1\n")
        with pytest.raises(PseudospecError):
            read_config_file(f)

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv("PSEUDOSPEC_WORKERS", "3")
        assert resolve_config(build_parser().parse_args(["eig"])).workers == 3
        assert resolve_config(build_parser().parse_args(["eig", "--workers", "2"])).workers == 2


def run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path)])


class TestCommands:
    def test_eig_oscillator(self, tmp_path, capsys):
        assert run(tmp_path, "eig", "--potential", "1*x^2", "--N", "32") == 0
        data = io.read_csv(tmp_path / "eigenvalues.csv")
        assert np.allclose(data[:4, 1], [1, 3, 5, 7], atol=1e-10)
        header = (tmp_path / "eigenvalues.csv").read_text().splitlines()[0]
        assert header.startswith("# config_hash: ")
        echoed = json.loads(capsys.readouterr().out.splitlines()[0])
        assert echoed["command"] == "eig" and echoed["config"]["seed"] == RunConfig().seed

    def test_eig_bender_ground(self, tmp_path, capsys):
        assert run(tmp_path, "eig", "--potential", "1i*x^3", "--N", "128") == 0
        lam = io.read_csv(tmp_path / "eigenvalues.csv")[0]
        assert abs(lam[1] - 1.1562670719881) <= 1e-4 and abs(lam[2]) <= 1e-8

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["pseudospectrum", "--potential", "1i*x^3 + 1*x^2", "--N", "48",
                         "--region=-2,10,-4,4", "--nx", "25", "--ny", "17",
                         "--eps", "1e-1,1e-2", "--output-dir", str(d)]) == 0
        for name in ("grid.csv", "contours.csv", "pseudospectrum.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        ET.parse(a / "pseudospectrum.svg")
        head = (a / "grid.csv").read_text().splitlines()
        assert "re,im,sigma_min,log10_resnorm,trusted" in head

    def test_workers_do_not_change_outputs(self, tmp_path):
        args = ["pseudospectrum", "--N", "48", "--region=-2,10,-4,4", "--nx", "13", "--ny", "9", "--no-svg"]
        main(args + ["--workers", "1", "--output-dir", str(tmp_path / "a")])
        main(args + ["--workers", "3", "--output-dir", str(tmp_path / "b")])
        assert (tmp_path / "a/grid.csv").read_bytes() == (tmp_path / "b/grid.csv").read_bytes()

    def test_verify(self, tmp_path):
        assert run(tmp_path, "verify", "--N", "64", "--nx", "36", "--ny", "31") == 0
        rep = json.loads((tmp_path / "verify.json").read_text())
        assert rep["eps"] > 0 and rep["violations"] == [] and rep["monotone_in_delta"]
        assert "window" in rep["note"]

    def test_semigroup_airy_column(self, tmp_path):
        assert run(tmp_path, "semigroup", "--potential", "1i*x", "--scheme", "fd", "--N", "300",
                   "--scale-or-L", "20", "--times", "0.5,1,1.5") == 0
        text = (tmp_path / "curve.csv").read_text()
        assert "t,norm,log_norm,exact_airy" in text

    def test_riesz_small(self, tmp_path):
        assert run(tmp_path, "riesz", "--k-max", "3") == 0
        rep = json.loads((tmp_path / "projections.json").read_text())
        assert len(rep["projections"]) == 4 and rep["max_idempotency_defect"] <= 1e-7

    def test_evolve(self, tmp_path):
        assert run(tmp_path, "evolve", "--N", "400", "--T", "0.1", "--dt", "0.01") == 0
        assert (tmp_path / "trajectory.csv").read_text().count("\n") > 400

    def test_mehler(self, tmp_path):
        assert run(tmp_path, "mehler-check") == 0
        assert json.loads((tmp_path / "mehler.json").read_text())["bounded"] is True

    def test_counterexample_scan_file(self, tmp_path):
        run(tmp_path, "scaling", "--family", "counterexample", "--tau", "1,2")
        head = (tmp_path / "scan.csv").read_text().splitlines()
        assert "tau,z_im,resnorm,log_resnorm,trusted" in head

    def test_gate_failure_exit(self, tmp_path):
        assert run(tmp_path, "eig", "--potential", "1i*x^3", "--N", "8") == 2

    def test_bad_potential_exit(self, tmp_path, capsys):
        assert run(tmp_path, "eig", "--potential", "y^2") == 2
        assert "InvalidArgument" in capsys.readouterr().out
