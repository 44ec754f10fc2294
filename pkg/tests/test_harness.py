import csv
import json

import numpy as np
import pytest

from q2scatter.errors import ConfigError
from q2scatter.harness import build_config, load_config, run_campaign
from q2scatter.harness.cli import main
from q2scatter.harness.campaigns import geometric_radii, kink_slopes, predicted_gain
from q2scatter.harness.config import apply_override, DEFAULTS

# keeps the verify campaign to a few seconds
LIGHT_VERIFY = ["verify.samples=10", "verify.kernel_samples=30", "verify.holder_samples=1000",
                "verify.fubini_refinement=false"]


def sets(*assignments):
    out = []
    for a in assignments:
        out += ["--set", a]
    return out


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults(self):
        cfg = build_config()
        assert cfg.campaign == "verify" and cfg.dimension == 3 and cfg.seed == 0
        assert cfg.pv.r_max == 8.0 and cfg.pv.eps_ladder == (0.08, 0.04, 0.02, 0.01)

    def test_override_parsing(self):
        raw = apply_override(DEFAULTS, "pv.r_max=64")
        assert raw["pv"]["r_max"] == 64
        raw = apply_override(raw, "profile.params.s=3.5")
        assert raw["profile"]["params"]["s"] == 3.5
        raw = apply_override(raw, "profile.kind=power")
        assert raw["profile"]["kind"] == "power"
        assert DEFAULTS["pv"]["r_max"] == 8.0

    @pytest.mark.parametrize("assignment", ["pv.rmax=3", "nothing=1", "pv", "ray.direction.x=1"])
    def test_bad_override(self, assignment):
        with pytest.raises(ConfigError):
            build_config(assignments=[assignment])

    @pytest.mark.parametrize("doc", [{"dimension": 4}, {"campaign": "fit"}, {"pv": {"delta": 2}},
                                     {"ray": {"radius_min": 5.0, "radius_max": 2.0}}, {"seed": 1.5},
                                     {"pv": "x"}, {"epsilon_scan": {"form": "other"}}, {"C0": 0}])
    def test_invalid_documents(self, doc):
        with pytest.raises(ConfigError):
            build_config(doc)

    def test_file_and_precedence(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"campaign": "q2", "seed": 4, "pv": {"r_max": 16}}))
        cfg = load_config(path, ["pv.r_max=32"], seed=9)
        assert cfg.campaign == "q2" and cfg.seed == 9 and cfg.pv.r_max == 32

    def test_bad_files(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(bad)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        arr = tmp_path / "arr.json"
        arr.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(arr)

    def test_hash_ignores_volatile_keys(self):
        a = build_config({"threads": 1, "output_dir": "x"})
        b = build_config({"threads": 8, "output_dir": "y"})
        c = build_config({"seed": 1})
        assert a.input_hash() == b.input_hash() != c.input_hash()

    def test_directions(self):
        first, second = build_config().directions()
        np.testing.assert_allclose(first, [0, 0, 1])
        np.testing.assert_allclose(second, [0.6, 0, 0.8])
        first, _ = build_config({"dimension": 2, "ray": {"direction": [3.0, 4.0]}}).directions()
        np.testing.assert_allclose(first, [0.6, 0.8])


def test_geometric_radii():
    np.testing.assert_allclose(geometric_radii(16, 512, 2), 16 * 2 ** (np.arange(11) / 2))
    np.testing.assert_allclose(geometric_radii(2, 32, 1), [2, 4, 8, 16, 32])


def test_prediction_helpers():
    assert predicted_gain(0.25, 3) == 0.75
    assert predicted_gain(1.5, 3) == 1.0
    below, above = kink_slopes([0.25, 0.75, 1.5], [1.0, 1.75, 2.5], 3)
    assert below == pytest.approx(1.5) and above == pytest.approx(1.0)
    assert kink_slopes([0.75, 1.5], [1.75, 2.5], 3) is None


class TestCli:
    def test_exit_config_error(self, tmp_path, capsys):
        assert main(["q2", "--out", str(tmp_path), "--set", "pv.nope=1"]) == 2
        assert "configuration error" in capsys.readouterr().err
        assert main(["bogus"]) == 2
        assert main(["q2", "--config", str(tmp_path / "missing.json")]) == 2

    def test_short_ladder_rejected_before_work(self, tmp_path):
        out = tmp_path / "run"
        assert main(["oracle", "--out", str(out), *sets("pv.eps_ladder=[0.08,0.04]")]) == 2
        assert not out.exists()

    def test_exit_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = main(["q2", "--out", str(blocker / "sub"), *sets("ray.radius_min=4", "ray.radius_max=8")])
        assert code == 3

    def test_q2_band_limited_zeros(self, tmp_path):
        out = tmp_path / "band"
        code = main(["q2", "--out", str(out), *sets('profile.kind="bandlimited"', "profile.params={\"rho0\": 1.0}",
                                                    "ray.radius_min=4", "ray.radius_max=64")])
        assert code == 0
        rows = read_rows(out / "results.csv")
        assert len(rows) == 5
        for row in rows:
            for col in ("s1_re", "s1_im", "pv_re", "pv_im", "q2_paper_re", "q2_plemelj_im"):
                assert float(row[col]) == 0.0

    def test_q2_scaling(self, tmp_path):
        base, scaled = tmp_path / "a", tmp_path / "b"
        common = sets("ray.radius_min=2", "ray.radius_max=16")
        assert main(["q2", "--out", str(base), *common]) == 0
        assert main(["q2", "--out", str(scaled), *common, *sets("profile.scale=2.0")]) == 0
        for ra, rb in zip(read_rows(base / "results.csv"), read_rows(scaled / "results.csv")):
            for col in ("s1_re", "pv_re", "q2_paper_re", "q2_plemelj_re", "q2_plemelj_im"):
                x, y = float(ra[col]), float(rb[col])
                assert y == pytest.approx(4 * x, rel=1e-13, abs=1e-300)

    def test_outputs_layout(self, tmp_path):
        out = tmp_path / "deep" / "run"
        assert main(["q2", "--out", str(out), *sets("ray.radius_min=2", "ray.radius_max=8")]) == 0
        summary = json.loads((out / "summary.json").read_text())
        config = json.loads((out / "config.json").read_text())
        assert config["campaign"] == "q2" and summary["passed"] is True and summary["failing_checks"] == []
        assert {v["name"] for v in summary["verdicts"]} == {"rotation_invariance", "finite_values"}
        rows = read_rows(out / "results.csv")
        assert {r["config_hash"] for r in rows} == {summary["input_hash"][:16]}

    def test_repeat_is_byte_identical(self, tmp_path):
        args = sets("ray.radius_min=2", "ray.radius_max=16")
        assert main(["q2", "--out", str(tmp_path / "a"), *args]) == 0
        assert main(["q2", "--out", str(tmp_path / "b"), "--threads", "4", *args]) == 0
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
        ha = json.loads((tmp_path / "a" / "summary.json").read_text())["input_hash"]
        hb = json.loads((tmp_path / "b" / "summary.json").read_text())["input_hash"]
        assert ha == hb

    def test_fault_injection(self, tmp_path, capsys):
        out = tmp_path / "fault"
        code = main(["verify", "--out", str(out), "--threads", "2", *sets(*LIGHT_VERIFY, "verify.leckband_density_scale=1.01")])
        assert code == 1
        failing = json.loads((out / "summary.json").read_text())["failing_checks"]
        assert "leckband_n3" in failing and "leckband_mass" in failing
        assert "FAIL  leckband_n3" in capsys.readouterr().out

    def test_seed_changes_samples_not_verdicts(self, tmp_path):
        runs = {}
        for seed in (0, 1):
            out = tmp_path / f"s{seed}"
            assert main(["verify", "--out", str(out), "--seed", str(seed), "--threads", "2", *sets(*LIGHT_VERIFY)]) == 0
            runs[seed] = (read_rows(out / "results.csv"), json.loads((out / "summary.json").read_text()))
        rows0, sum0 = runs[0]
        rows1, sum1 = runs[1]
        assert [r["value"] for r in rows0] != [r["value"] for r in rows1]
        assert [(v["name"], v["passed"]) for v in sum0["verdicts"]] == [(v["name"], v["passed"]) for v in sum1["verdicts"]]

    def test_verify_plane_skips_santalo(self, tmp_path):
        cfg = build_config({"campaign": "verify", "dimension": 2, "threads": 2}, LIGHT_VERIFY)
        report = run_campaign(cfg)
        assert any("unsupported-dimension" in note for note in report.notes)
        assert report.passed, report.failing_checks

    def test_epsilon_scan_skips_out_of_range(self, tmp_path):
        out = tmp_path / "scan"
        code = main(["epsilon-scan", "--out", str(out),
                     *sets("epsilon_scan.betas=[-0.75,1.5]", "epsilon_scan.radius_min=16", "epsilon_scan.radius_max=256")])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert any("out-of-theorem-range" in note for note in summary["notes"])
        assert any(note.startswith("heuristic") for note in summary["notes"])
        fits = read_rows(out / "fits.csv")
        assert [float(f["beta"]) for f in fits] == [1.5]
        assert fits[0]["status"] == "pass"

    def test_band_limited_oracle(self, tmp_path):
        report = run_campaign(build_config({"campaign": "oracle", "profile": {"kind": "bandlimited", "params": {"rho0": 1.0}},
                                            "oracle": {"eta_min": 2.5, "eta_max": 20.0, "count": 3}}))
        assert report.passed
        assert all(row[6] == 0.0 for row in report.tables["results"].rows)
