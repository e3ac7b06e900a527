import csv
import io
import json

import numpy as np
import pytest

from cavity_stability import io as cio
from cavity_stability.cli import main
from cavity_stability.geometry import RadialProfile
from test_oracles import G_ALPHA_1, R0_THRESHOLD


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSolve:
    def test_disk_energy(self, capsys):
        code, out, _ = run(capsys, "solve", "--r", "0.5")
        rec = json.loads(out)
        assert code == 0
        assert rec["bulk_energy"] == pytest.approx(rec["closed_form_energy"], rel=1e-8)
        assert rec["bulk_energy"] == pytest.approx(1.2 * np.pi, rel=1e-8)
        assert rec["config_hash"] == cio.config_hash(rec["config"])

    def test_zero_data_energy(self, capsys):
        _, out, _ = run(capsys, "solve", "--r", "0.5", "--alpha", "0")
        assert '"bulk_energy": 0.0,' in out

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "solve", "--r", "0.5", "--format", "csv")
        table = rows(out)
        assert code == 0 and len(table) == 64
        assert list(table[0]) == ["theta", "h", "Q", "dQ_dnu", "config_hash"]
        assert "\r" not in out

    def test_field_dump(self, capsys, tmp_path):
        path = tmp_path / "field.json"
        code, _, _ = run(capsys, "solve", "--r", "0.5", "--n-theta", "16", "--n-rho", "8", "--dump-field", str(path))
        d = json.loads(path.read_text())
        assert code == 0 and np.asarray(d["components"]).shape == (2, 16, 8)

    def test_profile_file(self, capsys, tmp_path):
        h = RadialProfile.from_function(lambda t: 0.5 + 0.02 * np.cos(2 * t), 32, 1.0)
        path = tmp_path / "h.json"
        path.write_text(cio.profile_to_json(h))
        code, out, _ = run(capsys, "solve", "--profile", str(path))
        assert code == 0 and json.loads(out)["criticality"]["is_critical"] is False


class TestConfigErrors:
    def test_unknown_key(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"r": 0.5, "radius": 2}')
        code, _, err = run(capsys, "solve", "--config", str(path))
        assert code == 1 and "'radius'" in err

    def test_wrong_type(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"r": 0.5, "n_theta": "many"}')
        code, _, err = run(capsys, "solve", "--config", str(path))
        assert code == 1 and "'n_theta'" in err

    def test_malformed_json(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"r": 0.5,')
        code, _, err = run(capsys, "solve", "--config", str(path))
        assert code == 1 and "invalid JSON" in err

    def test_flag_overrides_file(self, capsys, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"r": 0.5, "alpha": 3.0}')
        _, out, _ = run(capsys, "solve", "--config", str(path), "--alpha", "0")
        assert json.loads(out)["config"]["alpha"] == 0.0

    @pytest.mark.parametrize(
        "argv",
        [
            ["solve"],
            ["solve", "--r", "1.5"],
            ["solve", "--r", "0.5", "--n-theta", "7"],
            ["solve", "--r", "0.5", "--n-rho", "500"],
            ["stability", "--r", "0.5", "--n-modes", "40"],
            ["solve", "--r", "0.5", "--mu", "-1"],
            ["probe", "--r", "0.995"],
        ],
    )
    def test_rejected(self, capsys, argv):
        assert run(capsys, *argv)[0] == 1

    def test_profile_and_radius(self, capsys, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(cio.profile_to_json(RadialProfile.circle(0.5, 32, 1.0)))
        assert run(capsys, "solve", "--r", "0.5", "--profile", str(path))[0] == 1

    def test_profile_outer_radius_mismatch(self, capsys, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(cio.profile_to_json(RadialProfile.circle(0.5, 32, 2.0)))
        assert run(capsys, "solve", "--profile", str(path))[0] == 1


class TestStability:
    def test_window(self, capsys):
        code, out, _ = run(capsys, "stability", "--r", "0.995", "--n-modes", "12")
        rec = json.loads(out)
        assert code == 0
        assert rec["verdict"] == "stable" and rec["condition_met"] is True
        assert {"modes", "min_eig", "c0", "eigvec_coeffs", "r0", "G_alpha", "window"} <= set(rec)

    def test_zero_data_neutral_pair(self, capsys):
        _, out, _ = run(capsys, "stability", "--r", "0.9", "--alpha", "0")
        rec = json.loads(out)
        assert rec["verdict"] == "stable" and rec["neutral_count"] == 2
        assert abs(rec["c0"]) <= 1e-8 and rec["G_alpha"] == "-inf"

    def test_not_critical(self, capsys, tmp_path):
        h = RadialProfile.from_function(lambda t: 0.5 + 0.02 * np.cos(3 * t), 64, 1.0)
        path = tmp_path / "h.json"
        path.write_text(cio.profile_to_json(h))
        code, out, err = run(capsys, "stability", "--profile", str(path))
        assert code == 3 and "not critical" in err and "deviation" in err and out == ""
        code, out, _ = run(capsys, "stability", "--profile", str(path), "--force", "--n-modes", "4")
        assert code == 0 and json.loads(out)["window"] is None

    def test_matrix_csv(self, capsys):
        code, out, _ = run(capsys, "stability", "--r", "0.995", "--n-modes", "3", "--format", "csv")
        table = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert table[0] == ["const", "cos1", "sin1", "cos2", "sin2", "cos3", "sin3", "config_hash"]
        M = np.array([[float(x) for x in r[:-1]] for r in table[1:]])
        assert M.shape == (7, 7) and np.array_equal(M, M.T)

    def test_solver_failure(self, capsys, monkeypatch, tmp_path):
        import cavity_stability.elasticity as elasticity

        h = RadialProfile.from_function(lambda t: 0.5 + 0.02 * np.cos(3 * t), 32, 1.0)
        path = tmp_path / "h.json"
        path.write_text(cio.profile_to_json(h))
        monkeypatch.setattr(elasticity, "gmres", lambda op, b, **kw: (np.zeros_like(b), 3))
        code, out, err = run(capsys, "solve", "--profile", str(path))
        assert code == 2 and "solver failure" in err and "condition" in err and out == ""


class TestEvolve:
    def test_zero_iterations(self, capsys):
        code, out, _ = run(capsys, "evolve", "--r", "0.995", "--max-iter", "0")
        table = rows(out)
        assert code == 0 and len(table) == 1 and table[0]["iteration"] == "0"

    def test_short_run_monotone(self, capsys):
        code, out, _ = run(
            capsys, "evolve", "--r", "0.8", "--alpha", "0", "--perturb-amplitude", "0.01",
            "--perturb-mode", "3", "--max-iter", "40",
        )
        totals = [float(r["total"]) for r in rows(out)]
        assert code == 0 and len(totals) > 1 and np.all(np.diff(totals) <= 0)

    def test_stall(self, capsys):
        code, out, err = run(
            capsys, "evolve", "--r", "0.8", "--alpha", "0", "--perturb-amplitude", "0.01", "--max-halvings", "0",
        )
        table = rows(out)
        assert code == 4 and "stalled" in err
        assert len(table) == 2 and table[-1]["iteration"] == "1"

    def test_json(self, capsys):
        _, out, _ = run(capsys, "evolve", "--r", "0.995", "--max-iter", "0", "--format", "json")
        rec = json.loads(out)
        assert rec["trace"][0]["iteration"] == 0 and "config_hash" in rec


class TestSweep:
    def test_flip_near_G(self, capsys):
        code, out, _ = run(
            capsys, "sweep", "--r-min", "0.9", "--r-max", "0.999", "--steps", "100",
            "--n-modes", "2", "--n-theta", "16", "--n-rho", "12",
        )
        table = rows(out)
        flags = [r["condition_met"] == "true" for r in table]
        first = flags.index(True)
        assert code == 0 and not any(flags[:first]) and all(flags[first:])
        assert float(table[first - 1]["r"]) <= G_ALPHA_1 < float(table[first]["r"])
        assert float(table[first]["r"]) == pytest.approx(0.9922, abs=1e-3)

    def test_zero_data(self, capsys):
        _, out, _ = run(
            capsys, "sweep", "--alpha", "0", "--r-min", "0.85", "--r-max", "0.95", "--steps", "11",
            "--n-modes", "2", "--n-theta", "16", "--n-rho", "12",
        )
        for r in rows(out):
            assert (r["condition_met"] == "true") == (float(r["r"]) > R0_THRESHOLD)

    def test_single_step_matches_stability(self, capsys):
        _, sweep_out, _ = run(capsys, "sweep", "--r", "0.995", "--steps", "1", "--n-modes", "4")
        _, stab_out, _ = run(capsys, "stability", "--r", "0.995", "--n-modes", "4")
        row, rec = rows(sweep_out)[0], json.loads(stab_out)
        for key in ("c0", "min_eig", "r0", "G_alpha"):
            assert float(row[key]) == rec[key]
        assert row["condition_met"] == "true" and rec["condition_met"] is True

    def test_workers_do_not_change_output(self, capsys):
        argv = ["sweep", "--r-min", "0.99", "--r-max", "0.995", "--steps", "3", "--n-modes", "3"]
        serial = [r[:-1] for r in csv.reader(io.StringIO(run(capsys, *argv)[1]))]
        parallel = [r[:-1] for r in csv.reader(io.StringIO(run(capsys, *argv, "--workers", "2")[1]))]
        assert parallel == serial

    def test_bad_range(self, capsys):
        assert run(capsys, "sweep", "--r-min", "0.9", "--r-max", "0.8")[0] == 1


class TestProbe:
    def test_report(self, capsys):
        code, out, _ = run(
            capsys, "probe", "--r", "0.9", "--alpha", "0", "--seed", "1", "--n-samples", "5", "--min-frequency", "2",
        )
        rec = json.loads(out)
        assert code == 0 and rec["samples"] == 5 and rec["fitted_c"] > 0
        assert {"samples", "min_ratio", "fitted_c", "amplitude"} <= set(rec)


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["stability", "--r", "0.995", "--n-modes", "4"],
            ["stability", "--r", "0.995", "--n-modes", "4", "--format", "csv"],
            ["probe", "--r", "0.995", "--seed", "7", "--n-samples", "3", "--n-theta", "32"],
            ["evolve", "--r", "0.9", "--alpha", "0", "--perturb-amplitude", "0.01", "--max-iter", "5"],
        ],
    )
    def test_byte_identical(self, tmp_path, argv):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_hash_tracks_config(self, capsys):
        h1 = json.loads(run(capsys, "solve", "--r", "0.5")[1])["config_hash"]
        h2 = json.loads(run(capsys, "solve", "--r", "0.5", "--alpha", "0.5")[1])["config_hash"]
        assert h1 != h2
