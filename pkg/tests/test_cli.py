import csv
import io
import json
import subprocess
import sys

import pytest

from finite_cooling import __version__
from finite_cooling.cli import main
from finite_cooling.config import ConfigError, SEED_ENV, parse_config
from finite_cooling.experiment import FIELDS, render_csv


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


class TestPrecedence:
    def test_flag_over_file_over_env(self, tmp_path):
        ini = tmp_path / "c.ini"
        ini.write_text("[experiment]\nseed = 5\nlambda = 4\nbeta = 0.5\n")
        env = {SEED_ENV: "9"}
        assert parse_config(["goe", "--lambda", "3"], env).seed == 9
        cfg = parse_config(["goe", "--config", str(ini)], env)
        assert (cfg.seed, cfg.lam, cfg.beta) == (5, 4.0, 0.5)
        cfg = parse_config(["goe", "--config", str(ini), "--seed", "1", "--beta", "2"], env)
        assert (cfg.seed, cfg.lam, cfg.beta) == (1, 4.0, 2.0)

    def test_defaults(self):
        cfg = parse_config(["coherent", "--lambda", "10"], {})
        assert cfg.protocols == ("tl",) and cfg.N == (100,) and cfg.seed is None
        assert parse_config(["sweep", "--lambda", "2", "--seed", "0"], {}).protocols[0] == "tl"

    def test_beta_f(self):
        cfg = parse_config(["coherent", "--beta", "1e-8", "--beta-f", "10"], {})
        assert cfg.lam == pytest.approx(1e9, rel=1e-15)
        with pytest.raises(ConfigError, match="conflicts"):
            parse_config(["coherent", "--beta", "1", "--beta-f", "10", "--lambda", "5"], {})

    def test_gamma_becomes_beta_h(self):
        cfg = parse_config(["incoherent", "--lambda", "3", "--gamma", "1"], {})
        assert cfg.beta_H == 0.5

    @pytest.mark.parametrize("text,match", [
        ("[experiment]\nwat = 1\n", "unknown key"),
        ("[other]\nseed = 1\n", "exactly one"),
        ("[experiment]\nseed = 1\n[more]\n", "exactly one"),
        ("seed = 1\n", "malformed"),
        ("[experiment]\nn = 2.5\n", "bad value"),
    ])
    def test_bad_files(self, tmp_path, text, match):
        ini = tmp_path / "bad.ini"
        ini.write_text(text)
        with pytest.raises(ConfigError, match=match):
            parse_config(["coherent", "--lambda", "2", "--config", str(ini)], {})


class TestExitCodes:
    def test_version(self, capsys):
        code, out, _ = run(["--version"], capsys)
        assert code == 0 and out.strip() == __version__

    def test_no_arguments(self, capsys):
        code, _, err = run([], capsys)
        assert code == 2 and "usage" in err

    @pytest.mark.parametrize("argv,needle", [
        (["coherent", "--lambda", "0.5"], "--lambda"),
        (["coherent"], "--lambda"),
        (["coherent", "--lambda", "2", "--protocol", "fast"], "--protocol"),
        (["goe", "--lambda", "2"], "--seed"),
        (["coherent", "--lambda", "2", "--levels", "0,1,2", "--protocol", "ssp"], "qudit"),
        (["incoherent", "--lambda", "2"], "--beta-h"),
        (["coherent", "--lambda", "2", "-N", "0"], "--n"),
        (["coherent", "--lambda", "x"], "lambda"),
        (["teleport"], "invalid choice"),
    ])
    def test_validation_errors(self, capsys, argv, needle):
        code, out, err = run(argv, capsys)
        assert code == 2 and out == "" and needle in err

    def test_missing_config_file(self, capsys, tmp_path):
        code, _, err = run(["coherent", "--lambda", "2", "--config", str(tmp_path / "nope.ini")], capsys)
        assert code == 4 and "nope.ini" in err

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, _ = run(["coherent", "--lambda", "2", "-o", str(tmp_path / "no" / "out.csv")], capsys)
        assert code == 4

    def test_numerical_failure(self, capsys, monkeypatch):
        from finite_cooling import experiment
        from finite_cooling.errors import ConvergenceError

        def boom(*a, **k):
            raise ConvergenceError("no luck")
        monkeypatch.setattr(experiment, "run_swap_protocol", boom)
        code, _, err = run(["coherent", "--lambda", "2"], capsys)
        assert code == 3 and "no luck" in err


class TestOutput:
    def test_sweep_order(self, capsys):
        code, out, _ = run(["sweep", "--lambda", "10", "-N", "20,10", "--seed", "3", "--m", "10",
                            "--protocol", "ssp,tl,rw"], capsys)
        assert code == 0
        got = [(r["protocol"], r["N"]) for r in rows(out)]
        assert got == [(p, n) for p in ("tl", "rw", "ssp") for n in ("10", "20")]

    def test_full_sweep_has_canonical_rows(self, capsys):
        code, out, _ = run(["sweep", "--lambda", "10", "-N", "5,6,7", "--seed", "1", "--m", "5",
                            "--protocol", "tl,rw,ssp"], capsys)
        assert code == 0 and len(rows(out)) == 9
        assert out.splitlines()[0] == ",".join(FIELDS)
        assert "\r" not in out

    def test_empty_record_list(self):
        assert render_csv([]) == ",".join(FIELDS) + "\n"

    def test_csv_round_trip(self, capsys):
        code, out, _ = run(["coherent", "--lambda", "10", "-N", "50"], capsys)
        (r,) = rows(out)
        assert code == 0 and r["wall_ms"] == "" and r["seed"] == ""
        diss = float(r["dissipation_nats"])
        assert diss == pytest.approx(float(r["relent_sum"]) + float(r["mutual_info"]), abs=1e-12)
        assert repr(diss) == r["dissipation_nats"]
        assert abs(float(r["residual"])) < 1e-10

    def test_timing_fills_wall_ms(self, capsys):
        _, out, _ = run(["coherent", "--lambda", "10", "-N", "5", "--timing"], capsys)
        assert float(rows(out)[0]["wall_ms"]) >= 0

    def test_byte_identical_reruns(self, capsys):
        argv = ["goe", "--lambda", "10", "-N", "8,12", "--seed", "42", "--m", "30",
                "--protocol", "goe-eig,goe-spacing,goe-cumulative"]
        first = run(argv, capsys)[1]
        second = run(argv, capsys)[1]
        assert first.encode() == second.encode()
        assert run(argv[:-4] + ["43"] + argv[-4:], capsys)[1] != first

    def test_goe_protocols_share_spectra_independently_of_selection(self, capsys):
        both = rows(run(["goe", "--lambda", "10", "-N", "8", "--seed", "7", "--m", "20"], capsys)[1])
        alone = rows(run(["goe", "--lambda", "10", "-N", "8", "--seed", "7", "--m", "20",
                          "--protocol", "goe-spacing"], capsys)[1])
        assert both[1] == alone[0]

    def test_file_and_sidecar(self, capsys, tmp_path):
        out = tmp_path / "benchmark.json"
        code, stdout, _ = run(["coherent", "--beta", "1e-8", "--beta-f", "10", "-N", "3",
                               "--format", "json", "-o", str(out)], capsys)
        assert code == 0 and stdout == ""
        data = json.loads(out.read_text())
        assert data[0]["lambda"] == pytest.approx(1e9)
        meta = json.loads((tmp_path / "benchmark.json.meta.json").read_text())
        assert meta["version"] == __version__ and meta["rng"] == "numpy.random.PCG64"
        assert meta["config"]["lam"] == pytest.approx(1e9) and meta["config"]["N"] == [3]

    def test_env_seed_is_recorded(self, capsys, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "17")
        _, out, _ = run(["goe", "--lambda", "10", "-N", "4", "--m", "3"], capsys)
        assert {r["seed"] for r in rows(out)} == {"17"}


class TestModes:
    def test_incoherent(self, capsys):
        code, out, _ = run(["incoherent", "--lambda", "10", "-N", "200", "--gamma", "1"], capsys)
        (r,) = rows(out)
        assert code == 0 and abs(float(r["residual"])) < 1e-10
        assert float(r["dissipation_nats"]) == pytest.approx(float(r["relent_sum"]), rel=1e-10)

    def test_geodesic_qutrit(self, capsys):
        code, out, _ = run(["geodesic", "--lambda", "2", "--levels", "0,1,2", "-N", "50"], capsys)
        (r,) = rows(out)
        assert code == 0 and r["gap"] == ""
        assert float(r["residual"]) > 0

    def test_correlations(self, capsys):
        code, out, _ = run(["correlations", "--seed", "5", "--trials", "200"], capsys)
        (r,) = rows(out)
        assert code == 0 and r["residual"] == "0.0" and r["N"] == "200"

    def test_optimize(self, capsys):
        code, out, _ = run(["optimize", "--lambda", "10"], capsys)
        (r,) = rows(out)
        assert code == 0 and abs(float(r["residual"])) < 1e-6

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "finite_cooling", "coherent", "--lambda", "3", "-N", "4"],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0 and res.stdout.startswith("protocol,N,")
