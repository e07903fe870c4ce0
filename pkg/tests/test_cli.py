import csv
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from qeq import cli


def _run(argv, env=None):
    out = io.StringIO()
    code = cli.run(argv, stdout=out, env={} if env is None else env)
    return code, out.getvalue()


def _json(argv, schema=None, env=None):
    code, text = _run(argv, env)
    assert code == 0, text
    data = json.loads(text)
    if schema:
        jsonschema.validate(data, cli.load_schema(schema))
    return data, text


def test_help(capsys):
    assert _run(["--help"])[0] == 0
    assert "SUBCOMMAND" in capsys.readouterr().out
    assert _run(["gamma", "--help"])[0] == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qeq", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "convergents" in res.stdout


def test_theta_out_of_range(capsys):
    code, _ = _run(["gamma", "--x", "1e5", "--theta", "0.02", "--eta", "0.01", "--alpha", "sqrt:2"])
    assert code == 1
    err = capsys.readouterr().err
    assert "delta=" in err and "1/108" in err


@pytest.mark.parametrize(
    "argv, code",
    [
        (["gamma", "--x", "1e5", "--eta", "0.01", "--alpha", "sqrt:2"], 1),
        (["bump", "--delta", "2", "--x", "1e6"], 1),
        (["nonsense"], 1),
        ([], 1),
        (["convergents", "--alpha", "sqrt:4", "--qmax", "10"], 1),
        (["convergents", "--alpha", "dec:1.4142", "--qmax", "10"], 2),
        (["convergents", "--alpha", "sqrt:2", "--qmax", "10", "--precision", "64"], 0),
        (["gamma", "--x", "1e8", "--theta", "0.005", "--eta", "0.01", "--alpha", "sqrt:2"], 3),
        (["hl", "--a", "1", "--b", "3", "--c", "2", "--x", "1000"], 1),
        (["expsum", "--x", "65536", "--alpha", "phi", "--threads", "0"], 1),
    ],
)
def test_exit_codes(argv, code):
    assert _run(argv)[0] == code


def test_gamma_smoke():
    data, _ = _json(["gamma", "--x", "1e5", "--theta", "0.005", "--eta", "0.01", "--alpha", "sqrt:2", "--y", "3"], "gamma")
    assert data["gamma"] > 0 and data["identity_residual"] <= data["residual_bound"]
    data, _ = _json(["gamma", "--x", "2e4", "--theta", "0.005", "--eta", "0.01", "--alpha", "phi", "--no-fourier"], "gamma")
    assert data["gamma1"] is None


def test_all_json_schemas():
    _json(["bump", "--delta", "0.05", "--x", "1e4", "--check-tail"], "bump")
    _json(["expsum", "--x", "65536", "--alpha", "sqrt:2", "--power", "2"], "expsum")
    _json(["expsum", "--x", "65536", "--alpha", "sqrt:2", "--q-index", "0"], "expsum")
    _json(["vaughan", "--x", "5000", "--alpha", "sqrt:2"], "vaughan")
    _json(["hl", "--a", "1", "--b", "0", "--c", "1", "--x", "1e5", "--pcut", "1e4"], "hl")


def test_convergents_csv():
    code, text = _run(["convergents", "--alpha", "sqrt:2", "--qmax", "30"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [(r["a"], r["q"]) for r in rows] == [("1", "1"), ("3", "2"), ("7", "5"), ("17", "12"), ("41", "29")]
    assert all(0 < float(r["scaled_error"]) < 1 for r in rows)
    assert "\r" not in text


def test_equidist_csv():
    code, text = _run(["equidist", "--x", "1000", "--alpha", "1/2", "--bins", "4"])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [int(r["count"]) for r in rows] == [1, 0, 167, 0]
    assert rows[2]["lo"] == "0.5"


def test_load_config(tmp_path):
    empty = tmp_path / "empty.cfg"
    empty.write_text("")
    assert cli.load_config(empty) == {}
    cfg = tmp_path / "a.cfg"
    cfg.write_text("# comment\ntheta = 0.005\n\nmax-witnesses = 3\n")
    assert cli.load_config(cfg) == {"theta": "0.005", "max_witnesses": "3"}
    dup = tmp_path / "dup.cfg"
    dup.write_text("theta = 0.005\ntheta = 0.004\n")
    with pytest.raises(cli.InvalidInput, match="theta"):
        cli.load_config(dup)
    bad = tmp_path / "bad.cfg"
    bad.write_text("theta = 0.005\njunk\n")
    with pytest.raises(cli.InvalidInput, match=":2:"):
        cli.load_config(bad)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("x = 20000\ntheta = 0.005\neta = 0.01\nalpha = sqrt:2\nfourier = false\n")
    args = cli.parse_args(["gamma", "--config", str(cfg), "--theta", "0.004"], env={})
    assert args.theta == 0.004 and args.x == 20000 and args.fourier is False
    args = cli.parse_args(["gamma", "--config", str(cfg)], env={"QEQ_THREADS": "3", "QEQ_PRECISION": "192"})
    assert args.theta == 0.005 and args.threads == 3 and args.precision == 192
    args = cli.parse_args(["gamma", "--config", str(cfg), "--threads", "2"], env={"QEQ_THREADS": "3"})
    assert args.threads == 2
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("qmax = 3\n")
    assert _run(["gamma", "--config", str(unknown)])[0] == 1


def test_manifest_replay(tmp_path):
    man = tmp_path / "m.json"
    argv = ["gamma", "--x", "3e4", "--theta", "0.006", "--eta", "0.02", "--alpha", "sqrt:3", "--beta", "1/3"]
    _, first = _json(argv + ["--manifest", str(man), "--threads", "2"], "gamma")
    manifest = json.loads(man.read_text())
    jsonschema.validate(manifest, cli.load_schema("manifest"))
    assert manifest["threads"] == 2 and manifest["derived"]["K"] > 0
    _, again = _json(cli.manifest_argv(manifest))
    assert again == first
    assert "threads" not in json.loads(first) and "wall_time" not in json.loads(first)


def test_threads_do_not_change_bytes():
    argv = ["vaughan", "--x", "5000", "--alpha", "phi"]
    assert _json(argv + ["--threads", "1"])[1] == _json(argv + ["--threads", "3"])[1]


def test_sieve_cache_flag(tmp_path):
    cache = tmp_path / "primes.qesv"
    argv = ["equidist", "--x", "5000", "--alpha", "sqrt:2", "--sieve-cache", str(cache)]
    c1, t1 = _run(argv)
    assert c1 == 0 and cache.exists()
    assert _run(argv)[1] == t1
