import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lamelab import cli
from lamelab.config import (RunConfig, ResultRecord, config_hash, parse_config, serialize, validate)
from lamelab.errors import ParseError, ValidationError

BASE = ["--tau", "0.2,1.1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# ------------------------------------------------------------------ config

def test_valid_example():
    cfg = parse_config('{"tau":[0.2,1.1],"n":["1/2","3/2"],"p":[[0,0],[0.3,0.2]]}')
    assert cfg.tau == 0.2 + 1.1j
    assert cfg.n == (Fraction(1, 2), Fraction(3, 2))
    assert cfg.p == (0j, 0.3 + 0.2j)


@pytest.mark.parametrize("doc,field", [
    ('{"tau":[0.2,0]}', "tau"),
    ('{"tau":[0.2,-1]}', "tau"),
    ('{"n":["0"]}', "n"),
    ('{"tau":[0.2,1.1],"n":["1","1"],"p":[[0.1,0],[1.1,0]]}', "p"),
    ('{"n":["1"],"p":[[0,0],[0.5,0]]}', "p"),
    ('{"tol":0}', "tol"),
    ('{"seed":-1}', "seed"),
    ('{"threads":0}', "threads"),
    ('{"format":"xml"}', "format"),
])
def test_validation_errors(doc, field):
    with pytest.raises(ValidationError) as exc:
        parse_config(doc)
    assert exc.value.field == field


def test_parse_errors():
    with pytest.raises(ParseError) as exc:
        parse_config('{\n"tau": [0.2, 1.1],\n"n": [1/2]\n}')
    assert exc.value.line == 3
    with pytest.raises(ParseError) as exc:
        parse_config('{"colour": 1}')
    assert exc.value.field == "colour"
    with pytest.raises(ParseError):
        parse_config('{"n": [true]}')


weights = st.one_of(
    st.fractions(min_value=-5, max_value=5, max_denominator=6).filter(lambda f: f != 0),
    st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False).filter(lambda z: z != 0))
cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(st.lists(weights, max_size=4), cplx, st.integers(0, 2**64 - 1), st.floats(1e-12, 1.0),
       st.sampled_from(["csv", "json"]), st.integers(1, 8))
def test_round_trip(n, c, seed, tol, fmt, threads):
    cfg = validate(RunConfig(tau=0.2 + 1.1j, n=tuple(n), c=c, seed=seed, tol=tol, format=fmt,
                             threads=threads, options={"kmax": 3}))
    back = parse_config(serialize(cfg))
    assert back == cfg
    assert serialize(back) == serialize(cfg)
    assert all(isinstance(w, Fraction) for w in back.n if isinstance(w, Fraction))


def test_hash_ignores_presentation():
    cfg = RunConfig(tau=0.2 + 1.1j, n=(Fraction(2),))
    assert config_hash(cfg) == config_hash(cfg.with_overrides(format="csv", threads=4, out="x"))
    assert config_hash(cfg) != config_hash(cfg.with_overrides(seed=1))


def test_record_counts():
    rec = ResultRecord("glc solve", "h", ["a"], [[1.5 + 2j]], expected=3, found=2, timestamp="t")
    assert rec.count_mismatch
    assert rec.to_csv() == "a\n1.5+2j\n"
    assert json.loads(rec.to_json())["counts"] == {"expected": 3, "found": 2}


# --------------------------------------------------------------------- CLI

def test_degree_vs_solve(capsys):
    code, out, _ = run(capsys, "glc", "degree", "--n", "1/2,3/2", "--format", "csv")
    assert code == 0
    degree = int(dict(line.split(",") for line in out.splitlines()[1:])["degree"])
    code, out, _ = run(capsys, "glc", "solve", *BASE, "--n", "1/2,3/2", "--p", "0,0.3+0.2i", "--c", "0.37,0.29")
    assert code == 0
    doc = json.loads(out)
    assert doc["counts"] == {"expected": degree, "found": degree} == {"expected": 4, "found": 4}


def test_count_sabotage(capsys):
    # two fiber points of this target lie 0.07 apart, so a 0.1 tolerance merges them
    code, out, err = run(capsys, "glc", "solve", *BASE, "--n", "2", "--p", "0", "--c", "0.52,0.55",
                         "--tol", "1e-1")
    assert code == 2
    assert json.loads(out)["counts"] == {"expected": 3, "found": 2}
    assert "count mismatch" in err
    code, _, _ = run(capsys, "glc", "solve", *BASE, "--n", "2", "--p", "0", "--c", "0.52,0.55")
    assert code == 0


def test_same_seed_same_bytes(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.csv"
        code, _, _ = run(capsys, "glc", "solve", *BASE, "--n", "1,1", "--p", "0,0.3+0.2i", "--c", "0.37,0.29",
                         "--seed", "7", "--format", "csv", "--out", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] and outs[0].count(b"\n") == 5


def test_thread_independence(capsys, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    args = ["glc", "solve", *BASE, "--n", "1/2,3/2", "--p", "0,0.3+0.2i", "--c", "0.37,0.29", "--seed", "3"]
    _, one, _ = run(capsys, *args, "--threads", "1")
    monkeypatch.setenv("LAMELAB_THREADS", "4")
    _, four, _ = run(capsys, *args)
    assert one == four
    assert json.loads(one)["timestamp"] == "2023-11-14T22:13:20Z"


def test_numeric_failure_exit(capsys):
    code, _, err = run(capsys, "equilibrium", "rational", "--r", "2", "--l", "1", "--x", "0")
    assert code == 3 and "numeric failure" in err


def test_usage_errors(capsys):
    assert run(capsys, "glc", "solve", "--tau", "0.2,-1", "--n", "2", "--p", "0", "--c", "0.1,0.1")[0] == 1
    assert run(capsys, "glc", "solve", "--n", "2")[0] == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["glc", "nonsense"])
    assert exc.value.code == 1


def test_config_file(capsys, tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"tau": [0.2, 1.1], "n": ["2"], "p": [[0, 0]], "c": [0.37, 0.29],
                                "format": "csv"}))
    code, out, _ = run(capsys, "glc", "solve", "--config", str(path))
    assert code == 0 and out.count("\n") == 4


@pytest.mark.parametrize("argv", [
    ["elliptic", "eval", *BASE, "--z", "0.3+0.2i"],
    ["logfree", "poly", "--ell", "2"],
    ["logfree", "hilbert", "--n", "1,1", "--m-max", "6"],
    ["bgg", "tensor", "--factors", "L:1/2,L:1/2", "--order", "4"],
    ["bgg", "ck", "--weights", "1/2,1/2,1", "--kmax", "1"],
    ["glc", "boundary", *BASE, "--n", "1/2,1/2,1/2,1/2", "--p", "0,0.5,0.1+0.55i,0.6+0.55i"],
    ["premodular", "eval", *BASE, "--n", "1/2,1/2", "--p", "0.3+0.2i,-0.3-0.2i", "--t", "0.2", "--s", "0.3"],
])
def test_commands_run(capsys, argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == " ".join(argv[:2])
    assert doc["payload"]["rows"]
