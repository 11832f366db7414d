import csv
import io
import json
import math
import subprocess
import sys

import pytest

from dirca.cli import ConfigError, main, parse_config

ENTROPY = ["entropy", "--rule", "a=2;coeffs=1,0,1", "--M", "1", "--seq", "syndetic:gap=1,len=6,n=0"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_entropy_plan(capsys):
    plan = parse_config(ENTROPY)
    assert plan.subcommand == "entropy" and plan["M"] == 1 and plan["seed"] == 0
    code, out, _ = run(ENTROPY, capsys)
    assert code == 0
    table = rows(out)
    assert [int(r["l"]) for r in table] == list(range(7))
    for r in table:
        l = int(r["l"])
        assert float(r["H_nats"]) == pytest.approx((2 * l + 3) * math.log(2), abs=1e-12)
        assert r["uniform"] == "true"


def test_global_flags_either_side(capsys):
    a = parse_config(["--seed", "4", "binom", "--nmax", "10"])
    b = parse_config(["binom", "--seed", "4", "--nmax", "10"])
    assert a == b and a["seed"] == 4


@pytest.mark.parametrize("argv", [
    ["--foo", "selftest"],
    ["entropy", "--foo", "1"],
    ["--budget", "1000", "selftest"],
    ["entropy", "--rule", "a=2;coeffs=0,0,0"],
    ["entropy", "--seq", "spiral"],
    ["mixing", "--B", "[0:]"],
    ["mixing", "--b", "0"],
    ["ergodic", "--direction", "1"],
    ["binom", "--k", "1"],
    [],
])
def test_config_errors_exit_1(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1 and "config error" in err


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "plan.ini"
    cfg.write_text("[global]\nseed=3\nformat=json\n[binom]\nnmax=40\nseeds=2\nk=3\n")
    plan = parse_config(["--config", str(cfg), "binom", "--seeds", "1"])
    assert (plan["seed"], plan["n_max"], plan["seeds"], plan["k"]) == (3, 40, 1, 3)
    bad = tmp_path / "bad.ini"
    bad.write_text("[binom]\nfrobnicate=1\n")
    code, _, err = run(["--config", str(bad), "binom"], capsys)
    assert code == 1 and "frobnicate" in err
    bad.write_text("[plot]\nx=1\n")
    assert run(["--config", str(bad), "binom"], capsys)[0] == 1


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("DIRCA_SEED", "99")
    assert parse_config(["binom"])["seed"] == 99
    assert parse_config(["--seed", "1", "binom"])["seed"] == 1
    monkeypatch.setenv("DIRCA_SEED", "x")
    with pytest.raises(ConfigError):
        parse_config(["binom"])


def test_budget_exit_2(capsys):
    code, _, err = run(["--budget", "1024"] + ENTROPY, capsys)
    assert code == 2 and "budget" in err


def test_invariant_exit_3(capsys):
    argv = ["entropy", "--rule", "a=4;coeffs=0,1,2", "--seq", "explicit:(1,0)", "--check-atoms"]
    code, out, err = run(argv, capsys)
    assert code == 3 and "atom_structure" in err
    assert rows(out)  # the report is still written


def test_io_exit_4(tmp_path, capsys):
    code, _, err = run(["--out", str(tmp_path / "missing" / "x.csv"), "mixing", "--kmax", "1"], capsys)
    assert code == 4


def test_json_schema_and_determinism(tmp_path, capsys):
    path = tmp_path / "a.json"
    runs = []
    for _ in range(2):
        assert main(["--format", "json", "--out", str(path), "--seed", "5",
                     "binom", "--k", "3", "--nmax", "300", "--seeds", "4"]) == 0
        runs.append(path.read_bytes())
    assert runs[0] == runs[1]
    doc = json.loads(runs[0])
    assert set(doc) == {"plan", "records", "flags"}
    assert doc["plan"]["seed"] == 5 and doc["plan"]["subcommand"] == "binom"
    assert len(doc["records"]) == 4
    assert set(doc["records"][0]) == {"k", "N", "variant", "n_max", "seed", "freq_0", "freq_1",
                                      "freq_2", "max_dev"}


def test_mixing_csv(capsys):
    code, out, _ = run(["mixing", "--kmax", "3"], capsys)
    assert code == 0
    table = rows(out)
    assert list(table[0])[:4] == ["k", "cone_size", "D_k", "exact"]
    assert table[0]["D_k_rational"] == "5/48"
    assert table[0]["D_k"] == format(5 / 48, ".17g")


def test_mixing_independence(capsys):
    code, out, _ = run(["mixing", "--mode", "independence", "--M", "1", "--N", "1", "--nmax", "4"],
                       capsys)
    assert code == 0
    table = rows(out)
    assert all(r["passed"] == "true" for r in table if r["boundary"] == "false")


def test_ergodic_csv(capsys):
    code, out, _ = run(["ergodic", "--N", "2000", "--seeds", "3"], capsys)
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(["ergodic", "--N", "2000", "--seeds", "2", "--orbits"], capsys)
    table = rows(out)
    assert list(table[0]) == ["seed", "t", "average"] and table[-1]["t"] == "2000"


def test_binom_dump_and_strict(capsys):
    code, out, _ = run(["binom", "--nmax", "20", "--seeds", "1", "--dump"], capsys)
    assert code == 0 and [r["n"] for r in rows(out)] == [str(n) for n in range(1, 21)]
    # 20 terms cannot meet a 0.01 tolerance: recorded, and fatal only under --strict
    assert run(["binom", "--nmax", "20", "--seeds", "3"], capsys)[0] == 0
    assert run(["--strict", "binom", "--nmax", "20", "--seeds", "3"], capsys)[0] == 3


def test_selftest(capsys):
    code, out, _ = run(["selftest"], capsys)
    assert code == 0
    assert all(r["passed"] == "true" for r in rows(out))


def test_console_script_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dirca.cli", "mixing", "--kmax", "1"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.splitlines()[1].startswith("1,3,")
