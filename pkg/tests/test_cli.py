import csv
import io
import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from jsonschema import Draft202012Validator

from distcomp.cli import main
from distcomp.codes.moddev import COLUMNS
from distcomp.io import schema

DATA = Path(__file__).resolve().parents[1] / "data"


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_classify_counterexample():
    res = run("classify", "--function", DATA / "hk_counterexample.json")
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    Draft202012Validator(schema("classify")).validate(doc)
    assert doc["hk"] is True and doc["totally_sensitive"] is False
    assert doc["counterexample"]["value"] == [0, 3]


def test_check_source_and_region():
    res = run("check-source", "--source", DATA / "iid_positive.json", "--n", 3)
    assert res.exit_code == 0
    assert json.loads(res.output)["block_length_checked"] == 3
    res = run("region", "--source", DATA / "iid_positive.json", "--format", "csv", "--r", 0.3)
    assert res.exit_code == 0
    assert res.output.splitlines()[0] == "region,vertex,r1,r2"


def test_simulate_and_verify_lemma_csv():
    args = ("--source", DATA / "iid_positive.json", "--function", DATA / "and.json", "--n", 3, "--seed", 1)
    res = run("simulate", *args, "--trials", 500, "--rate", 0.7)
    assert res.exit_code == 0, res.output
    rows = rows_of(res.output)
    assert [r["code"] for r in rows] == ["random MAP", "random-binning SW", "identity"]
    assert "exact_error" in rows[0] and "ci_high" in rows[0]
    res = run("verify-lemma", *args)
    assert res.exit_code == 0, res.output
    bounds = {r["bound"] for r in rows_of(res.output)}
    assert {"core1", "pairing", "binning"} <= bounds


def test_reruns_are_byte_identical(tmp_path):
    args = ["moddev", "--source", DATA / "iid_positive.json", "--n", 3, "--n", 4, "--seed", 5]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "--out", a).exit_code == 0
    assert run(*args, "--out", b).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == ",".join(COLUMNS)


def test_theorem9_demo_small():
    res = run("theorem9-demo", "--n", 30, "--trials", 200, "--seed", 1, "--format", "json")
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    Draft202012Validator(schema("theorem9_demo")).validate(doc)
    assert doc["gap"] == pytest.approx(0.7)


def test_refusal_exits_two():
    res = run("verify-lemma", "--source", DATA / "iid_nonsmooth.json", "--function", DATA / "and.json",
              "--n", 2, "--seed", 0)
    assert res.exit_code == 2
    assert "refused: " in res.output and "smoothness" in res.output
    res = run("theorem9-demo", "--epsilon", 0.05, "--n", 20, "--trials", 10, "--seed", 0)
    assert res.exit_code == 2
    assert "small anti-diagonal noise" in res.output


def test_input_errors_exit_one(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("check-source", "--source", bad).exit_code == 1
    assert run("check-source", "--source", tmp_path / "missing.json").exit_code == 1
    assert run("check-source").exit_code == 1
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"kind": "iid", "joint": [[0.5, 0.6], [0, 0]]}')
    assert run("region", "--source", wrong).exit_code == 1
    assert run("classify", "--function", DATA / "and.json", "--n", 0).exit_code == 1


def test_seed_is_required():
    res = run("simulate", "--source", DATA / "iid_positive.json")
    assert res.exit_code == 2 and "--seed" in res.output
