# SPDX-License-Identifier: Apache-2.0
import json
from pathlib import Path

import jsonschema
import pytest

import ndater

SCHEMA = json.loads((Path(__file__).resolve().parents[2] / "schemas" / "annotation.schema.json").read_text())


def test_synthetic_records_match_schema_and_rules():
    for record, derivation in ndater.generate_synthetic(n_docs=50, seed=3, difficulty="hard"):
        doc = json.loads(record)
        jsonschema.validate(doc, SCHEMA)
        assert ndater.canonicalize(record) == record
        assert ndater.derive_year(record, 1991, 2003) == doc["gold_year"]
        assert derivation.endswith(str(doc["gold_year"]))


def test_offset_example():
    record = ndater.offset_document(1995, 4, "AFTER")
    assert json.loads(record)["gold_year"] == 1999
    assert ndater.derive_year(record, 1980, 2020) == 1999
    assert ndater.has_year_mention(record)


def test_invalid_records_raise():
    record = json.loads(ndater.offset_document(1995, 4, "AFTER"))
    record["surprise"] = 1
    with pytest.raises(ndater.ValidationError, match="surprise"):
        ndater.canonicalize(json.dumps(record))
    with pytest.raises(ValueError):
        ndater.canonicalize("{not json")


def test_score_fixture():
    r = ndater.score([2000, 2002, 2001], [2000, 2001, 2001], [True, False, True], 2000, 2002)
    assert r["accuracy"] == pytest.approx(2 / 3)
    assert r["mean_abs_deviation_years"] == pytest.approx(1 / 3)
    assert r["accuracy_without_time_mention"] == 0.0
    with pytest.raises(ndater.DimensionError):
        ndater.score([2000], [2000, 2001], [True], 2000, 2002)


def test_gradcheck_small():
    assert ndater.gradcheck(dims=4) < 1e-4


def test_cli_train_and_predict(tmp_path):
    corpus = tmp_path / "corpus"
    code, _, err = ndater.run_cli(["gen-synth", "--out", str(corpus), "--n-docs", "40", "--seed", "2"])
    assert code == 0, err
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"model": {"dims": {"embedding": 8, "lstm_hidden": 8, "syntactic": 8, "temporal": 8}}}))
    code, _, err = ndater.run_cli(
        ["train", "--corpus", str(corpus), "--out", str(tmp_path / "m"), "--config", str(config), "--epochs", "2"]
    )
    assert code == 0, err
    model = ndater.Model(str(tmp_path / "m" / "model.ckpt"))
    assert model.precision == 32
    out = model.predict(ndater.offset_document(1995, 4, "AFTER"))
    assert 1995 <= out["predicted_year"] <= 1999
    assert sum(out["probs"]) == pytest.approx(1.0, abs=1e-6)
    assert out["gold_year"] == 1999


def test_cli_usage_error():
    code, _, _ = ndater.run_cli(["no-such-command"])
    assert code == 2
