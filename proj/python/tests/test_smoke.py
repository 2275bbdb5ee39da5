import math
import os
from pathlib import Path

import numpy as np
import pytest

import qpsa

DATA = Path(os.environ.get("QPSA_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def two_state():
    return qpsa.CategoricalHmm(
        np.array([[0.7, 0.3], [0.4, 0.6]]),
        np.array([[0.9, 0.1], [0.2, 0.8]]),
        np.array([0.6, 0.4]),
    )


def test_hmm_likelihood_and_embedding():
    model = two_state()
    ll = qpsa.log_likelihood(model, [0, 1, 1])
    assert math.isclose(math.exp(ll), 0.10007, rel_tol=1e-10)
    embedded = qpsa.embed_hmm(model)
    assert qpsa.kind(embedded) == "qhmm"
    assert abs(qpsa.log_likelihood(embedded, [0, 1, 1]) - ll) < 1e-10
    assert embedded.completeness_residual() < 1e-12
    post = qpsa.posterior(model, [0, 1, 1], 2)
    assert post.sum() == pytest.approx(1.0)


def test_bad_model_raises():
    with pytest.raises(qpsa.InputError):
        qpsa.CategoricalHmm(np.eye(2), np.array([[0.5, 0.6], [0.5, 0.5]]), np.array([1.0, 0.0]))


def test_da_anchors():
    assert qpsa.da_score(0.0, 3, 2) == 1.0
    assert abs(qpsa.da_score(-3 * math.log(2), 3, 2)) < 1e-12
    assert qpsa.da_score(-math.inf, 3, 2) == -1.0


def test_end_to_end(tmp_path):
    system = qpsa.load_system(str(DATA / "reference_3event.json"))
    assert system.num_events == 3
    probable, no_probable = qpsa.build_datasets(system, seed=1)
    assert len(probable) == 4 and len(no_probable) == 12
    train_p = [r["sequence"] for r in probable if r["split"] == "train"]
    train_n = [r["sequence"] for r in no_probable if r["split"] == "train"]
    mp, losses = qpsa.train_qhmm(train_p, 6, epochs=20, seed=1)
    mn, _ = qpsa.train_qhmm(train_n, 6, epochs=20, seed=1)
    assert len(losses) == 20 * 3
    assert mp.completeness_residual() < 1e-8
    label, da_p, da_n = qpsa.classify(mp, mn, probable[0]["sequence"])
    assert label in ("probable", "no_probable")
    path = str(tmp_path / "m.json")
    qpsa.save_model(path, mp)
    again = qpsa.load_model(path)
    seq = train_p[0]
    assert qpsa.log_likelihood(again, seq) == pytest.approx(qpsa.log_likelihood(mp, seq), abs=1e-12)
    assert qpsa.sample(mp, 5, 3) == qpsa.sample(mp, 5, 3)


def test_cli_entry(tmp_path):
    code, out, _ = qpsa.run_cli(
        ["make-dataset", "--system", str(DATA / "reference_3event.json"), "--out", str(tmp_path), "--seed", "1"]
    )
    assert code == 0
    assert "probable=4" in out
    code, _, err = qpsa.run_cli(["eval", "--model", "/missing.json", "--data", "/missing.jsonl", "--out", str(tmp_path)])
    assert code == 2
    assert "missing" in err
