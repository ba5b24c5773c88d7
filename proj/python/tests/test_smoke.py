import math

import numpy as np
import pytest

import ecladts


def test_generate_shapes():
    d = ecladts.generate("synthetic-lm", n=30, w=96, seed=1)
    assert len(d) == 30
    assert d.x.shape == (30, 2, 96)
    assert d.masks.shape == (30, 2, 2 * 96)
    assert set(d.labels) <= {0, 1, 2}
    assert d.fingerprint() == ecladts.generate("synthetic-lm", n=30, w=96, seed=1).fingerprint()


def test_unknown_generator():
    with pytest.raises(ValueError):
        ecladts.generate("synthetic-x", n=10, w=96)


def test_wrapper_examples():
    assert ecladts.wrapper_g([1.0, 0.0]) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert ecladts.wrapper_g([3.0, 1.0, 1.0]) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ValueError):
        ecladts.wrapper_g([1.0])


def test_sample_dst():
    a = [1] + [0] * 9
    b = [0] * 5 + [1] + [0] * 4
    assert ecladts.sample_dst(a, b, 1, 10) == pytest.approx(0.5, abs=1e-12)
    assert ecladts.sample_dst(a, a, 1, 10) == 0.0


def test_model_and_gradients():
    m = ecladts.Model.build("tiny-cnn", 1, 96, 2, seed=3)
    x = np.random.default_rng(0).normal(size=(2, 1, 96))
    y = m.logits(x)
    assert y.shape == (2, 2)
    g = ecladts.input_gradients(m, x)
    assert g.shape == x.shape
    np.testing.assert_array_equal(ecladts.input_gradients(m, x, sign=-1.0), -g)
    assert m.receptive_field("block2") == 29


def test_pipeline(tmp_path):
    d = ecladts.generate("synthetic-l2", n=64, w=96, seed=0)
    m = ecladts.Model.build("tiny-cnn", 1, 96, 2, seed=0)
    report = ecladts.train(m, d, {"lr": 1e-3, "max_epochs": 2, "seed": 0})
    assert len(report["epochs"]) == 2

    path = tmp_path / "model.bin"
    m.save(path)
    again = ecladts.Model.load(path)
    np.testing.assert_array_equal(again.logits(d.x[:4]), m.logits(d.x[:4]))

    concepts = ecladts.extract(m, d, "eclad-ts", n_concepts=3, seed=0, max_batches=50)
    assert concepts.masks.shape == (64, concepts.n_c, 96)
    assert np.all(concepts.masks.sum(axis=1) == 1)
    assert np.max(np.abs(concepts.importance)) == 1.0

    alignment = ecladts.validate(concepts, d)
    assert alignment["rc"] <= 0.0
    assert alignment["n_c"] == concepts.n_c

    concepts.save(tmp_path / "concepts.json")
    back = ecladts.load_concept_report(tmp_path / "concepts.json")
    np.testing.assert_array_equal(back.importance, concepts.importance)

    mv = ecladts.extract(m, d, "multivision", n_concepts=3, seed=0, max_batches=50)
    assert mv.method == "multivision"


def test_missing_inputs(tmp_path):
    with pytest.raises(OSError):
        ecladts.load_dataset(tmp_path / "nope")
