import numpy as np
import pytest

from sap_rts import sen as S
from sap_rts.strategy import NEUTRAL, Strategy, enumerate_space, encode, generate_library


def reference_loss(weights, biases, x, y):
    """Plain restatement of the network and loss, kept apart from the library code."""
    h = x
    for w, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
    z = (h @ weights[-1] + biases[-1])[:, 0]
    p = 1.0 / (1.0 + np.exp(-z))
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))


def fd_max_rel_error(seed: int, hidden=(16, 16), n=12, h=1e-6) -> float:
    rng = np.random.default_rng(seed)
    p = S.init_params(hidden, seed=seed)
    x = rng.integers(0, 2, size=(n, p.input_size)).astype(float)
    y = rng.random(n)
    gw, gb = S.gradient(p, x, y)
    worst = 0.0
    for arrays, grads in ((p.weights, gw), (p.biases, gb)):
        for a, g in zip(arrays, grads):
            for idx in np.ndindex(a.shape):
                old = a[idx]
                a[idx] = old + h
                up = reference_loss(p.weights, p.biases, x, y)
                a[idx] = old - h
                down = reference_loss(p.weights, p.biases, x, y)
                a[idx] = old
                num = (up - down) / (2 * h)
                ana = g[idx]
                scale = max(abs(num), abs(ana))
                if scale > 1e-7:
                    worst = max(worst, abs(num - ana) / scale)
    return worst


@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_finite_differences(seed):
    assert fd_max_rel_error(seed, hidden=(6, 5), n=8) <= 1e-4


def test_forward_matches_predict_and_reference():
    p = S.init_params(seed=1)
    a, b = enumerate_space()[5], enumerate_space()[77]
    x = np.concatenate([encode(a), encode(b)])[None, :]
    assert S.forward(p, a, b) == pytest.approx(S.predict(p, x)[0], abs=1e-12)
    ref = 1 / (1 + np.exp(-(np.maximum(np.maximum(x @ p.weights[0] + p.biases[0], 0) @ p.weights[1]
                                       + p.biases[1], 0) @ p.weights[2] + p.biases[2])))
    assert S.forward(p, a, b) == pytest.approx(float(ref[0, 0]), rel=1e-12)


def test_sigmoid_stable():
    z = np.array([-1000.0, 0.0, 1000.0])
    assert np.allclose(S.sigmoid(z), [0.0, 0.5, 1.0])
    assert np.isfinite(S.bce_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0]))).all()


def test_shape_errors():
    p = S.init_params()
    with pytest.raises(ValueError):
        S.logits(p, np.zeros((1, 5)))
    with pytest.raises(ValueError):
        S.gradient(p, np.zeros((0, 28)), np.zeros(0))
    with pytest.raises(ValueError):
        S.SENParams([np.zeros((3, 2))], [np.zeros(2)])


def test_save_load(tmp_path):
    p = S.init_params(seed=4)
    p.save(tmp_path / "sen.json")
    q = S.SENParams.load(tmp_path / "sen.json")
    assert all(np.array_equal(a, b) for a, b in zip(p.weights, q.weights))
    assert all(np.array_equal(a, b) for a, b in zip(p.biases, q.biases))


def _synthetic(n=40, seed=0):
    """r = 1 exactly when a is aggressive and b is not."""
    lib = list(generate_library(n, seed=seed))
    recs = []
    for a in lib:
        for b in lib:
            r = a.aggression and not b.aggression
            recs.append(S.ResultRecord(a, b, float(r)))
    return S.ResultDataset(recs)


def test_training_learns_a_simple_rule():
    ds = _synthetic(20).with_split(0.2, seed=0)
    hist = S.TrainHistory()
    p = S.train(ds, S.TrainConfig(seed=0, epochs=300, hidden=(16, 16)), hist)
    assert p.all_finite()
    assert hist.val_loss[-1] < hist.val_loss[0] or min(hist.val_loss) < hist.val_loss[0]
    ev = S.evaluate(p, ds.subset("test"))
    assert ev["accuracy"] >= 0.9 and ev["n"] == len(ds.subset("test"))
    (tn, fp), (fn, tp) = ev["confusion"]
    assert tn + fp + fn + tp == ev["n"]


def test_train_config_validation():
    with pytest.raises(ValueError):
        S.TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        S.TrainConfig(hidden=())
    with pytest.raises(ValueError):
        S.train(S.ResultDataset([]))


def test_dataset_split_and_io(tmp_path):
    ds = _synthetic(10).with_split(0.2, seed=3)
    assert len(ds.subset("test")) == 20 and len(ds.subset("train")) == 80
    assert ds.with_split(0.2, seed=3).records == ds.records
    ds.save(tmp_path / "d.jsonl")
    back = S.ResultDataset.load(tmp_path / "d.jsonl")
    assert back.records == ds.records
    x, y = back.arrays()
    assert x.shape == (100, 28) and y.shape == (100,)


def test_record_rejects_bad_r():
    d = S.ResultRecord(NEUTRAL, NEUTRAL, 0.5).to_json()
    d["r"] = 1.5
    with pytest.raises(ValueError):
        S.ResultRecord.from_json(d)


def exhaustive_best(p, opp):
    best, best_v = None, -np.inf
    for s in enumerate_space():
        v = S.forward(p, s, opp)
        if v > best_v:
            best, best_v = s, v
    return best, best_v


def test_best_response_matches_exhaustive():
    p = S.init_params(seed=7)
    rng = np.random.default_rng(0)
    space = enumerate_space()
    for i in rng.choice(len(space), 5, replace=False):
        assert S.best_response(p, space[i]) == exhaustive_best(p, space[i])


def test_best_response_tie_goes_to_first():
    p = S.init_params(seed=0)
    p.weights[-1][:] = 0.0
    s, v = S.best_response(p, Strategy("high", "late", "heavy", True, "workers", "full"))
    assert s == enumerate_space()[0] and v == pytest.approx(S.sigmoid(p.biases[-1][0]))


def test_strategies_from():
    ds = _synthetic(5)
    assert len(S.strategies_from(ds.records)) == 5
