import json
import math

import numpy as np
import pytest

import pmussl


def test_protocol_sizes():
    p = pmussl.protocol_sizes(1827, 10, 24, 100)
    assert (p["n_T"], p["n_V"], p["n_U"], p["n_S"]) == (1644, 183, 1620, 18)


def test_estimate_modes_recovers_a_damped_cosine():
    Ts = 1 / 30
    t = np.arange(300) * Ts
    sigma, omega = -0.3, 2 * math.pi * 0.8
    Y = np.vstack([a * np.exp(sigma * t) * np.cos(omega * t + ph) for a, ph in [(1.0, 0.2), (0.5, -1.0)]])
    m = pmussl.estimate_modes(Y, Ts, p=2, detrend=False)
    assert m["sigma"][0] == pytest.approx(sigma, rel=1e-8)
    assert m["omega"][0] == pytest.approx(omega, rel=1e-8)
    # a cosine of amplitude a is a conjugate pair with |2C| = a
    assert m["magnitude"][:, 0] == pytest.approx([1.0, 0.5], rel=1e-8)


def blobs(seed, per=15):
    rng = np.random.default_rng(seed)
    centers = np.array([[0, 0], [5, 0], [0, 5], [5, 5]], dtype=float)
    X = np.vstack([c + 0.5 * rng.standard_normal((per, 2)) for c in centers])
    y = np.repeat(np.arange(1, 5), per)
    return X, y


def test_classifiers_and_engines():
    X, y = blobs(0)
    Xt, yt = blobs(1)
    for kind in ["kNN", "DT", "GB", "SVML", "SVMR"]:
        S = pmussl.fit_score(kind, {}, X, y.tolist(), Xt)
        assert S.shape == (len(yt), 4)
        assert pmussl.roc_auc_ovr(S, yt.tolist(), [1, 2, 3, 4]) > 0.95

    lab = np.arange(len(y)) % 15 < 2
    XL, yL, XU = X[lab], y[lab].tolist(), X[~lab]
    st = pmussl.self_train("kNN", {"k": 1}, XL, yL, XU, 10)
    assert len(st) == len(y)
    assert pmussl.tsvm(XL, yL, XU)[: len(yL)] == yL

    y_mixed = np.where(lab, y, -1).tolist()
    labels, F, converged = pmussl.label_spread(X, y_mixed, alpha=0.2)
    assert converged
    assert F.shape == (len(y), 4)
    assert np.mean(np.array(labels) == y) > 0.95


def test_pipeline(tmp_path):
    cfg = {
        "generator": {"m": 4, "seed": 3, "t_s": 4},
        "counts": {"LL": 12, "GL": 12, "LT": 12, "BF": 12},
        "extraction": {"p": 4, "m_prime": 2},
        "plan": {
            "n_K": 2, "n_Q": 1, "n_L": 12, "delta_U": 100, "n_R": 1,
            "B_min": 0.0, "B_max": 1.0, "master_seed": 5,
            "combinations": [["label_spreading", "kNN"], ["self_training", "DT"]],
        },
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    manifest = pmussl.generate(str(path), str(tmp_path / "events"))
    features = tmp_path / "features.csv"
    X, y, names, ids = pmussl.extract(str(manifest), str(path), out=str(features))
    assert X.shape == (48, len(names))
    assert len(ids) == 48
    assert sorted(set(y)) == [1, 2, 3, 4]

    rows = pmussl.run(str(features), str(path))
    assert {(r["engine"], r["classifier"]) for r in rows} == {("label_spreading", "kNN"), ("self_training", "DT")}
    assert all(0.0 <= r["auc"] <= 1.0 for r in rows)
    assert rows == pmussl.run(str(features), str(path))

    with pytest.raises(pmussl.ConfigError):
        pmussl.protocol_sizes(10, 1, 2, 1)


def test_bad_config_raises(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"generator": {"seed": 1}}')
    with pytest.raises(pmussl.ConfigError, match="generator.m"):
        pmussl.generate(str(path), str(tmp_path / "out"))
