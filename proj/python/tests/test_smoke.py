import math

import pytest

import ebm

SMALL = {
    "objective": "poisson_deviance",
    "outer_bags": 2,
    "max_rounds": 300,
    "learning_rate": 0.05,
    "smoothing_rounds": 20,
    "interactions": 0,
}


@pytest.fixture(scope="module")
def fitted():
    data, true_score = ebm.synth("frequency", 4000, seed=3)
    return data, true_score, ebm.train(data, SMALL, threads=1)


def test_deviance_values():
    assert ebm.deviance("poisson_deviance", [2.0], [1.0]) == pytest.approx(2 * (2 * math.log(2) - 1))
    assert ebm.deviance("gamma_deviance", [2.0], [1.0]) == pytest.approx(2 * (1 - math.log(2)))
    assert ebm.pseudo_residuals("poisson_deviance", [3.0], [0.0]) == [2.0]


def test_invalid_target_raises():
    with pytest.raises(ValueError):
        ebm.deviance("gamma_deviance", [0.0], [1.0])


def test_metrics():
    assert ebm.gini_norm([1, 2, 3, 4, 5], [0.1, 0.2, 0.3, 0.4, 0.5]) == pytest.approx(1.0)
    assert ebm.edr("gamma_deviance", [1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)
    thetas, s = ebm.murphy_curve([1.0, 2.0], [1.5, 1.5], [1.25, 1.75])
    assert thetas == [1.25, 1.75]
    assert len(s) == 2


def test_dataset_from_columns():
    data = ebm.Dataset([("x", [1.0, 2.0, 3.0]), ("c", ["a", "b", "a"])], [1.0, 0.0, 2.0], [1.0, 0.5, 1.0])
    assert data.n_rows == 3
    assert data.feature_names == ["x", "c"]
    assert data.column("c") == ["a", "b", "a"]
    assert data.exposure == [1.0, 0.5, 1.0]


def test_train_predict_and_explain(fitted):
    data, _, model = fitted
    assert model.objective == "poisson_deviance"
    pred = model.predict(data)
    assert len(pred) == data.n_rows
    assert all(p > 0 for p in pred)
    scores = model.predict_scores(data)
    local = model.local_explain(data, 7)
    total = local["intercept"] + sum(score for _, score in local["terms"])
    assert total == pytest.approx(scores[7], abs=1e-12)
    assert local["prediction"] == pytest.approx(math.exp(scores[7]))
    importance = model.term_importance(data)
    assert set(importance) == set(model.term_names)


def test_model_beats_intercept(fitted):
    data, _, model = fitted
    y = data.target
    pred = [p * e for p, e in zip(model.predict(data), data.exposure)]
    assert ebm.edr("poisson_deviance", y, pred) > 0.0


def test_save_load_round_trip(fitted, tmp_path):
    data, _, model = fitted
    path = str(tmp_path / "model.json")
    model.save(path)
    again = ebm.load_model(path)
    assert again.predict(data) == model.predict(data)
    assert again.to_json() == model.to_json()


def test_pdp_shapes(fitted):
    data, _, model = fitted
    grid, pd = model.pdp(data, "power", 10)
    assert len(grid) == len(pd) == 10
    labels, pd_cat = model.pdp(data, data.feature_names[-1])
    assert len(labels) == len(pd_cat)


def test_default_config_round_trips():
    cfg = ebm.default_config()
    assert cfg["outer_bags"] == 14
    assert cfg["learning_rate"] == 0.01
