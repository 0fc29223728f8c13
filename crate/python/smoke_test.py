"""Smoke test for the hmrs Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import json
import math
import tempfile

import hmrs


def check_formulas():
    triples = [(1, 1, 4), (1, 2, 2), (1, 3, 5), (2, 1, 3), (2, 2, 5), (2, 3, 4)]
    expected = -2.0 / (math.sqrt(42) / 3 * math.sqrt(2))
    assert abs(hmrs.pearson(triples, 1, 2) - expected) < 1e-12
    assert abs(hmrs.pearson(triples, 2, 1) - expected) < 1e-12
    assert 0.0 < hmrs.cosine(triples, 1, 2) <= 1.0
    degrees = [(1, 1, 3), (1, 2, 3), (2, 1, 4), (2, 2, 2), (3, 2, 5), (4, 2, 1)]
    assert abs(hmrs.ra_weight(degrees, 1, 2) - 0.75) < 1e-12
    assert hmrs.mae([2.0, 3.0, 5.0, 1.0], [1.0, 3.0, 4.0, 3.0]) == 1.0
    try:
        hmrs.mae([1.0], [])
    except ValueError:
        pass
    else:
        raise AssertionError("mismatched lengths accepted")


def check_som():
    points = [[1.0 + 0.01 * i] * 5 for i in range(20)] + [[5.0 - 0.01 * i] * 5 for i in range(20)]
    a = hmrs.train_som(points, n_clusters=2, seed=3)
    assert a == hmrs.train_som(points, n_clusters=2, seed=3)
    centers = sorted(p[0] for p in a)
    assert centers[0] < 2.0 < 4.0 < centers[1], centers


def check_recommender():
    data = hmrs.Dataset.synthetic(n_users=120, n_movies=80, ratings_per_user=25, seed=7)
    assert data.n_users == 120 and data.n_ratings == len(data.ratings())
    with tempfile.TemporaryDirectory() as tmp:
        data.write(tmp)
        reloaded = hmrs.Dataset.load_dir(tmp)
        assert reloaded.ratings() == data.ratings()

    config = hmrs.Config({"som.epochs": 20, "mlp.epochs": 50, "seed": 5})
    model = hmrs.Recommender.train(data, config, segment="male")
    assert sum(model.cluster_sizes) == len(data.segment_users("male"))
    user = data.segment_users("male")[0]
    top = model.recommend(user, k=5)
    assert len(top) == 5
    assert all(1.0 <= value <= 5.0 for _, value, _ in top)
    assert [v for _, v, _ in top] == sorted((v for _, v, _ in top), reverse=True)
    movie, value, provenance = top[0]
    assert model.predict(user, movie) == (value, provenance)
    assert model.neighbors(user)

    guest = model.recommend(10_000, k=3, ratings=[(1, 5.0), (2, 4.0), (3, 1.0)])
    assert len(guest) == 3
    try:
        model.predict(user, 99_999)
    except KeyError:
        pass
    else:
        raise AssertionError("unknown movie accepted")
    _, provenance = model.predict(99_999, 1)
    assert provenance != "collaborative"


def check_experiment():
    data = hmrs.Dataset.synthetic(n_users=80, n_movies=60, ratings_per_user=20, seed=1)
    config = hmrs.Config({"eval.repeats": 1, "som.epochs": 10, "mlp.epochs": 20})
    report = json.loads(hmrs.run_experiment(data, config))
    assert len(report["segments"]) == 4
    assert len(report["fold_filtered_mae"]) == 5
    assert all(0.0 <= v <= 4.0 for v in report["fold_filtered_mae"])


if __name__ == "__main__":
    check_formulas()
    check_som()
    check_recommender()
    check_experiment()
    print("python smoke test: ok")
