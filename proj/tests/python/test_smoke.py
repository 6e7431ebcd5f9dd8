import json
import math

import numpy as np
import pytest

import tfmean


def test_arithmetic_mean():
    s = tfmean.Space("euclidean:2")
    t = tfmean.Transform("power:2")
    pts = [np.array([0.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 3.0])]
    r = tfmean.estimate(s, t, pts)
    assert np.allclose(r["point"], [1.0, 1.0], atol=1e-8)
    assert r["converged"]


def test_median_of_line_is_middle_point():
    s = tfmean.Space("euclidean:1")
    r = tfmean.estimate(s, tfmean.Transform("identity"), [np.array([x]) for x in (0.0, 1.0, 10.0)])
    assert abs(r["point"][0] - 1.0) < 1e-8


def test_spd_distance_and_geodesic():
    s = tfmean.Space("spd:2")
    a = np.eye(2)
    b = np.diag([math.e, 1.0])
    assert abs(s.distance(a, b) - 1.0) < 1e-12
    mid = s.geodesic_point(a, b, 0.5)
    assert np.allclose(mid, np.diag([math.exp(0.5), 1.0]))


def test_transform_values():
    t = tfmean.Transform("pseudo-huber:1")
    assert abs(t.tau(0.0)) < 1e-15
    assert t.robustness == "contamination-robust"
    assert tfmean.Transform("identity").robustness == "median"
    assert str(tfmean.Transform("power:1.5")) == "power:1.5"


def test_sampling_is_prefix_stable():
    a = tfmean.sample("radial:halfgauss:1@euclidean:3", 10, 4)
    b = tfmean.sample("radial:halfgauss:1@euclidean:3", 20, 4)
    for x, y in zip(a, b[:10]):
        assert np.array_equal(x, y)


def test_bounds():
    assert abs(tfmean.threehalfs_bound(1, 1, 1, 100) - 6.3882) < 1e-12
    assert math.isinf(tfmean.threehalfs_bound(1, 1, math.inf, 10))
    mult, _ = tfmean.tail_bound(0.9, 0.75, 8 / 9, 1, 10)
    assert abs(mult - 6.0) < 1e-12
    with pytest.raises(tfmean.InapplicableError):
        tfmean.tail_bound(0.9, 0.5, 0.5, 1, 10)


def test_errors_map_to_python():
    with pytest.raises(tfmean.ConfigError):
        tfmean.Space("hyperbolic:2")
    with pytest.raises(tfmean.TfmError):
        tfmean.Transform("power:3")
    s = tfmean.Space("euclidean:2")
    with pytest.raises(tfmean.ShapeError):
        s.distance(np.zeros(3), np.zeros(2))


def test_run_experiment():
    cfg = {
        "kind": "rate",
        "distribution": "radial:halfgauss:1@euclidean:2",
        "transform": "power:2",
        "n_grid": [8, 16, 32],
        "replications": 40,
        "base_seed": 3,
        "threads": 1,
    }
    r = tfmean.run_experiment(json.dumps(cfg))
    assert len(r["records"]) == 3 * 40
    assert [row[0] for row in r["aggregates"]] == [8, 16, 32]
    assert r["pass"]
    again = tfmean.run_experiment(json.dumps(cfg))
    assert again["records"] == r["records"]
