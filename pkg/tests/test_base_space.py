import numpy as np
import pytest

from wasslab.base_space import (
    BaseRay,
    BusemannField,
    CustomField,
    DistanceField,
    MinField,
    base_field_from_config,
    base_geodesic_eval,
    base_negative_gradient_ray,
    eval_base_field,
    min_combine,
    ray_eval,
)
from wasslab.errors import DimensionError, DomainError, EmptyCollection, UnsupportedField


def test_geodesic_midpoint():
    assert np.allclose(base_geodesic_eval([0.0, 0.0], [2.0, 0.0], 0.5), [1.0, 0.0])


def test_geodesic_degenerate():
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(base_geodesic_eval([3.0], [3.0], t), [3.0])


def test_geodesic_affine():
    assert np.allclose(base_geodesic_eval([0.0], [4.0], 0.25), [1.0])


def test_geodesic_distance_proportionality():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = rng.uniform(-5, 5, 3)
        b = rng.uniform(-5, 5, 3)
        t = rng.uniform(0, 1)
        x = base_geodesic_eval(a, b, t)
        assert abs(np.linalg.norm(x - a) - t * np.linalg.norm(b - a)) <= 1e-12


def test_geodesic_errors():
    with pytest.raises(DimensionError):
        base_geodesic_eval([0.0], [0.0, 1.0], 0.5)
    with pytest.raises(DomainError):
        base_geodesic_eval([0.0], [1.0], 1.5)


def test_ray_eval_examples():
    r = BaseRay(np.zeros(2), np.array([1.0, 0.0]))
    assert np.allclose(ray_eval(r, 5.0), [5.0, 0.0])
    assert np.allclose(ray_eval(r, 0.0), [0.0, 0.0])
    r2 = BaseRay(np.array([1.0]), np.array([-1.0]), speed=2.0)
    assert np.allclose(ray_eval(r2, 3.0), [-5.0])
    with pytest.raises(DomainError):
        ray_eval(r, -0.1)


def test_ray_direction_renormalized_or_rejected():
    r = BaseRay(np.zeros(1), np.array([1.0 + 5e-10]))
    assert abs(np.linalg.norm(r.direction) - 1.0) <= 1e-12
    with pytest.raises(DomainError):
        BaseRay(np.zeros(1), np.array([1.1]))
    with pytest.raises(DomainError):
        BaseRay(np.zeros(1), np.array([1.0]), speed=0.0)


def test_ray_additivity_invariant():
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        v = rng.normal(size=d)
        ray = BaseRay(rng.uniform(-3, 3, d), v / np.linalg.norm(v),
                      speed=float(rng.uniform(0.5, 2.0)))
        s, t = np.sort(rng.uniform(0, 100, 2))
        gap = np.linalg.norm(ray.eval(t) - ray.eval(s)) - (t - s) * ray.speed
        assert abs(gap) <= 1e-12


def test_eval_field_examples():
    b = BusemannField(np.array([1.0, 0.0]), 0.0)
    assert eval_base_field(b, [3.0, 4.0]) == -3.0
    m = MinField((BusemannField(np.array([1.0])), BusemannField(np.array([-1.0]))))
    assert eval_base_field(m, [2.0]) == -2.0
    assert eval_base_field(BusemannField(np.array([0.0, 1.0]), 7.0), [0.0, 0.0]) == 7.0


def test_busemann_exact_lipschitz():
    rng = np.random.default_rng(2)
    b = BusemannField(np.array([0.6, 0.8]), 1.3)
    for _ in range(200):
        x, y = rng.uniform(-10, 10, (2, 2))
        assert abs(b.evaluate(x) - b.evaluate(y)) <= np.linalg.norm(x - y) + 1e-12


def test_negative_gradient_ray_examples():
    b = BusemannField(np.array([1.0, 0.0]), 0.0)
    ray = base_negative_gradient_ray(b, [0.0, 0.0])
    assert np.allclose(ray.origin, [0.0, 0.0]) and np.allclose(ray.direction, [1.0, 0.0])

    m = MinField((BusemannField(np.array([1.0])), BusemannField(np.array([-1.0]), 5.0)))
    ray = base_negative_gradient_ray(m, [0.0])
    assert np.allclose(ray.direction, [1.0])

    # tie at the min locus goes to the lowest index
    tie = MinField((BusemannField(np.array([1.0])), BusemannField(np.array([-1.0]))))
    ray = base_negative_gradient_ray(tie, [0.0])
    assert np.allclose(ray.direction, [1.0])


@pytest.mark.parametrize("T", [1.0, 10.0, 100.0])
def test_descent_ray_calibration(T):
    rng = np.random.default_rng(3)
    fields = [
        BusemannField(np.array([0.6, 0.8]), 0.2),
        MinField((BusemannField(np.array([1.0, 0.0])),
                  BusemannField(np.array([0.0, -1.0]), 0.5))),
        DistanceField(np.array([[1.0, 1.0]]), sign=-1),
    ]
    for u in fields:
        for _ in range(10):
            x = rng.uniform(-4, 4, 2)
            ray = base_negative_gradient_ray(u, x)
            assert abs((u.evaluate(ray.eval(0.0)) - u.evaluate(ray.eval(T))) - T) <= 1e-10


def test_multi_anchor_distance_field_has_no_global_ray():
    u = DistanceField(np.array([[1.0, 1.0], [-2.0, 0.0]]), sign=-1)
    with pytest.raises(UnsupportedField):
        u.negative_gradient_ray([0.9, 1.0])


def test_min_combine_basics():
    b = BusemannField(np.array([1.0]))
    assert min_combine([b]) is b
    m = min_combine([BusemannField(np.array([1.0])), BusemannField(np.array([-1.0]))])
    assert m.evaluate([0.0]) == 0.0
    with pytest.raises(EmptyCollection):
        min_combine([])


def test_min_combine_one_lipschitz_probe():
    rng = np.random.default_rng(4)
    m = min_combine([BusemannField(np.array([1.0])), BusemannField(np.array([-1.0]))])
    worst = 0.0
    for _ in range(100):
        x, y = rng.uniform(-10, 10, 2)
        if abs(x - y) < 1e-12:
            continue
        worst = max(worst, abs(m.evaluate([x]) - m.evaluate([y])) / abs(x - y))
    assert worst <= 1.0 + 1e-9


def test_min_combine_associative_exactly():
    rng = np.random.default_rng(5)
    A = BusemannField(np.array([0.6, 0.8]), 0.1)
    B = BusemannField(np.array([-0.8, 0.6]), -0.4)
    C = BusemannField(np.array([0.0, 1.0]), 0.9)
    left = min_combine([A, min_combine([B, C])])
    right = min_combine([min_combine([A, B]), C])
    for _ in range(50):
        x = rng.uniform(-6, 6, 2)
        assert left.evaluate(x) == right.evaluate(x)


def test_distance_field_rays():
    u = DistanceField(np.array([[0.0, 0.0]]), sign=-1)
    ray = u.negative_gradient_ray([3.0, 0.0])
    assert np.allclose(ray.direction, [1.0, 0.0])
    # outward distance keeps decreasing forever
    assert abs((u.evaluate(ray.eval(0.0)) - u.evaluate(ray.eval(50.0))) - 50.0) <= 1e-10
    # at the anchor itself the tie-break direction is e_1
    at_anchor = u.negative_gradient_ray([0.0, 0.0])
    assert np.allclose(at_anchor.direction, [1.0, 0.0])
    with pytest.raises(UnsupportedField):
        DistanceField(np.array([[0.0, 0.0]]), sign=1).negative_gradient_ray([3.0, 0.0])


def test_custom_field_ray_registration():
    u = CustomField(lambda p: min(0.0, -p[0]), dim=1)
    assert u.evaluate([2.0]) == -2.0
    assert u.evaluate([-3.0]) == 0.0
    with pytest.raises(UnsupportedField):
        u.negative_gradient_ray([1.0])
    with_ray = CustomField(lambda p: -p[0], dim=1,
                           ray_fn=lambda p: BaseRay(p, np.array([1.0])))
    assert np.allclose(with_ray.negative_gradient_ray([0.0]).direction, [1.0])


def test_field_from_config():
    cfg = {"variant": "min", "fields": [
        {"variant": "busemann", "direction": [1.0, 0.0], "offset": 0.0},
        {"variant": "busemann", "direction": [0.0, 1.0], "offset": 0.5},
    ]}
    u = base_field_from_config(cfg)
    assert u.evaluate([1.0, 2.0]) == -1.5  # min(-1, 0.5 - 2)
    d = base_field_from_config({"variant": "distance", "points": [[0.0]], "sign": -1})
    assert d.evaluate([2.0]) == -2.0
    with pytest.raises(DomainError):
        base_field_from_config({"variant": "nope"})
