import math

import numpy as np
import pytest

from wasslab.base_space import BaseRay, BusemannField
from wasslab.discrete_measure import (
    MeasureSetSequence,
    dirac,
    random_measure,
    validate_measure,
)
from wasslab.errors import (
    DomainError,
    EmptyCollection,
    InvalidRay,
    SequenceTooClose,
    SphereSamplingFailed,
)
from wasslab.ot_exact import brute_force_oracle, wasserstein_exact
from wasslab.scenarios import escaping_mixture
from wasslab.viscosity import lift, lifted_ray
from wasslab.wgeom import (
    WassersteinRay,
    busemann_estimate,
    cs_diagnostic,
    dirac_ray,
    displacement_path,
    dlc_limit,
    path_eval,
    sphere_sample,
    wasserstein_ray,
)


def test_dirac_transport_path():
    path = displacement_path(dirac([0.0]), dirac([4.0]), 2.0)
    mid = path.eval(2.0)
    assert mid.n_atoms == 1 and abs(mid.support[0, 0] - 2.0) <= 1e-12


def test_path_endpoints():
    mu = validate_measure([[0.0], [2.0]], [0.5, 0.5])
    nu = validate_measure([[1.0], [3.0]], [0.5, 0.5])
    path = displacement_path(mu, nu, 2.0, check=True)
    assert wasserstein_exact(path.eval(0.0), mu, 2.0).value <= 1e-10
    assert wasserstein_exact(path.eval(path.length), nu, 2.0).value <= 1e-10


def test_monotone_midpoint():
    mu = validate_measure([[0.0], [2.0]], [0.5, 0.5])
    nu = validate_measure([[1.0], [3.0]], [0.5, 0.5])
    path = displacement_path(mu, nu, 2.0)
    mid = path.eval(path.length / 2.0)
    assert np.allclose(mid.support[:, 0], [0.5, 2.5])
    assert np.allclose(mid.weights, [0.5, 0.5])


def test_geodesic_property_random():
    rng = np.random.default_rng(0)
    for k in range(20):
        p = (2.0, 3.0)[k % 2]
        d = int(rng.integers(1, 4))
        path = displacement_path(random_measure(rng, 6, d),
                                 random_measure(rng, 6, d), p)
        for _ in range(10):
            s, t = np.sort(rng.uniform(0.0, path.length, 2))
            dist = wasserstein_exact(path.eval(s), path.eval(t), p).value
            assert abs(dist - (t - s)) <= 1e-8


def test_path_domain_and_flags():
    mu = validate_measure([[0.0], [2.0]], [0.5, 0.5])
    nu = validate_measure([[1.0], [3.0]], [0.5, 0.5])
    path = displacement_path(mu, nu, 2.0)
    with pytest.raises(DomainError):
        path.eval(-0.5)
    with pytest.raises(DomainError):
        path.eval(path.length + 1.0)
    with pytest.raises(DomainError):
        displacement_path(mu, nu, 0.5)
    assert displacement_path(mu, nu, 1.0).nonunique
    degen = displacement_path(mu, mu, 2.0)
    assert degen.degenerate
    assert degen.eval(0.0) is mu
    with pytest.raises(DomainError):
        degen.eval(0.5)


def test_wasserstein_ray_construction_checks():
    base = validate_measure([[0.0], [1.0]], [0.5, 0.5])
    good = wasserstein_ray(base, (BaseRay(np.array([0.0]), np.array([1.0])),
                                  BaseRay(np.array([1.0]), np.array([1.0]))), 2.0)
    assert wasserstein_exact(good.eval(0.0), good.eval(3.0), 2.0).value == pytest.approx(3.0, abs=1e-10)
    # atoms moving toward each other are not a unit-speed ray
    with pytest.raises(InvalidRay):
        wasserstein_ray(base, (BaseRay(np.array([0.0]), np.array([1.0])),
                               BaseRay(np.array([1.0]), np.array([-1.0]))), 2.0)
    with pytest.raises(InvalidRay):
        WassersteinRay(base, (BaseRay(np.array([0.0]), np.array([1.0])),
                              BaseRay(np.array([1.0]), np.array([1.0]), speed=2.0)), 2.0)


def test_busemann_own_ray_is_zero():
    omega = validate_measure([[0.0, 0.0], [2.0, 1.0]], [0.4, 0.6])
    U = lift(BusemannField(np.array([0.6, 0.8])), 2.0)
    ray = lifted_ray(U, omega)
    est = busemann_estimate(ray, omega, tol=1e-6, t_max=1e4)
    assert abs(est.value) <= 1e-6
    assert est.converged


def test_busemann_dirac_direction_closed_form():
    v = np.array([0.28, 0.96])
    ray = dirac_ray([0.0, 0.0], v, 2.0)
    rng = np.random.default_rng(1)
    for _ in range(5):
        s0 = rng.uniform(-2.0, 2.0)
        pts = s0 * v + rng.uniform(-0.03, 0.03, size=(3, 2))
        w = rng.random(3) + 0.1
        omega = validate_measure(pts, w / w.sum())
        est = busemann_estimate(ray, omega, tol=1e-9, t_max=1e4)
        closed = -float(np.dot(omega.weights, omega.support @ v))
        assert abs(est.value - closed) <= 1e-6


def test_busemann_of_translating_ray_matches_lifted_gap():
    # a ray translating every atom along v has horizon value equal to the
    # lifted linear field gap between omega and the ray start; tight spreads
    # keep the 1/(2t) truncation tail under the 1e-6 budget
    v = np.array([1.0, 0.0])
    U = lift(BusemannField(v), 2.0)
    start = validate_measure([[0.0, 0.02], [0.05, -0.01]], [0.5, 0.5])
    omega = validate_measure([[0.4, 0.01], [0.42, 0.03]], [0.3, 0.7])
    ray = lifted_ray(U, start)
    est = busemann_estimate(ray, omega, tol=1e-9, t_max=2.0**16)
    closed = U.evaluate(omega) - U.evaluate(start)
    assert abs(est.value - closed) <= 1e-6


def test_busemann_on_ray_point():
    omega = validate_measure([[0.0, 0.0], [1.0, 2.0]], [0.5, 0.5])
    U = lift(BusemannField(np.array([1.0, 0.0])), 2.0)
    ray = lifted_ray(U, omega)
    s = 3.0
    est = busemann_estimate(ray, ray.eval(s), tol=1e-6, t_max=1e4)
    assert abs(est.value - (-s)) <= 1e-6


def test_busemann_trace_monotone_and_errors():
    ray = dirac_ray([0.0], [1.0], 2.0)
    omega = validate_measure([[0.0], [5.0]], [0.5, 0.5])
    est = busemann_estimate(ray, omega, tol=1e-9, t_max=1e4)
    gs = [g for _, g in est.samples]
    assert all(gs[k + 1] <= gs[k] + 1e-9 for k in range(len(gs) - 1))
    with pytest.raises(DomainError):
        busemann_estimate(ray, omega, tol=0.0)
    with pytest.raises(DomainError):
        busemann_estimate(ray, omega, t_max=0.5)


def test_sphere_sample_dirac_translation():
    samples = sphere_sample(dirac([0.0, 0.0]), 1.0, 2.0, budget=3, rng=0)
    for cand, cert in samples:
        assert 0.9 <= cert <= 1.1
    translated = [c for c, cert in samples if abs(cert - 1.0) <= 1e-10]
    assert translated, "rigid translation must certify exactly at the radius"


def test_sphere_sample_translation_always_exact():
    rng = np.random.default_rng(2)
    omega = random_measure(rng, 5, 2)
    samples = sphere_sample(omega, 0.7, 2.0, budget=6, rng=rng,
                            strategies=("translate",))
    assert len(samples) == 6
    for _, cert in samples:
        assert abs(cert - 0.7) <= 1e-10


def test_single_atom_shift_certificate():
    # moving the atom at 4 by +2 certifies sqrt(1/2 * 4) = sqrt(2) while the
    # identity pairing stays optimal
    omega = validate_measure([[0.0], [4.0]], [0.5, 0.5])
    moved = validate_measure([[0.0], [6.0]], [0.5, 0.5])
    cert = brute_force_oracle(omega, moved, 2.0).value
    assert abs(cert - math.sqrt(2.0)) <= 1e-12
    samples = sphere_sample(omega, math.sqrt(2.0), 2.0, budget=6, rng=3,
                            strategies=("atom",))
    for _, c in samples:
        assert 0.9 * math.sqrt(2.0) <= c <= 1.1 * math.sqrt(2.0)


def test_sphere_sample_failure_is_reported():
    omega = dirac([0.0])
    near = dirac([0.05])
    with pytest.raises(SphereSamplingFailed):
        sphere_sample(omega, 1.0, 2.0, budget=2, rng=0,
                      strategies=("path",), dictionary=[near])
    with pytest.raises(DomainError):
        sphere_sample(omega, -1.0, 2.0)


def test_cs_diagnostic_ray_sequence_passes():
    omega = validate_measure([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    U = lift(BusemannField(np.array([1.0, 0.0])), 2.0)
    ray = lifted_ray(U, omega)
    rep = cs_diagnostic(lambda n: ray.eval(float(2 * n)), sigma=1.0,
                        omega0=omega, N=8, eps=0.1, K=4, p=2.0)
    assert rep["verdict"] == "PASS"
    assert rep["min_offdiag"] <= 1e-10


def test_cs_diagnostic_escaping_diracs_pass():
    # four repeating escape directions: the sphere cuts cluster four-fold
    dirs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]),
            np.array([-1.0, 0.0]), np.array([0.0, -1.0])]

    def seq(n):
        return dirac((5.0 + 5.0 * n) * dirs[n % 4])

    rep = cs_diagnostic(seq, sigma=1.0, omega0=dirac([0.0, 0.0]),
                        N=24, eps=0.1, K=5, p=2.0)
    assert rep["verdict"] == "PASS"


def test_cs_diagnostic_choice_independence_smoke():
    dirs = [np.array([1.0, 0.0]), np.array([0.0, 1.0]),
            np.array([-1.0, 0.0]), np.array([0.0, -1.0])]

    def seq(n):
        return dirac((50.0 + 10.0 * n) * dirs[n % 4])

    verdicts = set()
    for omega0 in (dirac([0.0, 0.0]), dirac([0.0, 0.5])):
        for sigma in (0.5, 1.0, 2.0):
            rep = cs_diagnostic(seq, sigma, omega0, N=24, eps=0.1, K=5, p=2.0)
            verdicts.add(rep["verdict"])
    assert verdicts == {"PASS"}


def test_cs_diagnostic_escaping_mixture_fails():
    rep = cs_diagnostic(lambda k: escaping_mixture(k + 2, 2.0), sigma=1.0,
                        omega0=dirac([0.0]), N=20, eps=0.05, K=4, p=2.0)
    assert rep["verdict"] == "FAIL"
    assert rep["min_offdiag"] > 0.05


def test_cs_diagnostic_errors():
    with pytest.raises(SequenceTooClose):
        cs_diagnostic(lambda n: escaping_mixture(n, 2.0), sigma=1.0,
                      omega0=dirac([0.0]), N=5, eps=0.1, K=3, p=2.0)
    with pytest.raises(DomainError):
        cs_diagnostic(lambda n: escaping_mixture(n + 2, 2.0), sigma=1.0,
                      omega0=dirac([0.0]), N=2, eps=0.1, K=3, p=2.0)


def test_dlc_limit_matches_busemann_on_rays():
    omega = validate_measure([[0.0, 0.1], [0.3, -0.1]], [0.5, 0.5])
    U = lift(BusemannField(np.array([1.0, 0.0])), 2.0)
    ray = lifted_ray(U, omega)
    seq = MeasureSetSequence(lambda n: [ray.eval(float(n))], lambda n: float(n))
    tol = 1e-6
    value, converged, samples = dlc_limit(seq, omega, 2.0, tol=tol, n_max=2**14)
    ref = busemann_estimate(ray, omega, tol=tol, t_max=2.0**14)
    assert abs(value - ref.value) <= 2 * tol
    assert converged


def test_dlc_limit_escaping_family_at_delta1():
    seq = MeasureSetSequence(lambda n: [escaping_mixture(n, 2.0)], lambda n: float(n))
    value, _, samples = dlc_limit(seq, dirac([1.0]), 2.0, tol=1e-4, n_max=100)
    n_last, a_last = samples[-1]
    assert n_last == 100
    assert abs(a_last - (math.sqrt(100.0**2 - 1.0) - 100.0)) <= 1e-10
    assert abs(a_last) <= 0.01


def test_dlc_limit_constant_family():
    omega = dirac([2.0])
    seq = MeasureSetSequence(lambda n: [omega], lambda n: 0.0)
    value, converged, samples = dlc_limit(seq, omega, 2.0, tol=1e-9, n_max=16)
    assert value == 0.0 and converged
    assert all(a == 0.0 for _, a in samples)


def test_dlc_limit_errors():
    omega = dirac([0.0])
    empty = MeasureSetSequence(lambda n: [], lambda n: 0.0)
    with pytest.raises(EmptyCollection):
        dlc_limit(empty, omega, 2.0)
    seq = MeasureSetSequence(lambda n: [omega], lambda n: 0.0)
    with pytest.raises(DomainError):
        dlc_limit(seq, omega, 2.0, n_max=1)


def test_path_eval_wrapper():
    path = displacement_path(dirac([0.0]), dirac([4.0]), 2.0)
    assert path_eval(path, 1.0).support[0, 0] == pytest.approx(1.0, abs=1e-12)
