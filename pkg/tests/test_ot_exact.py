import math

import numpy as np
import pytest

from wasslab.discrete_measure import dirac, random_measure, translate, validate_measure
from wasslab.errors import DimensionError, DomainError, InstanceTooLarge
from wasslab.ot_exact import (
    brute_force_oracle,
    wasserstein_1d_oracle,
    wasserstein_exact,
)
from wasslab.scenarios import escaping_mixture

TWO_BY_TWO = (
    validate_measure([[0.0], [2.0]], [0.5, 0.5]),
    validate_measure([[1.0], [3.0]], [0.5, 0.5]),
)


def test_dirac_pair():
    assert wasserstein_exact(dirac([0.0]), dirac([3.0]), 2.0).value == 3.0


def test_two_by_two_w1():
    # enumeration oracle: permutation costs are 1 (monotone) and 2 (crossed)
    mu, nu = TWO_BY_TWO
    assert abs(wasserstein_exact(mu, nu, 1.0).value - 1.0) <= 1e-12
    assert abs(brute_force_oracle(mu, nu, 1.0).value - 1.0) <= 1e-12


def test_escaping_mixture_distance():
    res = wasserstein_exact(escaping_mixture(5, 2.0), dirac([0.0]), 2.0)
    assert abs(res.value - 5.0) <= 1e-9


def test_1d_oracle_examples():
    assert wasserstein_1d_oracle(dirac([0.0]), dirac([3.0]), 1.0).value == 3.0
    mu, nu = TWO_BY_TWO
    assert abs(wasserstein_1d_oracle(mu, nu, 1.0).value - 1.0) <= 1e-12
    rng = np.random.default_rng(0)
    m = random_measure(rng, 9, 1)
    assert wasserstein_1d_oracle(m, m, 2.0).value == 0.0


def test_1d_plan_is_monotone():
    rng = np.random.default_rng(1)
    for _ in range(20):
        mu = random_measure(rng, 10, 1)
        nu = random_measure(rng, 10, 1)
        plan = wasserstein_1d_oracle(mu, nu, 2.0).plan
        x = mu.support[plan.rows, 0]
        y = nu.support[plan.cols, 0]
        order = np.lexsort((y, x))
        assert np.all(np.diff(x[order]) >= 0)
        assert np.all(np.diff(y[order]) >= -1e-15)


def test_brute_force_examples():
    mu, nu = TWO_BY_TWO
    assert abs(brute_force_oracle(mu, nu, 1.0).value - 1.0) <= 1e-12
    # Dirac source: the unique product plan
    nu2 = validate_measure([[1.0], [4.0]], [0.25, 0.75])
    res = brute_force_oracle(dirac([0.0]), nu2, 2.0)
    assert abs(res.value - math.sqrt(0.25 * 1.0 + 0.75 * 16.0)) <= 1e-12
    # identity instance
    rng = np.random.default_rng(2)
    m = random_measure(rng, 4, 2)
    assert brute_force_oracle(m, m, 2.0).value == 0.0
    with pytest.raises(InstanceTooLarge):
        brute_force_oracle(random_measure(rng, 8, 1, min_atoms=8),
                           random_measure(rng, 8, 1, min_atoms=8), 2.0)


def test_error_contracts():
    with pytest.raises(DimensionError):
        wasserstein_exact(dirac([0.0]), dirac([0.0, 0.0]), 2.0)
    with pytest.raises(DomainError):
        wasserstein_exact(dirac([0.0]), dirac([1.0]), 0.5)
    with pytest.raises(DimensionError):
        wasserstein_1d_oracle(dirac([0.0, 0.0]), dirac([1.0, 1.0]), 2.0)


def test_metric_axioms_random():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        mu = random_measure(rng, 12, d)
        nu = random_measure(rng, 12, d)
        rho = random_measure(rng, 12, d)
        ab = wasserstein_exact(mu, nu, p).value
        ba = wasserstein_exact(nu, mu, p).value
        assert abs(ab - ba) <= 1e-9
        ac = wasserstein_exact(mu, rho, p).value
        cb = wasserstein_exact(rho, nu, p).value
        assert ac <= ab + cb + 1e-9
        assert wasserstein_exact(mu, mu, p).value <= 1e-12


def test_translation_exactness():
    rng = np.random.default_rng(4)
    for _ in range(30):
        d = int(rng.integers(1, 4))
        m = random_measure(rng, 8, d)
        v = rng.uniform(-5, 5, d)
        p = float(rng.choice([1.0, 2.0, 3.0]))
        assert abs(wasserstein_exact(m, translate(m, v), p).value
                   - np.linalg.norm(v)) <= 1e-10


def test_monotone_in_exponent():
    rng = np.random.default_rng(5)
    for _ in range(30):
        d = int(rng.integers(1, 4))
        mu = random_measure(rng, 8, d)
        nu = random_measure(rng, 8, d)
        values = [wasserstein_exact(mu, nu, p).value for p in (1.0, 2.0, 3.0)]
        assert values[0] <= values[1] + 1e-9
        assert values[1] <= values[2] + 1e-9


def test_oracle_agreement_1d():
    rng = np.random.default_rng(6)
    for k in range(60):
        p = (1.0, 2.0, 3.0)[k % 3]
        mu = random_measure(rng, 20, 1)
        nu = random_measure(rng, 20, 1)
        assert abs(wasserstein_exact(mu, nu, p).value
                   - wasserstein_1d_oracle(mu, nu, p).value) <= 1e-9


def test_oracle_agreement_tiny():
    rng = np.random.default_rng(7)
    for k in range(30):
        p = (1.0, 2.0, 3.0)[k % 3]
        d = int(rng.integers(1, 4))
        if k % 2 == 0:
            n = int(rng.integers(2, 7))
            mu = validate_measure(rng.uniform(-5, 5, (n, d)), np.full(n, 1.0 / n))
            nu = validate_measure(rng.uniform(-5, 5, (n, d)), np.full(n, 1.0 / n))
        else:
            mu = random_measure(rng, 4, d)
            nu = random_measure(rng, 5, d)
        assert abs(wasserstein_exact(mu, nu, p).value
                   - brute_force_oracle(mu, nu, p).value) <= 1e-9


def test_degenerate_marginals_do_not_stall():
    # uniform weights force prefix-sum ties; the perturbed pivot must still
    # land on an exact vertex of the unperturbed problem
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        mu = validate_measure(rng.uniform(-5, 5, (n, 2)), np.full(n, 1.0 / n))
        nu = validate_measure(rng.uniform(-5, 5, (n, 2)), np.full(n, 1.0 / n))
        res = wasserstein_exact(mu, nu, 2.0)
        ref = brute_force_oracle(mu, nu, 2.0)
        assert abs(res.value - ref.value) <= 1e-9
        res.plan.validate(1e-10)


def test_simplex_plan_is_basic():
    rng = np.random.default_rng(9)
    for _ in range(20):
        mu = random_measure(rng, 10, 2)
        nu = random_measure(rng, 10, 2)
        res = wasserstein_exact(mu, nu, 2.0)
        assert res.plan.n_entries <= mu.n_atoms + nu.n_atoms - 1
        res.plan.validate(1e-10)


def test_value_is_root_of_cost():
    rng = np.random.default_rng(10)
    for p in (1.0, 2.0, 3.0):
        mu = random_measure(rng, 6, 2)
        nu = random_measure(rng, 6, 2)
        res = wasserstein_exact(mu, nu, p)
        assert abs(res.value - res.cost ** (1.0 / p)) <= 1e-12


def test_kantorovich_rubinstein_bound():
    from wasslab.base_space import BusemannField, MinField
    from wasslab.viscosity import lift

    rng = np.random.default_rng(11)
    for _ in range(40):
        d = int(rng.integers(1, 4))
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        w = rng.normal(size=d)
        w /= np.linalg.norm(w)
        U = lift(MinField((BusemannField(v), BusemannField(w, 0.4))), 1.0)
        mu = random_measure(rng, 8, d)
        nu = random_measure(rng, 8, d)
        gap = U.evaluate(mu) - U.evaluate(nu)
        assert gap <= wasserstein_exact(mu, nu, 1.0).value + 1e-9


def test_result_serialization_shape():
    mu, nu = TWO_BY_TWO
    doc = wasserstein_exact(mu, nu, 2.0).to_json_dict()
    assert set(doc) == {"value", "p", "solver", "plan"}
    assert doc["solver"] == "simplex"
    for entry in doc["plan"]:
        assert len(entry) == 3
