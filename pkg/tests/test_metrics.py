import math

import numpy as np
import pytest

from mixrec.errors import CoordinateNotRecovered, NotEstimable, TooFewPoints
from mixrec.metrics import (
    bounds_from_constants,
    component_error,
    hellinger_distance,
    l2_error,
    pi_error,
    slope_fit,
    theoretical_bounds,
    tv_distance,
)
from mixrec.model import empirical_tensor, joint_tensor, marginalize, sample
from mixrec.recovery import recover_all


def test_distance_examples():
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert l2_error(a, b) == pytest.approx(math.sqrt(2))
    assert tv_distance(a, b) == pytest.approx(1.0)
    assert hellinger_distance(a, b) == pytest.approx(1.0)
    assert hellinger_distance(a, a) == 0.0


def test_l2_triangle_and_marginal_contraction(sim1_joint):
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = rng.dirichlet(np.ones(1024)).reshape((4,) * 5)
        q = rng.dirichlet(np.ones(1024)).reshape((4,) * 5)
        r = sim1_joint.values
        assert l2_error(p, r) <= l2_error(p, q) + l2_error(q, r) + 1e-15
        # total variation can only shrink when coordinates are summed out
        assert tv_distance(marginalize(p, [0, 1]), marginalize(r, [0, 1])) <= tv_distance(p, r) + 1e-15


def test_sim1_bound_constants(sim1):
    b = theoretical_bounds(sim1)
    assert b.L_m == pytest.approx(4 * 3**1.5 * 2)
    assert b.sigma_lower == pytest.approx(2.51e-3, rel=2e-3)
    assert b.eps_threshold_algo == pytest.approx(b.sigma_lower / 4)


def test_lm_for_m2():
    assert bounds_from_constants(2, 0.5, 0.1, 1.0).L_m == pytest.approx(11.3137, abs=1e-4)


def test_not_estimable():
    with pytest.raises(NotEstimable):
        bounds_from_constants(3, 1.0, 0.2, 2.0)
    with pytest.raises(NotEstimable):
        bounds_from_constants(3, 0.5, 0.0, 2.0)


def test_slope_fit():
    fit = slope_fit([(0, 1), (1, 3), (2, 5)])
    assert fit.slope == pytest.approx(2.0) and fit.intercept == pytest.approx(1.0) and fit.r2 == pytest.approx(1.0)
    half = slope_fit([(x, -0.5 * x) for x in range(14, 21)])
    assert half.slope == pytest.approx(-0.5)
    with pytest.raises(TooFewPoints):
        slope_fit([(0, 0), (1, 1)])


def test_component_error_missing_coordinate(sim2, sim2_joint):
    res = recover_all(sim2_joint, 2, active=[0, 1, 2])
    with pytest.raises(CoordinateNotRecovered):
        component_error(res, sim2, 4)


def test_pi_error_needs_permutation(sim2, sim2_joint):
    res = recover_all(sim2_joint, 3, seed=0)
    with pytest.raises(ValueError):
        pi_error(res, sim2)
    assert pi_error(res, sim2, permutation=recover_all(sim2_joint, 3, seed=0, truth=sim2).permutation) < 1e-10


def test_error_shrinks_with_sample_size(sim1):
    def mean_err(n):
        errs = []
        for seed in range(3):
            t = empirical_tensor(sample(sim1, n, seed))
            errs.append(component_error(recover_all(t, 3, seed=seed), sim1, 0))
        return np.mean(errs)

    assert mean_err(2**24) < mean_err(2**17)


def test_l2_marginal_contraction_with_counting_factor():
    rng = np.random.default_rng(8)
    for _ in range(50):
        shape = tuple(rng.integers(2, 5, size=4))
        a = rng.dirichlet(np.ones(np.prod(shape))).reshape(shape)
        b = rng.dirichlet(np.ones(np.prod(shape))).reshape(shape)
        keep = sorted(rng.choice(4, size=int(rng.integers(1, 4)), replace=False))
        dropped = np.prod([shape[j] for j in range(4) if j not in keep])
        assert l2_error(marginalize(a, keep), marginalize(b, keep)) <= np.sqrt(dropped) * l2_error(a, b) + 1e-15
