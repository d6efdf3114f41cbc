import itertools
import math

import numpy as np
import pytest

from mixrec.errors import (
    CapacityExceeded,
    EmptyKeepSet,
    IndexOutOfRange,
    PmfViolation,
    RangeViolation,
    ShapeMismatch,
    SimplexViolation,
)
from mixrec.model import (
    MixtureSpec,
    bernoulli_mixture_spec,
    binomial_counterexample,
    empirical_tensor,
    joint_tensor,
    marginalize,
    sample,
    sim2_alpha,
    validate_spec,
)
from mixrec.metrics import l2_error, tv_distance

from _fuzz import random_spec


def brute_joint(spec):
    """Cell-by-cell sum over components; shares no code with the library."""
    out = np.zeros(spec.supports)
    for cell in itertools.product(*(range(N) for N in spec.supports)):
        out[cell] = sum(
            spec.pi[k] * np.prod([spec.components[j][k, cell[j]] for j in range(spec.d)])
            for k in range(spec.m)
        )
    return out


def test_sim1_cell_value(sim1_joint):
    # 0.2 * (1/4)^5 + 0.3 * (1/2)^5
    assert sim1_joint.values[2, 2, 2, 2, 2] == pytest.approx(0.2 / 1024 + 0.3 / 32, abs=1e-15)
    assert sim1_joint.values[2, 2, 2, 2, 2] == pytest.approx(0.009570, abs=1e-6)


def test_sim1_total_mass_and_shape(sim1_joint):
    assert sim1_joint.shape == (4,) * 5
    assert sim1_joint.values.sum() == pytest.approx(1.0, abs=1e-12)
    assert sim1_joint.values.min() >= 0


@pytest.mark.parametrize("which", ["sim1", "sim2"])
def test_joint_matches_brute_force(which, request):
    spec = request.getfixturevalue(which)
    np.testing.assert_allclose(joint_tensor(spec).values, brute_joint(spec), atol=1e-15)


def test_joint_random_specs_match_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = int(rng.integers(1, 4))
        d = int(rng.integers(1, 5))
        spec = random_spec(rng, m, d, rng.integers(1, 4, size=d))
        np.testing.assert_allclose(joint_tensor(spec).values, brute_joint(spec), atol=1e-14)


def test_sim2_alpha_grid():
    a = sim2_alpha()
    assert a[0, 0] == pytest.approx(0.1)
    assert a[2, 4] == pytest.approx(0.9)
    np.testing.assert_allclose(np.diff(a, axis=0), 0.2)
    np.testing.assert_allclose(np.diff(a, axis=1), 0.1)


def test_bernoulli_spec_columns():
    spec = bernoulli_mixture_spec([[0.25, 0.5]], [1.0])
    np.testing.assert_allclose(spec.components[0], [[0.75, 0.25]])
    np.testing.assert_allclose(spec.components[1], [[0.5, 0.5]])


def test_sim1_marginal(sim1_joint):
    np.testing.assert_allclose(marginalize(sim1_joint, [0]).values, [0.3, 0.3, 0.2, 0.2], atol=1e-15)


def test_marginalize_plain_array_and_order(sim2_joint):
    kept = marginalize(sim2_joint.values, [3, 1])
    assert isinstance(kept, np.ndarray)
    np.testing.assert_allclose(kept, sim2_joint.values.sum(axis=(0, 2, 4)))
    with pytest.raises(EmptyKeepSet):
        marginalize(sim2_joint, [])
    with pytest.raises(IndexOutOfRange):
        marginalize(sim2_joint, [7])


@pytest.mark.parametrize("m,c", [(3, 0.1), (4, 0.05)])
def test_binomial_pair_share_joint(m, c):
    a, b = binomial_counterexample(m, c)
    assert a.d == 2 * m - 2
    assert a.pi.sum() == pytest.approx(1.0) and b.pi.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(joint_tensor(a).values, joint_tensor(b).values, atol=1e-12)
    # the two parameter sets are genuinely different under every relabeling
    gap = min(
        np.abs(a.components[0][list(p)] - b.components[0]).max()
        for p in itertools.permutations(range(m))
    )
    assert gap > 0.01


def test_binomial_weights_m3():
    a, b = binomial_counterexample(3, 0.1)
    np.testing.assert_allclose(a.pi, np.array([1, 10, 5]) / 16)
    np.testing.assert_allclose(b.pi, np.array([5, 10, 1]) / 16)
    np.testing.assert_allclose(a.components[0][:, 1], [0.0, 0.2, 0.4])
    np.testing.assert_allclose(b.components[0][:, 1], [0.1, 0.3, 0.5])


@pytest.mark.parametrize("s", range(5))
def test_alternating_binomial_moment_identity(s):
    # the moment-matching identity behind the construction
    assert sum((-1) ** k * math.comb(5, k) * k**s for k in range(6)) == 0


def test_binomial_counterexample_rejects_bad_inputs():
    with pytest.raises(RangeViolation):
        binomial_counterexample(2, 0.1)
    with pytest.raises(RangeViolation):
        binomial_counterexample(3, 0.3)


def test_validation_errors():
    good = [np.array([[0.5, 0.5]])]
    validate_spec(MixtureSpec([1.0], good))
    with pytest.raises(SimplexViolation):
        validate_spec(MixtureSpec([0.9], good))
    with pytest.raises(SimplexViolation):
        validate_spec(MixtureSpec([1.2, -0.2], [np.array([[0.5, 0.5], [0.5, 0.5]])]))
    with pytest.raises(PmfViolation):
        validate_spec(MixtureSpec([1.0], [np.array([[0.7, 0.7]])]))
    with pytest.raises(ShapeMismatch):
        validate_spec(MixtureSpec([0.5, 0.5], good))
    with pytest.raises(PmfViolation):
        MixtureSpec.from_dict({"pi": [1.0], "components": [[[0.2, 0.2]]]})


def test_spec_is_read_only(sim1):
    with pytest.raises(ValueError):
        sim1.pi[0] = 0.5
    with pytest.raises(ValueError):
        sim1.components[0][0, 0] = 1.0


def test_permuted_spec_has_same_joint(sim2):
    p = sim2.permuted([2, 0, 1])
    np.testing.assert_allclose(joint_tensor(p).values, joint_tensor(sim2).values, atol=1e-15)
    np.testing.assert_allclose(p.pi, sim2.pi[[2, 0, 1]])


def test_dict_round_trip(sim1):
    back = MixtureSpec.from_dict(sim1.to_dict())
    np.testing.assert_array_equal(back.pi, sim1.pi)
    for a, b in zip(back.components, sim1.components):
        np.testing.assert_array_equal(a, b)
    validate_spec(back)


def test_cell_budget():
    spec = bernoulli_mixture_spec(np.full((1, 30), 0.5), [1.0])
    with pytest.raises(CapacityExceeded):
        joint_tensor(spec)


def test_sample_is_reproducible(sim1):
    a, b = sample(sim1, 500, seed=9), sample(sim1, 500, seed=9)
    np.testing.assert_array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, sample(sim1, 500, seed=10).rows)


def test_sample_never_hits_zero_mass(sim1):
    # component 3 puts no mass on the last two symbols, component 2 on the first
    rows = sample(sim1, 20000, seed=1).rows
    assert rows.min() >= 0 and rows.max() <= 3


def test_sample_marginal_law_of_large_numbers(sim1, sim1_joint):
    emp = empirical_tensor(sample(sim1, 2**20, seed=5))
    for j in range(sim1.d):
        assert tv_distance(marginalize(emp, [j]), marginalize(sim1_joint, [j])) <= 5e-3


def test_empirical_joint_concentration(sim2, sim2_joint):
    n = 2**22
    p = sim2_joint.values
    rms = np.sqrt(np.sum(p * (1 - p)) / n)  # exact multinomial RMS of the L2 error
    bound = 2 * np.sqrt(p.size / n)
    assert rms < bound
    emp = empirical_tensor(sample(sim2, n, seed=11))
    assert emp.kind == "empirical" and emp.sample_size == n
    assert l2_error(emp, sim2_joint) <= bound


def test_empirical_tensor_counts():
    from mixrec.model import Dataset

    data = Dataset(np.array([[0, 1], [0, 1], [1, 0], [1, 1]]), (2, 2), None)
    np.testing.assert_allclose(empirical_tensor(data).values, [[0, 0.5], [0.25, 0.25]])
    with pytest.raises(IndexOutOfRange):
        empirical_tensor(data, shape=(2, 1))
