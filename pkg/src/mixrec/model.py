"""Finite-support mixtures of product distributions.

A model with ``m`` components over ``d`` discrete coordinates is

    P(x_1, ..., x_d) = sum_k pi_k * prod_j f_kj(x_j)

where ``f_kj`` is a probability mass function on ``{0, ..., N_j - 1}``.
Coordinates and components are 0-based throughout the library.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CapacityExceeded,
    EmptyKeepSet,
    IndexOutOfRange,
    PmfViolation,
    RangeViolation,
    ShapeMismatch,
    SimplexViolation,
)

SIMPLEX_ATOL = 1e-12
DEFAULT_CELL_BUDGET = 10**8


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MixtureSpec:
    """Ground-truth mixture: weights ``pi`` and per-coordinate component PMFs.

    ``components[j]`` is an ``m x N_j`` matrix whose row ``k`` is ``f_kj``.
    Construction does not validate; call :func:`validate_spec`.
    """

    pi: np.ndarray
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi))
        object.__setattr__(self, "components", tuple(_frozen(F) for F in self.components))

    @property
    def m(self) -> int:
        return int(self.pi.shape[0])

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def supports(self) -> tuple:
        return tuple(int(F.shape[1]) for F in self.components)

    def permuted(self, perm) -> "MixtureSpec":
        """Relabel components so that new component ``k`` is old ``perm[k]``."""
        perm = np.asarray(perm)
        return MixtureSpec(self.pi[perm], tuple(F[perm] for F in self.components))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "d": self.d,
            "supports": list(self.supports),
            "pi": self.pi.tolist(),
            "components": [F.tolist() for F in self.components],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureSpec":
        try:
            spec = cls(data["pi"], tuple(np.asarray(F, dtype=float) for F in data["components"]))
        except (KeyError, TypeError) as exc:
            raise ShapeMismatch(f"malformed model description: {exc}") from exc
        for key, value in (("m", spec.m), ("d", spec.d)):
            if key in data and int(data[key]) != value:
                raise ShapeMismatch(f"declared {key}={data[key]} but components imply {value}")
        if "supports" in data and list(map(int, data["supports"])) != list(spec.supports):
            raise ShapeMismatch(f"declared supports {data['supports']} disagree with components")
        validate_spec(spec)
        return spec


@dataclass(frozen=True)
class JointTensor:
    """Dense joint probability tensor, coordinate 0 varying slowest."""

    values: np.ndarray
    kind: str = "exact"
    sample_size: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("exact", "empirical"):
            raise ValueError(f"unknown tensor kind {self.kind!r}")
        if (self.kind == "empirical") != (self.sample_size is not None):
            raise ValueError("sample_size must be given iff kind == 'empirical'")
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def d(self) -> int:
        return self.values.ndim


@dataclass(frozen=True)
class Dataset:
    """``n`` i.i.d. draws, one row of support indices per draw."""

    rows: np.ndarray
    supports: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[1] != len(self.supports):
            raise ShapeMismatch(f"rows of shape {rows.shape} do not match {len(self.supports)} supports")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "supports", tuple(int(s) for s in self.supports))

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def d(self) -> int:
        return int(self.rows.shape[1])


def validate_spec(spec: MixtureSpec) -> None:
    """Raise if ``spec`` is not a valid mixture; return ``None`` otherwise."""
    pi = spec.pi
    if pi.ndim != 1 or pi.size < 1:
        raise ShapeMismatch(f"pi must be a nonempty vector, got shape {pi.shape}")
    if spec.d < 1:
        raise ShapeMismatch("at least one coordinate is required")
    if not np.all(np.isfinite(pi)) or np.any(pi < 0) or abs(pi.sum() - 1.0) > SIMPLEX_ATOL:
        raise SimplexViolation(f"mixing weights {pi.tolist()} are not a probability vector")
    for j, F in enumerate(spec.components):
        if F.ndim != 2 or F.shape[0] != spec.m:
            raise ShapeMismatch(f"coordinate {j}: expected {spec.m} rows, got shape {F.shape}")
        if F.shape[1] < 1:
            raise ShapeMismatch(f"coordinate {j}: empty support")
        bad = ~np.isfinite(F).all(axis=1) | (F < 0).any(axis=1) | (np.abs(F.sum(axis=1) - 1) > SIMPLEX_ATOL)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise PmfViolation(f"component {k} at coordinate {j} is not a PMF: {F[k].tolist()}")


def joint_tensor(spec: MixtureSpec, cell_budget: int = DEFAULT_CELL_BUDGET) -> JointTensor:
    validate_spec(spec)
    cells = int(np.prod(spec.supports, dtype=object))
    if cells > cell_budget:
        raise CapacityExceeded(f"{cells} cells exceed the budget of {cell_budget}")
    # keep a leading component axis and grow one coordinate axis at a time
    acc = spec.pi.copy()
    for F in spec.components:
        acc = acc[..., None] * F.reshape((spec.m,) + (1,) * (acc.ndim - 1) + (F.shape[1],))
    return JointTensor(acc.sum(axis=0), kind="exact")


def conditional_iid_spec(base_pmfs, pi, d: int) -> MixtureSpec:
    """Every coordinate shares the component PMFs ``base_pmfs`` (rows)."""
    base = np.asarray(base_pmfs, dtype=float)
    spec = MixtureSpec(pi, tuple(base for _ in range(d)))
    validate_spec(spec)
    return spec


def bernoulli_mixture_spec(alpha, pi) -> MixtureSpec:
    """``alpha[k, j]`` is the success probability of component k at coordinate j."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2:
        raise ShapeMismatch(f"alpha must be m x d, got shape {alpha.shape}")
    if np.any(alpha < 0) or np.any(alpha > 1) or not np.all(np.isfinite(alpha)):
        raise RangeViolation("success probabilities must lie in [0, 1]")
    comps = tuple(np.stack([1 - alpha[:, j], alpha[:, j]], axis=1) for j in range(alpha.shape[1]))
    spec = MixtureSpec(pi, comps)
    validate_spec(spec)
    return spec


SIM1_PMFS = np.array(
    [
        [0.25, 0.25, 0.25, 0.25],
        [0.0, 0.0, 0.5, 0.5],
        [0.5, 0.5, 0.0, 0.0],
    ]
)
SIM_PI = np.array([0.2, 0.3, 0.5])


def sim1_spec(d: int = 5) -> MixtureSpec:
    """Conditional i.i.d. benchmark: three PMFs on four points."""
    return conditional_iid_spec(SIM1_PMFS, SIM_PI, d)


def sim2_alpha(m: int = 3, d: int = 5) -> np.ndarray:
    k = np.arange(m)[:, None]
    j = np.arange(1, d + 1)[None, :]
    return 0.1 * j + 0.2 * k


def sim2_spec(m: int = 3, d: int = 5) -> MixtureSpec:
    """Bernoulli benchmark with success probabilities ``0.1 j + 0.2 (k - 1)`` (1-based k, j)."""
    if m != 3:
        raise RangeViolation("the Bernoulli benchmark weights are defined for m = 3")
    return bernoulli_mixture_spec(sim2_alpha(m, d), SIM_PI)


def binomial_counterexample(m: int, c: float) -> tuple:
    """Two Bernoulli mixtures on ``2m - 2`` coordinates with identical joints.

    Weights are proportional to the even- and odd-indexed binomial
    coefficients of ``2m - 1``; success probabilities are ``c * (2k - 2)`` and
    ``c * (2k - 1)`` (1-based k). Both weight vectors are normalized by their
    common sum ``2**(2m - 2)``.
    """
    if m < 3:
        raise RangeViolation("the construction needs m >= 3")
    if not (c > 0 and c * (2 * m - 1) <= 1):
        raise RangeViolation(f"c={c} must satisfy 0 < c*(2m-1) <= 1")
    d = 2 * m - 2
    ks = np.arange(1, m + 1)
    total = 2 ** (2 * m - 2)
    pi = np.array([comb(2 * m - 1, 2 * k - 2) for k in ks], dtype=float) / total
    pi_tilde = np.array([comb(2 * m - 1, 2 * k - 1) for k in ks], dtype=float) / total
    alpha = c * (2 * ks - 2.0)
    beta = c * (2 * ks - 1.0)
    mu0 = bernoulli_mixture_spec(np.repeat(alpha[:, None], d, axis=1), pi)
    mu0_tilde = bernoulli_mixture_spec(np.repeat(beta[:, None], d, axis=1), pi_tilde)
    return mu0, mu0_tilde


def _inverse_cdf_table(P: np.ndarray) -> np.ndarray:
    """Row-wise CDFs with an exact 1.0 from the last positive mass onward."""
    cdf = np.cumsum(P, axis=-1)
    cdf /= cdf[..., -1:]
    for row, p in zip(cdf.reshape(-1, P.shape[-1]), P.reshape(-1, P.shape[-1])):
        row[np.flatnonzero(p > 0)[-1]:] = 1.0
    return cdf


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # index of the first cdf entry strictly above u
    return np.searchsorted(cdf, u, side="right")


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator used for all sampling in the library."""
    return np.random.Generator(np.random.Philox(seed))


def sample(spec: MixtureSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` rows: a latent label from ``pi``, then each coordinate independently."""
    validate_spec(spec)
    if n < 1:
        raise RangeViolation("n must be at least 1")
    rng = make_rng(seed)
    labels = _draw(_inverse_cdf_table(spec.pi[None, :])[0], rng.random(n))
    rows = np.empty((n, spec.d), dtype=np.int64)
    for j, F in enumerate(spec.components):
        cdf = _inverse_cdf_table(F)
        u = rng.random(n)
        col = np.empty(n, dtype=np.int64)
        for k in range(spec.m):
            idx = np.flatnonzero(labels == k)
            col[idx] = _draw(cdf[k], u[idx])
        rows[:, j] = col
    return Dataset(rows, spec.supports, seed)


def empirical_tensor(data: Dataset, shape: Optional[Sequence[int]] = None) -> JointTensor:
    shape = tuple(int(s) for s in (data.supports if shape is None else shape))
    if len(shape) != data.d:
        raise ShapeMismatch(f"shape {shape} has {len(shape)} modes, data has {data.d} columns")
    rows = data.rows
    if rows.size and (rows.min() < 0 or np.any(rows.max(axis=0) >= np.array(shape))):
        raise IndexOutOfRange(f"sample indices fall outside supports {shape}")
    flat = np.ravel_multi_index(rows.T, shape) if rows.size else np.zeros(0, dtype=np.int64)
    counts = np.bincount(flat, minlength=int(np.prod(shape)))
    return JointTensor((counts / data.n).reshape(shape), kind="empirical", sample_size=data.n)


def marginalize(t, keep: Sequence[int]):
    """Sum out every coordinate not in ``keep``; kept coordinates stay in ascending order."""
    values = t.values if isinstance(t, JointTensor) else np.asarray(t)
    keep = sorted(set(int(j) for j in keep))
    if not keep:
        raise EmptyKeepSet("at least one coordinate must be kept")
    if keep[0] < 0 or keep[-1] >= values.ndim:
        raise IndexOutOfRange(f"coordinates {keep} out of range for order {values.ndim}")
    drop = tuple(j for j in range(values.ndim) if j not in keep)
    out = values.sum(axis=drop) if drop else values.copy()
    if isinstance(t, JointTensor):
        return JointTensor(out, kind=t.kind, sample_size=t.sample_size)
    return out
