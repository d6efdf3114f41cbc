"""Sufficient identifiability certificates from per-coordinate Kruskal ranks.

The independence index of coordinate ``j`` is the Kruskal rank of the
family ``f_1j, ..., f_mj``. A block ``S`` of coordinates has excess
independence ``tau(S) = min(m, sum_{j in S} ind(j) - |S| + 1)``, and a
mixture is identifiable whenever some split of the coordinates into three
nonempty blocks has ``tau(S1) + tau(S2) + tau(S3) >= 2m + 2``. Having at
least ``2m - 1`` coordinates with pairwise distinct components is a
special case. Neither condition is necessary, so a failed certificate does
not prove non-identifiability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import EmptySet, IndexOutOfRange, WitnessNotFound
from .model import MixtureSpec, validate_spec
from .spectral import KRUSKAL_TOL, gram, kruskal_rank

EXHAUSTIVE_MAX_D = 15


@dataclass
class IdentifiabilityReport:
    m: int
    ind: list
    separable_count: int
    best_partition: Optional[tuple]
    best_tau_sum: int
    verdict: str
    shortcut_used: bool
    search: str = "exhaustive"

    @property
    def certified(self) -> bool:
        return self.verdict == "certified-identifiable"

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "ind": list(self.ind),
            "separable_count": self.separable_count,
            "best_partition": None if self.best_partition is None else [list(S) for S in self.best_partition],
            "best_tau_sum": self.best_tau_sum,
            "threshold_tau_sum": 2 * self.m + 2,
            "threshold_separable": 2 * self.m - 1,
            "verdict": self.verdict,
            "shortcut_used": self.shortcut_used,
            "search": self.search,
        }


def ind_index(spec: MixtureSpec, j: int, tol: float = KRUSKAL_TOL) -> int:
    if not 0 <= j < spec.d:
        raise IndexOutOfRange(f"coordinate {j} out of range for d={spec.d}")
    return kruskal_rank(gram(spec.components[j]), tol)


def _tau_from(ind: Iterable[int], m: int) -> int:
    ind = list(ind)
    if not ind:
        raise EmptySet("tau needs a nonempty coordinate set")
    return min(m, sum(ind) - len(ind) + 1)


def tau(spec: MixtureSpec, S: Iterable[int], tol: float = KRUSKAL_TOL) -> int:
    return _tau_from((ind_index(spec, j, tol) for j in S), spec.m)


def _best_partition_exhaustive(ind: list, m: int):
    """Branch and bound over canonical 3-block labelings (block labels opened in order)."""
    d = len(ind)
    excess = [i - 1 for i in ind]
    suffix = np.concatenate([np.cumsum(excess[::-1])[::-1], [0]]).tolist()
    cap = 3 * m
    best = [-1, None]
    blocks = [[], [], []]
    sums = [0, 0, 0]

    def score():
        return sum(min(m, s + 1) for s in sums)

    def bound(pos):
        # every block nonempty at the end contributes at most min(m, excess + 1)
        return min(cap, sum(min(m, s + 1) for s in sums) + suffix[pos])

    def rec(pos, opened):
        if best[0] == cap:
            return
        if pos == d:
            if opened == 3:
                val = score()
                if val > best[0]:
                    best[0] = val
                    best[1] = tuple(tuple(b) for b in blocks)
            return
        if d - pos < 3 - opened or bound(pos) <= best[0]:
            return
        for b in range(min(opened + 1, 3)):
            blocks[b].append(pos)
            sums[b] += excess[pos]
            rec(pos + 1, max(opened, b + 1))
            sums[b] -= excess[pos]
            blocks[b].pop()

    rec(0, 0)
    return best[0], best[1]


def _best_partition_greedy(ind: list, m: int):
    """Seed three blocks with the most independent coordinates, then fill the weakest block."""
    order = sorted(range(len(ind)), key=lambda j: (-ind[j], j))
    blocks = [[order[0]], [order[1]], [order[2]]]
    for j in order[3:]:
        taus = [_tau_from((ind[i] for i in b), m) for b in blocks]
        blocks[int(np.argmin(taus))].append(j)
    total = sum(_tau_from((ind[i] for i in b), m) for b in blocks)
    return total, tuple(tuple(sorted(b)) for b in blocks)


def certify(spec: MixtureSpec, tol: float = KRUSKAL_TOL) -> IdentifiabilityReport:
    """Check both sufficient conditions and report the best 3-partition found.

    The partition search runs even when the separability shortcut already
    certifies, so the report always carries a witness when one exists.
    """
    validate_spec(spec)
    m, d = spec.m, spec.d
    ind = [ind_index(spec, j, tol) for j in range(d)]
    separable = sum(1 for i in ind if i >= 2) if m >= 2 else d
    shortcut = separable >= 2 * m - 1
    best_sum, partition, search = 0, None, "none"
    if d >= 3:
        if d <= EXHAUSTIVE_MAX_D:
            best_sum, partition = _best_partition_exhaustive(ind, m)
            search = "exhaustive"
        else:
            best_sum, partition = _best_partition_greedy(ind, m)
            search = "greedy"
    certified = shortcut or best_sum >= 2 * m + 2
    return IdentifiabilityReport(
        m=m,
        ind=ind,
        separable_count=separable,
        best_partition=partition,
        best_tau_sum=int(best_sum),
        verdict="certified-identifiable" if certified else "not-certified",
        shortcut_used=bool(shortcut),
        search=search,
    )


@dataclass
class IncoherenceProfile:
    mu_per_coordinate: np.ndarray
    mu: float
    zeta: float
    C: float
    estimable: bool = field(init=False)

    def __post_init__(self):
        self.estimable = bool(self.mu < 1 and self.zeta > 0)


def _max_cosine(F: np.ndarray) -> float:
    if F.shape[0] < 2:
        return 0.0
    norms = np.linalg.norm(F, axis=1)
    cos = np.abs(F @ F.T) / np.outer(norms, norms)
    np.fill_diagonal(cos, 0.0)
    return float(min(cos.max(), 1.0))


def incoherence_profile(spec: MixtureSpec) -> IncoherenceProfile:
    """Pairwise-cosine incoherence per coordinate, smallest weight and a sup bound.

    ``C`` is the largest PMF entry times its support size, i.e. the sup-norm of
    the PMF read as a piecewise-constant density on the unit interval.
    """
    validate_spec(spec)
    mus = np.array([_max_cosine(F) for F in spec.components])
    C = max(float(F.max()) * F.shape[1] for F in spec.components)
    return IncoherenceProfile(mus, float(mus.max()), float(spec.pi.min()), C)


def witness_bound(vectors, target=None, delta: Optional[float] = None) -> float:
    """Lower bound ``C0 sqrt(1 - delta^2) / (4 m^{3/2})`` demanded of a witness."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    m = V.shape[0]
    if delta is None:
        delta = max_cosine_to(V, np.asarray(target, dtype=float))
    C0 = float(np.linalg.norm(V, axis=1).min())
    return C0 * math.sqrt(max(0.0, 1 - delta**2)) / (4 * m**1.5)


def max_cosine_to(V: np.ndarray, target: np.ndarray) -> float:
    cos = np.abs(V @ target) / (np.linalg.norm(V, axis=1) * np.linalg.norm(target))
    return float(min(cos.max(), 1.0))


def separating_witness(vectors, target, trials: int = 1000, seed=None, delta: Optional[float] = None):
    """Unit vector orthogonal to ``target`` with a guaranteed overlap with every row of ``vectors``.

    Gaussian combinations of an orthonormal basis for the complement of
    ``target`` inside ``span{target, vectors}`` are drawn until one clears
    :func:`witness_bound`. ``delta`` defaults to the largest cosine between
    ``target`` and any row.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    target = np.asarray(target, dtype=float)
    if V.shape[1] != target.shape[0]:
        raise IndexOutOfRange("target and vectors differ in length")
    if delta is None:
        delta = max_cosine_to(V, target)
    bound = witness_bound(V, delta=delta)
    h0 = target / np.linalg.norm(target)
    residual = V - np.outer(V @ h0, h0)
    u, s, _ = np.linalg.svd(residual.T, full_matrices=False)
    keep = s > 1e-12 * max(1.0, float(np.linalg.norm(V)))
    basis = u[:, keep]
    # re-orthogonalize against the target to keep <w, target> at rounding level
    basis = basis - np.outer(h0, h0 @ basis)
    basis, _ = np.linalg.qr(basis) if basis.shape[1] else (basis, None)
    if basis.shape[1] == 0 or bound <= 0:
        raise WitnessNotFound("target is parallel to the span of the vectors")
    rng = np.random.default_rng(seed)
    tnorm = np.linalg.norm(target)
    for _ in range(trials):
        w = basis @ rng.standard_normal(basis.shape[1])
        w /= np.linalg.norm(w)
        if abs(w @ target) <= 1e-12 * min(1.0, tnorm) and np.all(np.abs(V @ w) >= bound):
            return w
    raise WitnessNotFound(f"no witness after {trials} draws (bound {bound:.3e})")
