"""Component recovery by simultaneous diagonalization.

For a block of ``2m - 1`` coordinates split as ``y`` (m - 1 coords), ``z``
(m - 1 coords) and a probe coordinate, the probe-marginalized unfolding
``T_+ = F1 D_pi F2^T`` has rank ``m``. Contracting the probe against a weight
vector ``w`` instead gives ``T_A = F1 D_pi diag(a) F2^T`` with
``a_k = <w, f_k,probe>``, so ``T_A T_+^+`` has the columns of ``F1`` as
eigenvectors. The eigenproblem is solved in the top-``m`` left singular
basis of ``T_+`` and the eigenvectors are mapped back and L1-normalized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    ComplexSpectrum,
    DegenerateGap,
    DimensionTooSmall,
    ProbeExhausted,
    RangeViolation,
    RankCollapse,
    ShapeMismatch,
    ZeroVector,
)
from .model import JointTensor, MixtureSpec
from .spectral import eig_real, truncated_svd
from .tensor_core import unfold

MAX_REDRAWS = 50
N_PROBES = 20
GAP_RTOL = 1e-6
RANK_RTOL = 1e-8
EXHAUSTIVE_MAX_M = 8
AMBIGUITY_TOL = 1e-9


@dataclass(frozen=True)
class BlockLayout:
    y_modes: tuple
    z_modes: tuple
    probe_mode: int

    def __post_init__(self):
        object.__setattr__(self, "y_modes", tuple(int(j) for j in self.y_modes))
        object.__setattr__(self, "z_modes", tuple(int(j) for j in self.z_modes))
        object.__setattr__(self, "probe_mode", int(self.probe_mode))
        modes = self.active
        if len(set(modes)) != len(modes):
            raise ShapeMismatch(f"layout modes overlap: {modes}")
        if len(self.y_modes) != len(self.z_modes):
            raise ShapeMismatch("y and z blocks must have equal size")

    @property
    def active(self) -> tuple:
        return self.y_modes + self.z_modes + (self.probe_mode,)

    @property
    def m(self) -> int:
        return len(self.y_modes) + 1

    @classmethod
    def default(cls, m: int, active: Optional[Sequence[int]] = None) -> "BlockLayout":
        active = tuple(range(2 * m - 1)) if active is None else tuple(active)
        return cls(active[: m - 1], active[m - 1 : 2 * m - 2], active[2 * m - 2])


@dataclass
class ProbeWeights:
    w: np.ndarray
    a_hat: Optional[np.ndarray] = None
    min_gap: Optional[float] = None

    @property
    def mass(self) -> float:
        return float(self.w.sum() / self.w.size)


@dataclass
class RecoveryDiagnostics:
    sigma_m: float
    svd_residual: float
    eig_gap: float
    redraws: int
    sigma_lower_bound: Optional[float] = None
    rate_factor: Optional[float] = None
    alignment_ambiguous: bool = False
    eigenvalues: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        out = {
            "sigma_m": self.sigma_m,
            "svd_residual": self.svd_residual,
            "eig_gap": self.eig_gap,
            "redraws": self.redraws,
            "sigma_lower_bound": self.sigma_lower_bound,
            "rate_factor": self.rate_factor,
            "alignment_ambiguous": self.alignment_ambiguous,
        }
        if self.eigenvalues is not None:
            out["eigenvalues"] = np.asarray(self.eigenvalues).tolist()
        return out


@dataclass
class BlockRecovery:
    """Output of one simultaneous-diagonalization run.

    ``block_pmfs`` holds the normalized eigenfunctions over the flattened y
    block; ``components`` holds per-coordinate PMF estimates for every active
    coordinate (y coordinates by marginalizing the eigenfunctions, the others
    by least squares against them); ``pi_hat`` is the raw least-squares weight
    vector.
    """

    layout: BlockLayout
    block_pmfs: np.ndarray
    components: dict
    pi_hat: np.ndarray
    probe: ProbeWeights
    diagnostics: RecoveryDiagnostics


@dataclass
class RecoveryResult:
    components_hat: dict
    pi_hat: np.ndarray
    permutation: Optional[np.ndarray]
    diagnostics: RecoveryDiagnostics
    blocks: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "m": int(self.pi_hat.size),
            "coordinates": sorted(int(j) for j in self.components_hat),
            "components": {str(j): F.tolist() for j, F in sorted(self.components_hat.items())},
            "pi": self.pi_hat.tolist(),
            "permutation": None if self.permutation is None else [int(p) for p in self.permutation],
            "diagnostics": self.diagnostics.to_dict(),
        }


def project_to_pmf(v) -> tuple:
    """Return ``(raw, projected)`` PMF versions of a signed vector.

    ``raw`` is the sign-fixed vector divided by its L1 norm; ``projected``
    additionally clips negative entries and renormalizes.
    """
    v = np.asarray(v, dtype=float)
    l1 = np.abs(v).sum()
    if l1 == 0 or not np.isfinite(l1):
        raise ZeroVector("cannot normalize a zero vector")
    if v.sum() < 0:
        v = -v
    raw = v / l1
    clipped = np.clip(raw, 0.0, None)
    if clipped.sum() == 0:
        raise ZeroVector("no positive mass left after clipping")
    return raw, clipped / clipped.sum()


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.clip(v - theta, 0.0, None)


def _values(t) -> np.ndarray:
    return t.values if isinstance(t, JointTensor) else np.asarray(t, dtype=float)


def _restrict(values: np.ndarray, layout: BlockLayout) -> np.ndarray:
    """Sum out inactive modes and order the rest as (y..., z..., probe)."""
    drop = tuple(j for j in range(values.ndim) if j not in layout.active)
    if drop:
        values = values.sum(axis=drop)
    kept = [j for j in range(values.ndim + len(drop)) if j not in drop]
    pos = {j: i for i, j in enumerate(kept)}
    return np.transpose(values, [pos[j] for j in layout.active])


def _trivial_block(values: np.ndarray) -> BlockRecovery:
    comps = {}
    for j in range(values.ndim):
        marg = values.sum(axis=tuple(i for i in range(values.ndim) if i != j))
        comps[j] = project_to_pmf(marg)[1][None, :]
    diag = RecoveryDiagnostics(sigma_m=float(values.sum()), svd_residual=0.0, eig_gap=math.inf, redraws=0)
    layout = BlockLayout((), (), 0)
    return BlockRecovery(layout, np.ones((1, 1)), comps, np.ones(1), ProbeWeights(np.ones(1)), diag)


def recover_block(
    t_hat,
    m: int,
    layout: Optional[BlockLayout] = None,
    seed=None,
    max_redraws: int = MAX_REDRAWS,
    n_probes: int = N_PROBES,
    gap_rtol: float = GAP_RTOL,
    rank_rtol: float = RANK_RTOL,
) -> BlockRecovery:
    """Recover the ``m`` component functions on the y block of ``layout``.

    ``t_hat`` may have more modes than the layout uses; the extra modes are
    summed out first. Probe weights are drawn uniformly from ``[0, 1]^N``; a
    draw is rejected when the coefficient matrix has a complex spectrum or an
    eigenvalue gap below ``gap_rtol * ||eta||_2``, and at most ``max_redraws``
    rejections are tolerated. Among the first ``n_probes`` accepted draws the
    one with the largest relative eigenvalue gap is kept.

    Raises
    ------
    RankCollapse
        If ``sigma_m(T_+) <= rank_rtol * sigma_1(T_+)``.
    ProbeExhausted
        If every probe draw was rejected.
    """
    values = _values(t_hat)
    if m < 1:
        raise RangeViolation("m must be positive")
    if m == 1:
        return _trivial_block(values)
    layout = BlockLayout.default(m) if layout is None else layout
    if layout.m != m:
        raise ShapeMismatch(f"layout is built for m={layout.m}, not m={m}")
    if max(layout.active) >= values.ndim:
        raise DimensionTooSmall(f"layout uses mode {max(layout.active)} of an order-{values.ndim} tensor")
    T = _restrict(values, layout)
    ny = m - 1
    y_shape = T.shape[:ny]
    n_y = int(np.prod(y_shape))
    n_z = int(np.prod(T.shape[ny : 2 * ny]))
    n_probe = T.shape[-1]
    if min(n_y, n_z) < m:
        raise RankCollapse(f"unfolding of size {n_y} x {n_z} cannot have rank {m}")

    T_plus = T.sum(axis=-1).reshape(n_y, n_z)
    svd = truncated_svd(T_plus, m)
    sigma = svd.sigma
    if not sigma[-1] > rank_rtol * sigma[0]:
        raise RankCollapse(f"sigma_m = {sigma[-1]:.3e} is negligible next to sigma_1 = {sigma[0]:.3e}")

    rng = np.random.default_rng(seed)
    M3 = T.reshape(n_y, n_z, n_probe)
    eig, w, draws, accepted = None, None, 0, 0
    # one initial draw plus at most max_redraws rejected redraws
    while accepted < n_probes and draws - accepted < max_redraws + (eig is None):
        cand = rng.uniform(0.0, 1.0, n_probe)
        draws += 1
        eta = (svd.u.T @ (M3 @ cand) @ svd.v) / sigma[None, :]
        scale = np.linalg.norm(eta, 2)
        try:
            e = eig_real(eta, gap_min=gap_rtol * scale)
        except (ComplexSpectrum, DegenerateGap):
            continue
        accepted += 1
        if eig is None or e.condition_gap / scale > best_rel_gap:
            eig, w, best_rel_gap = e, cand, e.condition_gap / scale
    if eig is None:
        raise ProbeExhausted(f"no usable probe weights after {draws} draws")
    redraws = draws - accepted

    G = svd.u @ eig.vectors
    block = np.empty((m, n_y))
    for k in range(m):
        block[k] = project_to_pmf(G[:, k])[1]

    comps = {}
    B = block.reshape((m,) + y_shape)
    for i, j in enumerate(layout.y_modes):
        axes = tuple(1 + a for a in range(ny) if a != i)
        comps[j] = B.sum(axis=axes) if axes else B.copy()

    # rows of pinv(F1) @ T_(y|rest) are pi_k times the product PMF over the rest
    rest = unfold(T, range(ny), range(ny, T.ndim)).matrix
    coef = np.linalg.lstsq(block.T, rest, rcond=None)[0]
    pi_hat = coef.sum(axis=1)
    R = coef.reshape((m,) + T.shape[ny:])
    for i, j in enumerate(layout.z_modes + (layout.probe_mode,)):
        axes = tuple(1 + a for a in range(R.ndim - 1) if a != i)
        marg = R.sum(axis=axes)
        comps[j] = np.stack([project_to_pmf(row)[1] for row in marg])

    probe = ProbeWeights(w, a_hat=eig.values, min_gap=eig.condition_gap)
    diag = RecoveryDiagnostics(
        sigma_m=float(sigma[-1]),
        svd_residual=svd.residual,
        eig_gap=eig.condition_gap,
        redraws=redraws,
        eigenvalues=eig.values,
    )
    return BlockRecovery(layout, block, comps, pi_hat, probe, diag)


def rotated_layouts(m: int, active: Sequence[int]) -> list:
    """Cyclic shifts of ``active`` by multiples of ``m - 1`` until every mode sat in a y block."""
    active = tuple(active)
    p = len(active)
    if m == 1:
        return [BlockLayout((), (), active[0])]
    layouts, covered, shift = [], set(), 0
    while not covered.issuperset(active):
        order = [active[(shift + i) % p] for i in range(p)]
        layout = BlockLayout.default(m, order)
        layouts.append(layout)
        covered.update(layout.y_modes)
        shift += m - 1
    return layouts


def _normalized_rows(F: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(F, axis=1, keepdims=True)
    return F / np.where(norms > 0, norms, 1.0)


def _best_assignment(score: np.ndarray, maximize: bool) -> tuple:
    """Permutation ``p`` optimizing ``sum_k score[k, p[k]]`` and whether the optimum is tied."""
    m = score.shape[0]
    sign = 1.0 if maximize else -1.0
    if m <= EXHAUSTIVE_MAX_M:
        perms = np.array(list(itertools.permutations(range(m))))
        totals = sign * score[np.arange(m), perms].sum(axis=1)
        best = int(np.argmax(totals))
        runner_up = np.partition(totals, -2)[-2] if len(totals) > 1 else -np.inf
        tied = bool(totals[best] - runner_up <= AMBIGUITY_TOL)
        return perms[best], tied
    rows, cols = linear_sum_assignment(score, maximize=maximize)
    return cols[np.argsort(rows)], False


def _as_matrix_set(x) -> list:
    if isinstance(x, dict):
        return [np.asarray(x[k], dtype=float) for k in sorted(x)]
    if isinstance(x, np.ndarray) and x.ndim == 2:
        return [x]
    return [np.asarray(F, dtype=float) for F in x]


def align_components(est, truth) -> tuple:
    """Match estimated components to true ones.

    ``est`` and ``truth`` are an ``m x N`` matrix or a set of them (list or
    dict keyed alike). Returns ``(perm, errors)`` where ``est`` row
    ``perm[k]`` is matched to truth row ``k`` and ``errors[k]`` is the summed
    L2 distance of that pair over the set; ``perm`` minimizes the total.
    """
    E, T = _as_matrix_set(est), _as_matrix_set(truth)
    if len(E) != len(T) or any(a.shape != b.shape for a, b in zip(E, T)):
        raise ShapeMismatch("estimate and truth shapes differ")
    m = T[0].shape[0]
    cost = np.zeros((m, m))
    for Ej, Tj in zip(E, T):
        cost += np.linalg.norm(Tj[:, None, :] - Ej[None, :, :], axis=2)
    perm, _ = _best_assignment(cost, maximize=False)
    return perm, cost[np.arange(m), perm]


def _align_to_reference(ref: dict, other: dict) -> tuple:
    shared = sorted(set(ref) & set(other))
    m = next(iter(ref.values())).shape[0]
    score = np.zeros((m, m))
    for j in shared:
        score += _normalized_rows(ref[j]) @ _normalized_rows(other[j]).T
    return _best_assignment(score, maximize=True)


def recover_all(
    t_hat,
    m: int,
    seed=None,
    active: Optional[Sequence[int]] = None,
    truth: Optional[MixtureSpec] = None,
    **block_kwargs,
) -> RecoveryResult:
    """Recover component PMFs on every active coordinate, plus mixing weights.

    ``active`` defaults to the first ``2m - 1`` coordinates. The block run is
    repeated over cyclic rotations of the active coordinates so each one lands
    in a y block; labels of later runs are matched to the first run by summed
    cosine similarity over all active coordinates. Mixing weights come from
    the first run's least-squares fit, projected onto the simplex.
    """
    values = _values(t_hat)
    d = values.ndim
    if d < 2 * m - 1:
        raise DimensionTooSmall(f"d={d} < 2m-1={2 * m - 1}")
    active = tuple(range(2 * m - 1)) if active is None else tuple(int(j) for j in active)
    if len(active) != 2 * m - 1 or len(set(active)) != len(active) or max(active) >= d or min(active) < 0:
        raise ShapeMismatch(f"active coordinates {active} must be {2 * m - 1} distinct modes of {d}")

    if m == 1:
        trivial = _trivial_block(values)
        comps = {j: trivial.components[j] for j in active}
        return RecoveryResult(comps, np.ones(1), None if truth is None else np.zeros(1, dtype=int), trivial.diagnostics, [trivial])

    layouts = rotated_layouts(m, active)
    seeds = np.random.SeedSequence(seed).spawn(len(layouts))
    blocks = [recover_block(values, m, layout, seed=s, **block_kwargs) for layout, s in zip(layouts, seeds)]

    ref = blocks[0]
    components, ambiguous = {}, False
    for b in blocks:
        if b is ref:
            perm = np.arange(m)
        else:
            perm, tied = _align_to_reference(ref.components, b.components)
            ambiguous |= tied
        for j in b.layout.y_modes:
            if j not in components:
                components[j] = b.components[j][perm]

    pi_hat = project_to_simplex(ref.pi_hat)

    diag = RecoveryDiagnostics(
        sigma_m=min(b.diagnostics.sigma_m for b in blocks),
        svd_residual=max(b.diagnostics.svd_residual for b in blocks),
        eig_gap=min(b.diagnostics.eig_gap for b in blocks),
        redraws=sum(b.diagnostics.redraws for b in blocks),
        alignment_ambiguous=ambiguous,
        eigenvalues=ref.diagnostics.eigenvalues,
    )
    permutation = None
    if truth is not None:
        from .metrics import attach_bounds

        coords = sorted(components)
        permutation, _ = align_components(
            [components[j] for j in coords], [truth.components[j] for j in coords]
        )
        attach_bounds(diag, truth, ref.probe)
    return RecoveryResult(components, pi_hat, permutation, diag, blocks)
