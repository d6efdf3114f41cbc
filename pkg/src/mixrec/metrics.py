"""Error metrics and closed-form perturbation constants.

Discrete L2 norms use counting measure throughout.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CoordinateNotRecovered, NotEstimable, ShapeMismatch, TooFewPoints
from .identifiability import incoherence_profile
from .model import JointTensor, MixtureSpec


def _values(t) -> np.ndarray:
    return t.values if isinstance(t, JointTensor) else np.asarray(t, dtype=float)


def l2_error(a, b) -> float:
    A, B = _values(a), _values(b)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.linalg.norm((A - B).ravel()))


def tv_distance(a, b) -> float:
    A, B = _values(a), _values(b)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return 0.5 * float(np.abs(A - B).sum())


def hellinger_distance(a, b) -> float:
    A, B = _values(a), _values(b)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} and {B.shape} differ")
    return float(np.sqrt(0.5 * np.sum((np.sqrt(np.clip(A, 0, None)) - np.sqrt(np.clip(B, 0, None))) ** 2)))


def component_error(result, spec: MixtureSpec, coordinate: int = 0) -> float:
    """``sum_k ||f_hat_sigma(k) - f_k||_2`` at one coordinate, minimized over sigma."""
    from .recovery import align_components

    comps = result.components_hat if hasattr(result, "components_hat") else result
    if coordinate not in comps:
        raise CoordinateNotRecovered(coordinate)
    _, errors = align_components(comps[coordinate], spec.components[coordinate])
    return float(errors.sum())


def pi_error(result, spec: MixtureSpec, permutation=None) -> float:
    perm = result.permutation if permutation is None else permutation
    if perm is None:
        raise ValueError("a permutation is needed; pass truth to recover_all or give one explicitly")
    return float(np.linalg.norm(result.pi_hat[np.asarray(perm)] - spec.pi))


@dataclass(frozen=True)
class TheoreticalBounds:
    m: int
    mu: float
    zeta: float
    C: float
    L_m: float
    eps_threshold_angle: float
    component_rate_const: float
    pi_rate_const: float
    sigma_lower: float
    eps_threshold_algo: float

    def to_dict(self) -> dict:
        return asdict(self)


def bounds_from_constants(m: int, mu: float, zeta: float, C: float) -> TheoreticalBounds:
    if not (mu < 1 and zeta > 0):
        raise NotEstimable(f"need mu < 1 and zeta > 0, got mu={mu}, zeta={zeta}")
    fact = math.factorial(m - 1)
    L_m = 4 * m**1.5 * fact
    q = 1 - mu
    return TheoreticalBounds(
        m=m,
        mu=mu,
        zeta=zeta,
        C=C,
        L_m=L_m,
        eps_threshold_angle=q ** (2 * m - 1) * zeta**2 / (32 * m**2.5 * L_m**2 * C ** (2 * m)),
        component_rate_const=8 * C**2 * L_m / (q ** (m - 1) * zeta),
        pi_rate_const=16 * C ** (2 * m - 2) * L_m**2 / (q ** (1.5 * (m - 1)) * zeta),
        sigma_lower=zeta * q**m / fact,
        eps_threshold_algo=zeta * q**m / (4 * fact),
    )


def theoretical_bounds(spec: MixtureSpec) -> TheoreticalBounds:
    prof = incoherence_profile(spec)
    return bounds_from_constants(spec.m, prof.mu, prof.zeta, prof.C)


def attach_bounds(diag, spec: MixtureSpec, probe=None) -> None:
    """Fill the spec-dependent fields of a diagnostics record in place."""
    try:
        b = theoretical_bounds(spec)
    except NotEstimable:
        return
    diag.sigma_lower_bound = b.sigma_lower
    if probe is not None and probe.a_hat is not None and probe.a_hat.size:
        delta = float(min(np.min(probe.a_hat), probe.min_gap if np.isfinite(probe.min_gap) else np.inf))
        if delta > 0 and probe.mass > 0:
            diag.rate_factor = 1.0 / (b.zeta**3 * (1 - b.mu) ** (3 * b.m) * delta * math.sqrt(probe.mass))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float


def slope_fit(points) -> SlopeFit:
    """Ordinary least squares line through ``(x, y)`` points."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] < 3 or P.shape[1] != 2:
        raise TooFewPoints("slope_fit needs at least three (x, y) points")
    x, y = P[:, 0], P[:, 1]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(float(slope), float(intercept), r2)
