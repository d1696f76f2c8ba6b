"""Maximizers of ``L_beta`` over unknown joints under linear constraints (0 < beta < 1).

With ``alpha = 1/(beta - 1)`` (so ``alpha < -1``) the stationary joints have
the form

    p_hat(x, y) = pY(y) b(x, y)**alpha / sum_x' b(x', y)**(alpha + 1),
    b(x, y) = delta + gamma E(x, y).

For the single-average problem, normalization plus the average give
``delta + gamma E = 1``, so ``b = 1 + gamma (E(x, y) - E)``. Working in
``gamma`` keeps the spurious ``delta = 1`` root at ``gamma = 0`` where a
one-sided bracket excludes it.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp, softmax

from .errors import (
    DimensionMismatch,
    Infeasible,
    InvalidDistribution,
    RootBracketFailure,
    RootSolveFailure,
)
from .likelihood import FiniteJoint, as_marginal

DEFAULT_BETA = 0.95
# relative width below which the target counts as the unconstrained mean
MEAN_TOL = 1e-12


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_{x,y} E(x, y) p(x, y) = target``."""

    score: np.ndarray
    target: float

    def __post_init__(self):
        s = np.array(self.score, dtype=float)
        if s.ndim != 2 or not np.all(np.isfinite(s)):
            raise DimensionMismatch("score must be a finite 2-D grid")
        s.setflags(write=False)
        object.__setattr__(self, "score", s)
        object.__setattr__(self, "target", float(self.target))

    def affine(self, a, b) -> "LinearConstraint":
        return LinearConstraint(a * self.score + b, a * self.target + b)


@dataclass
class LagrangeSolution:
    """Solved joint with its multipliers.

    ``delta`` is a scalar (single average) or per-y vector (two constraints),
    expressed for the internally shifted score ``E + shift`` (all entries >= 1).
    ``gamma`` is shift-invariant.
    """

    joint: FiniteJoint
    delta: object
    gamma: float
    beta: float
    residuals: dict = field(default_factory=dict)
    shift: float = 0.0

    @property
    def p(self) -> np.ndarray:
        return self.joint.p

    @property
    def Gamma(self) -> float:
        """Gibbs-limit multiplier ``gamma / (1 - beta)``."""
        return self.gamma / (1.0 - self.beta)

    def marginal_y(self) -> np.ndarray:
        return self.joint.marginal_y()

    def to_csv(self, path=None) -> str:
        return self.joint.to_csv(path, value_name="p_hat")

    def sidecar(self) -> dict:
        d = self.delta
        return {
            "beta": self.beta,
            "delta": d.tolist() if isinstance(d, np.ndarray) else d,
            "gamma": self.gamma,
            "residual_marginal": self.residuals.get("marginal"),
            "residual_average": self.residuals.get("average"),
        }

    def sidecar_csv(self) -> str:
        rec = self.sidecar()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(rec))
        w.writerow([json.dumps(v) if isinstance(v, list) else _fmt(v) for v in rec.values()])
        return buf.getvalue()


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _check(pY, constraint, beta=None):
    w = as_marginal(pY)
    if abs(w.sum() - 1) > 1e-9:
        raise InvalidDistribution(f"pY sums to {w.sum()!r}")
    E = constraint.score
    if E.shape[1] != w.shape[0]:
        raise DimensionMismatch(f"score has {E.shape[1]} columns but pY has {w.shape[0]} entries")
    if beta is not None and not 0 < beta < 1:
        raise ValueError(
            f"constrained solvers need 0 < beta < 1, got {beta!r}; "
            "beta > 1 is handled by genlik.sparse"
        )
    return w, E


def feasible_E_bounds(pY, score) -> tuple[float, float]:
    w = as_marginal(pY)
    E = np.asarray(score, dtype=float)
    return float(np.sum(w * E.min(axis=0))), float(np.sum(w * E.max(axis=0)))


def unconstrained_mean(pY, score) -> float:
    """``sum_y pY(y) (1/n) sum_x E(x, y)``: the average under ``p(x|y) = 1/n``."""
    w = as_marginal(pY)
    return float(np.sum(w * np.asarray(score, dtype=float).mean(axis=0)))


def _check_feasible(w, E, target):
    lo, hi = feasible_E_bounds(w, E)
    if not lo < target < hi:
        raise Infeasible(f"target {target!r} is not strictly inside ({lo!r}, {hi!r})")
    return lo, hi


def _is_mean(target, mean, lo, hi):
    return abs(target - mean) <= MEAN_TOL * max(1.0, hi - lo, abs(mean))


def solve_known_prior(pX, pY, beta) -> FiniteJoint:
    """With both marginals fixed, the product ``p(x) p(y)`` is the global maximum (concavity)."""
    a = as_marginal(pX)
    w = as_marginal(pY)
    if not 0 < beta < 1:
        raise ValueError(f"solve_known_prior needs 0 < beta < 1, got {beta!r}")
    return FiniteJoint(np.outer(a, w))


# --------------------------------------------------------------------------
# single linear average

def _log_ratio(gamma, e, alpha):
    """Per column ``ln sum_x b**alpha - ln sum_x b**(alpha+1)`` with ``b = 1 + gamma e``."""
    lb = np.log1p(gamma * e)
    return logsumexp(alpha * lb, axis=0) - logsumexp((alpha + 1) * lb, axis=0)


def _single_residual(gamma, e, w, alpha):
    # ln sum_y pY(y) ratio_y ; zero at a normalized stationary point
    return float(logsumexp(_log_ratio(gamma, e, alpha), b=w))


def normalization_residual(pY, constraint: LinearConstraint, beta, gamma) -> float:
    """``ln sum p_hat`` for the stationary form at a trial ``gamma`` (zero at a solution).

    Returns ``+inf`` when some live bracket ``1 + gamma (E - target)`` is not positive.
    """
    w, E = _check(pY, constraint, beta)
    used = w > 0
    e = E[:, used] - constraint.target
    if np.any(1 + gamma * e <= 0):
        return math.inf
    return _single_residual(gamma, e, w[used], 1.0 / (beta - 1.0))


def _joint_from_gamma(gamma, e, w, alpha):
    lb = np.log1p(gamma * e)
    logp = np.log(w)[None, :] + alpha * lb - logsumexp((alpha + 1) * lb, axis=0)[None, :]
    return np.exp(logp)


def _bracket_scan(f, bound, n_coarse=60):
    """Scan ``t * bound`` for the first sign change from negative to positive.

    ``f(0) = 0`` with ``f`` dipping negative before blowing up at the bound,
    so the grid refines geometrically towards both ends.
    """
    ts = np.concatenate([
        np.geomspace(1e-10, 0.5, n_coarse // 2),
        1 - np.geomspace(0.5, 1e-15, n_coarse // 2)[1:],
    ])
    vals = []
    prev_t, prev_v = None, None
    for t in ts:
        v = f(t * bound)
        vals.append((float(t), v))
        if prev_v is not None and prev_v < 0 <= v:
            return prev_t * bound, t * bound, vals
        prev_t, prev_v = t, v
    raise RootBracketFailure("no sign change found away from gamma = 0 (delta = 1)", diagnostics=vals)


def solve_known_average(pY, constraint: LinearConstraint, beta=DEFAULT_BETA) -> LagrangeSolution:
    """Maximize ``L_beta`` over joints with ``sum p = 1`` and ``sum E p = target``.

    The marginal ``p_hat(y)`` is free and generally differs from ``pY``.
    """
    w, E = _check(pY, constraint, beta)
    target = constraint.target
    lo, hi = _check_feasible(w, E, target)
    alpha = 1.0 / (beta - 1.0)
    used = w > 0
    Eu, wu = E[:, used], w[used]
    shift = -float(E.min()) + 1.0
    mean = unconstrained_mean(w, E)

    if _is_mean(target, mean, lo, hi):
        gamma = 0.0
        pu = np.broadcast_to(wu / E.shape[0], Eu.shape).copy()
    else:
        e = Eu - target
        # b > 0 on every live cell; the root sits on the side sign(mean - target)
        bound = 1.0 / (target - Eu.min()) if mean > target else -1.0 / (Eu.max() - target)
        f = lambda g: _single_residual(g, e, wu, alpha)
        a, b, _ = _bracket_scan(f, bound)
        gamma = brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        pu = _joint_from_gamma(gamma, e, wu, alpha)

    p = np.zeros_like(E)
    p[:, used] = pu
    res = {
        "marginal": abs(float(p.sum()) - 1.0),
        "average": abs(float(np.sum(E * p)) - target),
    }
    delta = 1.0 - gamma * (target + shift)
    return LagrangeSolution(FiniteJoint(p / p.sum()), delta, float(gamma), beta, res, shift)


def gibbs_limit_solution(pY, constraint: LinearConstraint):
    """``beta -> 1-`` limit: ``p_hat(x|y) ∝ exp(-Gamma E(x, y))`` with ``p_hat(y) = pY(y)``.

    Returns ``(joint, Gamma)``.
    """
    w, E = _check(pY, constraint)
    target = constraint.target
    lo, hi = _check_feasible(w, E, target)
    used = w > 0
    Eu, wu = E[:, used], w[used]
    mean = unconstrained_mean(w, E)

    def avg(G):
        return float(np.sum(wu * np.sum(Eu * softmax(-G * Eu, axis=0), axis=0)))

    if _is_mean(target, mean, lo, hi):
        G = 0.0
    else:
        # avg is decreasing in Gamma; expand until the target is bracketed
        sgn = 1.0 if mean > target else -1.0
        scale = 1.0 / max(float(np.ptp(Eu)), 1e-300)
        step = scale
        while (avg(sgn * step) - target) * sgn > 0:
            step *= 2.0
            if step > 1e6 * scale:
                raise RootBracketFailure("Gamma bracket expansion failed", diagnostics={"last": step})
        a, b = sorted((0.0, sgn * step))
        G = brentq(lambda g: avg(g) - target, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    p = np.zeros_like(E)
    p[:, used] = wu * softmax(-G * Eu, axis=0)
    return FiniteJoint(p), float(G)


# --------------------------------------------------------------------------
# two constraints: per-y marginal and linear average

def _solve_c(ex, g, alpha):
    """Find ``c`` in (0, 1] with ``sum b**(alpha+1) = sum b**alpha``, ``b = c + g ex``.

    ``ex >= 0`` with a zero entry. Returns ``(c, residual)``.
    """
    if g * ex.max() == 0:
        return 1.0, 0.0

    def h(s):
        lb = np.log(math.exp(s) + g * ex)
        return float(logsumexp((alpha + 1) * lb) - logsumexp(alpha * lb))

    # h ~ ln c -> -inf as c -> 0 and h >= 0 at c = 1
    hi = 0.0
    lo = -1.0
    while h(lo) >= 0:
        lo *= 2.0
        if lo < -700:
            raise RootSolveFailure("per-y normalization root not bracketed", residuals=[h(lo)])
    if h(hi) <= 0:
        return 1.0, h(hi)
    s = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(s), h(s)


def _two_constraint_state(gamma, E, w, alpha):
    """Per-y offsets and the joint for a given ``gamma``."""
    n, m = E.shape
    Emin, Emax = E.min(axis=0), E.max(axis=0)
    ref = Emin if gamma >= 0 else Emax
    g = abs(gamma)
    cs = np.empty(m)
    resid = np.empty(m)
    cond = np.empty_like(E)
    for y in range(m):
        ex = (E[:, y] - ref[y]) * (1.0 if gamma >= 0 else -1.0)
        c, r = _solve_c(ex, g, alpha)
        cs[y], resid[y] = c, r
        lb = np.log(c + g * ex)
        cond[:, y] = np.exp(alpha * lb - logsumexp((alpha + 1) * lb))
    delta = cs - gamma * ref
    return delta, cond * w[None, :], resid


def solve_two_constraints(pY, constraint: LinearConstraint, beta=DEFAULT_BETA) -> LagrangeSolution:
    """Maximize ``L_beta`` with ``p_hat(y) = pY(y)`` for every y and ``sum E p = target``."""
    w, E = _check(pY, constraint, beta)
    target = constraint.target
    lo, hi = _check_feasible(w, E, target)
    alpha = 1.0 / (beta - 1.0)
    used = w > 0
    Eu, wu = E[:, used], w[used]
    shift = -float(E.min()) + 1.0
    mean = unconstrained_mean(w, E)

    def avg(g):
        _, p, _ = _two_constraint_state(g, Eu, wu, alpha)
        return float(np.sum(Eu * p))

    if _is_mean(target, mean, lo, hi):
        gamma = 0.0
    else:
        # avg runs from the mean at gamma = 0 to the lower (upper) bound as gamma -> +inf (-inf)
        sgn = 1.0 if mean > target else -1.0
        prev, step = 0.0, 1.0 / max(float(np.ptp(Eu)), 1e-300)
        while (avg(sgn * step) - target) * sgn > 0:
            prev, step = step, step * 2.0
            if step > 1e12:
                raise RootSolveFailure("gamma bracket expansion failed", residuals=[avg(sgn * step) - target])
        a, b = sorted((sgn * prev, sgn * step))
        gamma = brentq(lambda g: avg(g) - target, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    delta_u, pu, per_y = _two_constraint_state(gamma, Eu, wu, alpha)
    p = np.zeros_like(E)
    p[:, used] = pu
    delta = np.full(E.shape[1], np.nan)
    # shifted coordinates: b = delta + gamma E = (delta - gamma shift) + gamma (E + shift)
    delta[used] = delta_u - gamma * shift
    res = {
        "marginal": float(np.max(np.abs(p.sum(axis=0) - w))),
        "average": abs(float(np.sum(E * p)) - target),
        "per_y": per_y,
    }
    if not (res["marginal"] <= 1e-10 and res["average"] <= 1e-10):
        raise RootSolveFailure("two-constraint system not solved to 1e-10", residuals=per_y)
    return LagrangeSolution(FiniteJoint(p), delta, float(gamma), beta, res, shift)
