"""Generalized EM for parametric families ``theta -> p_theta(x, y)``.

The generalized Q-function

    Q(theta, theta~) = sum_y pY(y) sum_x zeta_theta(x|y; beta) ln p_theta~(x, y)

lower-bounds ``L_beta(theta~) - L_beta(theta)`` up to the constant
``Q(theta, theta)`` (Jensen on the tilted posterior), so any ``theta~`` that
strictly improves Q also improves ``L_beta``. ``em_run`` iterates that step.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import softmax

from .errors import InnerOptimizerFailure, SupportViolation
from .likelihood import FiniteJoint, as_grid, as_marginal, log_generalized_likelihood, zeta_kernel

ASCENT_SLACK = 1e-10


@dataclass(frozen=True)
class ParametricFamily:
    """``eval`` maps a parameter vector to a joint grid (FiniteJoint or array)."""

    dim: int
    eval: Callable[[np.ndarray], object]
    bounds: Sequence[tuple[float, float]] | None = None
    name: str = ""

    def lower_upper(self):
        if self.bounds is None:
            return np.full(self.dim, -np.inf), np.full(self.dim, np.inf)
        b = np.asarray(self.bounds, dtype=float).reshape(self.dim, 2)
        return b[:, 0], b[:, 1]

    def check(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float).reshape(-1)
        if th.shape[0] != self.dim:
            raise ValueError(f"expected {self.dim} parameters, got {th.shape[0]}")
        lo, hi = self.lower_upper()
        if np.any(th < lo) or np.any(th > hi):
            raise ValueError(f"theta {th.tolist()} is outside the family bounds")
        return th

    def grid(self, theta) -> np.ndarray:
        return as_grid(self.eval(np.asarray(theta, dtype=float)))


@dataclass(frozen=True)
class InnerSettings:
    """Coordinate-ascent settings for the Q maximization.

    ``span`` limits each line search to ``theta_i +- span`` (intersected with
    the bounds). A move is accepted only if Q rises by more than the absolute
    amount ``q_tol``.
    """

    max_evals: int = 200
    xtol: float = 1e-10
    span: float = 2.0
    q_tol: float = 1e-17


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 500
    delta_tol: float = 1e-9
    patience: int = 3
    grad_tol: float = 1e-8
    fixed_tol: float = 1e-9


def lbeta(family, theta, pY, beta) -> float:
    return log_generalized_likelihood(family.grid(theta), pY, beta)


def q_function(family, theta, theta_tilde, pY, beta) -> float:
    """Generalized Q-function (see module docstring)."""
    w = as_marginal(pY)
    z = zeta_kernel(family.grid(theta), beta, w)
    pt = family.grid(theta_tilde)
    weight = z * w[None, :]
    live = weight > 0
    if np.any(pt[live] <= 0):
        raise SupportViolation("p_theta~ vanishes where zeta_theta * pY > 0")
    return float(np.sum(weight[live] * np.log(pt[live])))


def _inner_maximize(family, theta, pY, beta, inner: InnerSettings):
    # Maximizes the gain Q(theta, t) - Q(theta, theta) = sum w zeta ln(p_t / p_theta),
    # which stays accurate in absolute terms when the step is tiny.
    lo, hi = family.lower_upper()
    w = as_marginal(pY)
    p0 = family.grid(theta)
    weight = zeta_kernel(p0, beta, w) * w[None, :]
    live = weight > 0
    wl, base = weight[live], p0[live]
    evals = 0

    def gain(th):
        nonlocal evals
        evals += 1
        pt = family.grid(th)[live]
        if np.any(pt <= 0):
            return -math.inf
        return float(np.sum(wl * np.log(pt / base)))

    best = np.array(theta, dtype=float)
    g_best = 0.0
    per_search = max(8, inner.max_evals // (2 * family.dim))
    while evals < inner.max_evals:
        improved = False
        for i in range(family.dim):
            a = max(lo[i], best[i] - inner.span)
            b = min(hi[i], best[i] + inner.span)
            if not b > a:
                continue

            def neg(t, i=i):
                trial = best.copy()
                trial[i] = t
                v = gain(trial)
                return -v if math.isfinite(v) else 1e300

            res = minimize_scalar(
                neg, bounds=(a, b), method="bounded",
                options={"xatol": inner.xtol, "maxiter": per_search},
            )
            if not np.isfinite(res.fun):
                raise InnerOptimizerFailure(f"line search on coordinate {i} returned {res.fun!r}")
            g_new = -float(res.fun)
            if g_new > g_best + inner.q_tol:
                best[i] = float(res.x)
                g_best = g_new
                improved = True
            if evals >= inner.max_evals:
                break
        if not improved:
            break
    return best, g_best


def em_step(family, theta, pY, beta, inner: InnerSettings | None = None) -> np.ndarray:
    """One generalized EM step: maximize ``Q(theta, .)`` by coordinate ascent.

    Returns the input unchanged when no strict improvement of Q is found.
    """
    inner = inner or InnerSettings()
    th = family.check(theta)
    new, _ = _inner_maximize(family, th, pY, beta, inner)
    before = lbeta(family, th, pY, beta)
    after = lbeta(family, new, pY, beta)
    if not after >= before - ASCENT_SLACK:
        raise InnerOptimizerFailure(
            f"L_beta decreased from {before!r} to {after!r}; Q ascent bound violated"
        )
    return new


def lbeta_gradient(family, theta, pY, beta, step=1e-6) -> np.ndarray:
    """Central finite-difference gradient of ``L_beta`` (one-sided at bounds)."""
    th = np.asarray(theta, dtype=float)
    lo, hi = family.lower_upper()
    g = np.empty_like(th)
    for i in range(th.size):
        up, dn = th.copy(), th.copy()
        up[i] = min(th[i] + step, hi[i])
        dn[i] = max(th[i] - step, lo[i])
        g[i] = (lbeta(family, up, pY, beta) - lbeta(family, dn, pY, beta)) / (up[i] - dn[i])
    return g


@dataclass
class EmTrace:
    """Iterates ``(theta_k, L_beta(theta_k), |grad|_inf)`` and the stop reason.

    ``stop_reason`` is ``"fixed_point"`` (a step moved less than ``fixed_tol``),
    ``"delta_tol"`` (|dL| below tolerance for ``patience`` steps with the
    gradient below ``grad_tol``) or ``"max_iters"``.
    """

    thetas: list = field(default_factory=list)
    values: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    stop_reason: str = ""

    @property
    def iterations(self) -> int:
        return len(self.thetas) - 1

    @property
    def theta(self) -> np.ndarray:
        return self.thetas[-1]

    @property
    def value(self) -> float:
        return self.values[-1]

    def is_monotone(self, slack=ASCENT_SLACK) -> bool:
        v = np.asarray(self.values)
        return bool(np.all(np.diff(v) >= -slack))

    def to_csv(self, path=None) -> str:
        dim = len(self.thetas[0])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", *[f"theta_{i}" for i in range(dim)], "L_beta", "grad_norm"])
        for k, (th, v, g) in enumerate(zip(self.thetas, self.values, self.grad_norms)):
            w.writerow([k, *[format(float(t), ".17g") for t in th], format(v, ".17g"), format(g, ".17g")])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def em_run(family, theta0, pY, beta, stop: StopRule | None = None,
           inner: InnerSettings | None = None) -> EmTrace:
    stop = stop or StopRule()
    th = family.check(theta0)
    trace = EmTrace()

    def record(t):
        trace.thetas.append(np.array(t))
        trace.values.append(lbeta(family, t, pY, beta))
        trace.grad_norms.append(float(np.max(np.abs(lbeta_gradient(family, t, pY, beta)))))

    record(th)
    quiet = 0
    for _ in range(stop.max_iters):
        new = em_step(family, th, pY, beta, inner)
        record(new)
        if np.max(np.abs(new - th)) <= stop.fixed_tol:
            trace.stop_reason = "fixed_point"
            return trace
        th = new
        quiet = quiet + 1 if abs(trace.values[-1] - trace.values[-2]) < stop.delta_tol else 0
        if quiet >= stop.patience and trace.grad_norms[-1] <= stop.grad_tol:
            trace.stop_reason = "delta_tol"
            return trace
    trace.stop_reason = "max_iters"
    return trace


def lbeta_hessian(family, theta, pY, beta, step=1e-4) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    d = th.size
    f = lambda t: lbeta(family, t, pY, beta)
    H = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = step
            ej[j] = step
            H[i, j] = H[j, i] = (
                f(th + ei + ej) - f(th + ei - ej) - f(th - ei + ej) + f(th - ei - ej)
            ) / (4 * step * step)
    return H


def classify_stationary_point(family, theta, pY, beta, step=1e-4, tol=1e-6) -> dict:
    """Report finite-difference Hessian eigenvalues and their sign pattern.

    ``kind`` is ``"local_max"``, ``"local_min"``, ``"saddle"`` or
    ``"degenerate"`` (some eigenvalue within ``tol`` of zero). No stronger
    claim is made.
    """
    eig = np.linalg.eigvalsh(lbeta_hessian(family, theta, pY, beta, step))
    if np.any(np.abs(eig) <= tol):
        kind = "degenerate"
    elif np.all(eig < 0):
        kind = "local_max"
    elif np.all(eig > 0):
        kind = "local_min"
    else:
        kind = "saddle"
    return {"eigenvalues": eig, "kind": kind}


# --------------------------------------------------------------------------
# demo families

def discrete_family(upper=20.0) -> ParametricFamily:
    """The binary (g, h) model on x, y in {-1, +1}."""
    from .analytic import discrete_joint

    return ParametricFamily(
        2, lambda th: discrete_joint(th[0], th[1]), [(0.0, upper), (0.0, upper)], "discrete"
    )


def mixture_weight_family(components) -> ParametricFamily:
    """``p(x, y) = pi_x f_x(y)`` for two known rows ``f_x`` and unknown ``pi_1 = theta``."""
    f = np.asarray(components, dtype=float)
    if f.shape[0] != 2:
        raise ValueError("mixture_weight_family expects two component rows")
    f = f / f.sum(axis=1, keepdims=True)

    def build(th):
        pi = th[0]
        return np.vstack([(1 - pi) * f[0], pi * f[1]])

    return ParametricFamily(1, build, [(1e-12, 1 - 1e-12)], "mixture")


def standard_em_mixture(components, pY, pi0, iters=10000, tol=1e-15) -> float:
    """Closed-form EM update ``pi <- sum_y pY(y) p(x=1|y)`` for the mixture family."""
    f = np.asarray(components, dtype=float)
    f = f / f.sum(axis=1, keepdims=True)
    w = as_marginal(pY)
    pi = float(pi0)
    for _ in range(iters):
        num = pi * f[1]
        new = float(np.sum(w * num / ((1 - pi) * f[0] + num)))
        if abs(new - pi) < tol:
            return new
        pi = new
    return pi


def softmax_family(features) -> ParametricFamily:
    """``p(x, y) ∝ exp(sum_k theta_k A_k(x, y))`` for a feature tensor ``A[k, x, y]``."""
    A = np.asarray(features, dtype=float)
    d, n, m = A.shape

    def build(th):
        s = np.tensordot(th, A, axes=1).reshape(-1)
        return FiniteJoint(softmax(s).reshape(n, m))

    return ParametricFamily(d, build, None, "softmax")


def random_softmax_family(rng, dim, n, m) -> ParametricFamily:
    return softmax_family(rng.normal(size=(dim, n, m)))


def constant_family(joint, dim=1) -> ParametricFamily:
    grid = as_grid(joint)
    return ParametricFamily(dim, lambda th: grid, None, "constant")
