"""Closed-form worked examples.

* the binary hidden/observed model ``p(x,y) ∝ exp(g x + h x y)``, whose
  observed marginal only fixes ``z = tanh(g) tanh(h)``;
* the continuous exponential model ``p(x,y) = g e^{-gx} h x e^{-hxy}``, whose
  observed marginal only fixes ``chi = g/h``;
* the maximin-estimator construction for the binary model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .likelihood import FiniteJoint, ObservedMarginal


class _Diverged:
    """Marker for a coordinate that runs off to +infinity."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "DIVERGED"

    def __reduce__(self):
        return (_Diverged, ())


DIVERGED = _Diverged()

# bisection interval for the symmetric root
ROOT_LO, ROOT_HI = 1e-12, 50.0


def _val(v):
    return math.inf if v is DIVERGED else float(v)


@dataclass(frozen=True)
class DiscreteModelParams:
    g: float
    h: float

    @property
    def z(self) -> float:
        return discrete_z(self.g, self.h)


@dataclass(frozen=True)
class ContinuousModelParams:
    g: float
    h: float
    H: float | None = None

    @property
    def chi(self) -> float:
        return self.g / self.h


# --------------------------------------------------------------------------
# binary model

def discrete_z(g, h) -> float:
    return math.tanh(g) * math.tanh(h)


def discrete_joint(g, h) -> FiniteJoint:
    """2x2 grid; row/column 0 is the value -1, index 1 is +1."""
    s = np.array([-1.0, 1.0])
    x, y = s[:, None], s[None, :]
    p = np.exp(g * x + h * x * y) / (4 * math.cosh(h) * math.cosh(g))
    return FiniteJoint(p)


def discrete_marginal(z) -> ObservedMarginal:
    """``p(y) = (1 + z y)/2`` ordered as (y=-1, y=+1)."""
    return ObservedMarginal([(1 - z) / 2, (1 + z) / 2])


def _logcosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x)) - math.log(2)


def discrete_Lbeta(g_hat, h_hat, z, beta) -> float:
    """``L_beta`` of the binary model with the (g,h)-independent constants dropped.

    Equals ``log_generalized_likelihood(discrete_joint(g, h), discrete_marginal(z), beta)
    + ln 4 - ln(2)/beta``.
    """
    return (
        -_logcosh(h_hat)
        - _logcosh(g_hat)
        + (1 + z) / (2 * beta) * _logcosh(beta * g_hat + beta * h_hat)
        + (1 - z) / (2 * beta) * _logcosh(beta * g_hat - beta * h_hat)
    )


def symmetric_root_residual(g, z, beta) -> float:
    return (1 + z) / 2 * math.tanh(2 * beta * g) - math.tanh(g)


def _bisect(f, lo, hi, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DiscreteSolution:
    """Maximizer(s) of the binary-model ``L_beta``.

    ``regime`` is one of ``"trivial"`` (g = h = 0), ``"symmetric"`` (g = h > 0),
    ``"extreme"`` (two maxima, one coordinate :data:`DIVERGED`) or
    ``"manifold"`` (beta = 1: every point with tanh g tanh h = z).
    """

    regime: str
    z: float
    beta: float
    points: tuple = ()
    residual: float = 0.0

    @property
    def g_hat(self):
        return self.points[0][0] if self.points else None

    @property
    def h_hat(self):
        return self.points[0][1] if self.points else None

    def as_record(self) -> dict:
        pts = [[_json_coord(c) for c in pt] for pt in self.points]
        rec = {"regime": self.regime, "z": self.z, "beta": self.beta, "points": pts, "residual": self.residual}
        if self.regime == "manifold":
            rec["manifold"] = "tanh(g_hat)*tanh(h_hat) = z"
        return rec


def _json_coord(c):
    return "diverged" if c is DIVERGED else float(c)


def discrete_solve(z, beta) -> DiscreteSolution:
    if not 0 < z < 1:
        raise ValueError(f"z must lie in (0, 1), got {z!r}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    if beta == 1:
        return DiscreteSolution("manifold", z, beta)
    if beta > 1:
        a = math.atanh(z)
        return DiscreteSolution("extreme", z, beta, ((DIVERGED, a), (a, DIVERGED)))
    if (1 + z) * beta <= 1:
        return DiscreteSolution("trivial", z, beta, ((0.0, 0.0),))
    # residual is positive near 0 (slope (1+z)beta - 1 > 0) and negative at ROOT_HI
    g = _bisect(lambda t: symmetric_root_residual(t, z, beta), ROOT_LO, ROOT_HI)
    return DiscreteSolution("symmetric", z, beta, ((g, g),), abs(symmetric_root_residual(g, z, beta)))


def discrete_overlap(z, g_hat, h_hat) -> float:
    """Average overlap of the MAP decoder ``sign(g + h y)`` under ``p_z(y)``.

    Either coordinate may be :data:`DIVERGED`.
    """
    g, h = _val(g_hat), _val(h_hat)
    if math.isinf(g) or math.isinf(h):
        plus = minus = 1.0
    else:
        plus, minus = math.tanh(abs(g + h)), math.tanh(abs(g - h))
    return (1 + z) / 2 * plus + (1 - z) / 2 * minus


# --------------------------------------------------------------------------
# continuous model

def _chi_term(chi, chi_hat):
    """``(chi ln chi - chi_hat ln chi_hat)/(chi - chi_hat)`` with its limit ``ln chi + 1``."""
    d = chi - chi_hat
    if abs(d) <= 1e-7 * chi:
        # second-order Taylor expansion of the divided difference around the midpoint
        c = 0.5 * (chi + chi_hat)
        return math.log(c) + 1 + d * d / (24 * c * c)
    return (chi * math.log(chi) - chi_hat * math.log(chi_hat)) / d


def continuous_Lbeta(g_hat, h_hat, chi_true, beta) -> float:
    """Exact ``L_beta`` of the continuous model for an infinite sample.

    ``(1/b) ln Gamma(b) - ln b + (1 - 1/b) ln h + ln chi_hat
    - ((b+1)/b) (chi ln chi - chi_hat ln chi_hat)/(chi - chi_hat)``
    """
    if min(g_hat, h_hat, chi_true, beta) <= 0:
        raise ValueError("g_hat, h_hat, chi_true and beta must all be positive")
    chi_hat = g_hat / h_hat
    return (
        gammaln(beta) / beta
        - math.log(beta)
        + (1 - 1 / beta) * math.log(h_hat)
        + math.log(chi_hat)
        - (beta + 1) / beta * _chi_term(chi_true, chi_hat)
    )


def _chi_profile(chi_hat, chi_true, beta):
    return math.log(chi_hat) - (beta + 1) / beta * _chi_term(chi_true, chi_hat)


def best_chi_hat(chi_true, beta, xatol=1e-12) -> float:
    """Maximize the ``chi_hat``-dependent part of :func:`continuous_Lbeta`."""
    if beta == 1:
        return float(chi_true)
    lc = math.log(chi_true)
    res = minimize_scalar(
        lambda s: -_chi_profile(math.exp(s), chi_true, beta),
        bounds=(lc - 30.0, lc + 30.0),
        method="bounded",
        options={"xatol": xatol, "maxiter": 500},
    )
    return math.exp(res.x)


@dataclass(frozen=True)
class ContinuousSolution:
    """``status`` is ``"ok"``, ``"diverged"`` or ``"not_sensible"``.

    ``h_hat`` is a number, :data:`DIVERGED` (runs to infinity), ``0.0`` in the
    limit sense for beta < 1, or ``None`` when any value works (beta = 1).
    """

    status: str
    beta: float
    chi_true: float
    chi_hat: float | None
    h_hat: object = None
    note: str = ""

    @property
    def g_hat(self):
        if self.status == "ok" and isinstance(self.h_hat, float) and self.chi_hat is not None:
            return self.chi_hat * self.h_hat
        return None

    def as_record(self) -> dict:
        h = self.h_hat
        return {
            "status": self.status,
            "beta": self.beta,
            "chi_true": self.chi_true,
            "chi_hat": self.chi_hat,
            "h_hat": "diverged" if h is DIVERGED else h,
            "g_hat": self.g_hat,
            "note": self.note,
        }


def continuous_solve(chi_true, beta, cap=None) -> ContinuousSolution:
    """Maximize :func:`continuous_Lbeta` over ``(chi_hat, h_hat)``.

    The two directions separate: ``chi_hat = f_beta(chi)`` always, while the
    ``(1 - 1/beta) ln h_hat`` term sends ``h_hat`` to 0 for beta < 1 and to
    infinity for beta > 1. An upper cap ``h_hat <= H`` therefore binds only
    for beta > 1.
    """
    if chi_true <= 0 or beta <= 0:
        raise ValueError("chi_true and beta must be positive")
    if cap is not None and cap <= 0:
        raise ValueError("cap must be positive")
    if beta == 1:
        return ContinuousSolution("ok", beta, chi_true, float(chi_true), None,
                                  "marginal likelihood recovers chi; h_hat undetermined")
    chi_hat = best_chi_hat(chi_true, beta)
    if beta < 1:
        return ContinuousSolution("not_sensible" if cap is not None else "diverged", beta, chi_true,
                                  chi_hat, 0.0, "L_beta increases as h_hat -> 0")
    if cap is None:
        return ContinuousSolution("diverged", beta, chi_true, chi_hat, DIVERGED,
                                  "L_beta increases without bound as h_hat -> infinity")
    return ContinuousSolution("ok", beta, chi_true, chi_hat, float(cap), "h_hat sits on the cap")


# --------------------------------------------------------------------------
# maximin construction

U_CROSSOVER = -math.log(math.sqrt(2) - 1)
INF_PROXY = 20.0


def overlap_plus(u, u_t):
    """``1 - dist`` for y = +1 as a function of the true ``u`` and estimator ``u_t``."""
    return np.cosh((u + u_t) / 2) / np.sqrt(np.cosh(u) * np.cosh(u_t))


def overlap_minus(v, v_t):
    return np.cosh((v + v_t) / 2) / np.sqrt(np.cosh(v) * np.cosh(v_t))


def worst_plus_small(u_t):
    """Worst case over ``u`` attained as ``u -> infinity``."""
    return np.exp(u_t / 2) / np.sqrt(2 * np.cosh(u_t))


def worst_plus_large(u_t):
    """Worst case over ``u`` attained as ``u -> 0``."""
    return np.cosh(u_t / 2) / np.sqrt(np.cosh(u_t))


def worst_minus(v_t):
    return np.exp(-np.abs(v_t) / 2) / np.sqrt(2 * np.cosh(v_t))


def averaged_overlap(u, v, u_t, v_t):
    """Observation-averaged ``1 - dist`` with weights ``p(y=+1) ∝ cosh u``, ``p(y=-1) ∝ cosh v``."""
    cu, cv = np.cosh(u), np.cosh(v)
    return (cu * overlap_plus(u, u_t) + cv * overlap_minus(v, v_t)) / (cu + cv)


@dataclass
class MaximinReport:
    u_grid: np.ndarray
    v_grid: np.ndarray
    profile_plus: np.ndarray
    profile_minus: np.ndarray
    profile_averaged: np.ndarray
    u_crossover: float
    u_argmax: float
    v_argmax: float
    v_argmax_averaged: float
    u_spread_averaged: float
    endpoint_values: dict = field(default_factory=dict)

    def records(self):
        yield {
            "kind": "summary",
            "u_crossover": self.u_crossover,
            "u_tilde_argmax": self.u_argmax,
            "v_tilde_argmax": self.v_argmax,
            "v_tilde_argmax_averaged": self.v_argmax_averaged,
            "u_tilde_spread_averaged": self.u_spread_averaged,
            **self.endpoint_values,
        }
        for u, a in zip(self.u_grid, self.profile_plus):
            yield {"kind": "profile_plus", "u_tilde": float(u), "worst_overlap": float(a)}
        for v, a in zip(self.v_grid, self.profile_minus):
            yield {"kind": "profile_minus", "v_tilde": float(v), "worst_overlap": float(a)}


def maximin_demo(u_max=INF_PROXY, n_grid=4001, n_inner=801) -> MaximinReport:
    """Brute-force the maximin estimators of the binary model.

    The worst case over the unknown (u, v) is found by grid minimization with
    ``|v| = 20`` standing in for infinity; the estimators then maximize the
    worst-case overlap.
    """
    u_t = np.linspace(0.0, u_max, n_grid)
    v_t = np.linspace(-u_max, u_max, 2 * n_grid - 1)
    u_in = np.concatenate([np.linspace(1e-9, 1.0, n_inner), np.linspace(1.0, u_max, n_inner)[1:]])
    v_in = np.linspace(-u_max, u_max, 2 * n_inner - 1)

    prof_plus = overlap_plus(u_in[:, None], u_t[None, :]).min(axis=0)
    prof_minus = overlap_minus(v_in[:, None], v_t[None, :]).min(axis=0)

    # averaged criterion on a coarser estimator grid; joint min over (u, v)
    ua = np.linspace(0.0, 5.0, 26)
    va = np.linspace(-5.0, 5.0, 51)
    uu, vv = np.meshgrid(u_in[::8], v_in[::4], indexing="ij")
    prof_avg = np.array([[averaged_overlap(uu, vv, a, b).min() for b in va] for a in ua])
    best_v = va[np.argmax(prof_avg, axis=1)]
    at_zero = prof_avg[:, np.argmin(np.abs(va))]

    return MaximinReport(
        u_grid=u_t,
        v_grid=v_t,
        profile_plus=prof_plus,
        profile_minus=prof_minus,
        profile_averaged=prof_avg,
        u_crossover=U_CROSSOVER,
        u_argmax=float(u_t[np.argmax(prof_plus)]),
        v_argmax=float(v_t[np.argmax(prof_minus)]),
        v_argmax_averaged=float(np.median(best_v)),
        u_spread_averaged=float(at_zero.max() - at_zero.min()),
        endpoint_values={
            "worst_overlap_at_u0": float(prof_plus[0]),
            "worst_overlap_at_u_inf_proxy": float(prof_plus[-1]),
            "worst_overlap_at_u_crossover": float(worst_plus_small(U_CROSSOVER)),
        },
    )
