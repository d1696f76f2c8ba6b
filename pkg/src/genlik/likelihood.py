"""Generalized (free-energy) likelihood on finite joint distributions.

All grids are indexed ``p[x, y]`` with ``x`` the hidden variable (rows) and
``y`` the observed one (columns). Evaluators accept either a
:class:`FiniteJoint` or any nonnegative 2-D array; the arrays need not be
normalized, which lets the same code evaluate sub-blocks such as
``p(x, y, j)`` for a fixed experiment index ``j``.

Zero conventions are exact limits: ``0**beta == 0`` and ``0 * log 0 == 0``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import (
    AllZeroColumn,
    DimensionMismatch,
    InvalidDistribution,
    LogOfZero,
    NonPositiveBeta,
    SupportViolation,
)

NORM_TOL = 1e-12
RENORM_TOL = 1e-9


def _normalized(values, ndim, name):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatch(f"{name} is empty")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidDistribution(f"{name} has negative or non-finite entries")
    total = arr.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise InvalidDistribution(f"{name} sums to {total!r}, not 1")
    if abs(total - 1.0) > 0.0:
        arr = arr / total
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FiniteJoint:
    """An ``n x m`` probability grid ``p[x, y]``.

    Construction renormalizes totals within 1e-9 of one and rejects the rest.
    """

    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _normalized(self.p, 2, "joint"))

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def m(self) -> int:
        return self.p.shape[1]

    @property
    def shape(self):
        return self.p.shape

    def marginal_y(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def marginal_x(self) -> np.ndarray:
        return self.p.sum(axis=1)

    def conditional(self) -> np.ndarray:
        """Posterior ``p(x|y)``; all-zero columns stay zero."""
        col = self.marginal_y()
        out = np.zeros_like(self.p)
        nz = col > 0
        out[:, nz] = self.p[:, nz] / col[nz]
        return out

    def to_csv(self, path=None, value_name="p") -> str:
        """Long-format CSV with header ``x,y,<value_name>`` (0-based indices)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", value_name])
        for x in range(self.n):
            for y in range(self.m):
                w.writerow([x, y, format(float(self.p[x, y]), ".17g")])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "FiniteJoint":
        """Parse the long format written by :meth:`to_csv`.

        ``source`` is a path or the CSV text itself. The value column may be
        named ``p`` or ``p_hat``.
        """
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text()
        else:
            text = source
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise DimensionMismatch("empty grid CSV")
        key = "p" if "p" in rows[0] else "p_hat"
        xs = [int(r["x"]) for r in rows]
        ys = [int(r["y"]) for r in rows]
        grid = np.zeros((max(xs) + 1, max(ys) + 1))
        seen = np.zeros(grid.shape, dtype=bool)
        for x, y, r in zip(xs, ys, rows):
            grid[x, y] = float(r[key])
            seen[x, y] = True
        if not seen.all():
            raise DimensionMismatch("grid CSV does not cover every (x, y) cell")
        return cls(grid)


@dataclass(frozen=True, eq=False)
class ObservedMarginal:
    """Observed frequencies ``p(y)``."""

    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", _normalized(self.w, 1, "marginal"))

    @property
    def m(self) -> int:
        return self.w.shape[0]


def as_grid(joint) -> np.ndarray:
    if isinstance(joint, FiniteJoint):
        return joint.p
    arr = np.asarray(joint, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"joint must be 2-D, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidDistribution("joint has negative or non-finite entries")
    return arr


def as_marginal(pY) -> np.ndarray:
    if isinstance(pY, ObservedMarginal):
        return pY.w
    arr = np.asarray(pY, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"marginal must be 1-D, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidDistribution("marginal has negative or non-finite entries")
    return arr


def _check_beta(beta):
    if not beta > 0:
        raise NonPositiveBeta(f"beta must be positive, got {beta!r}")


def _prepare(joint, pY):
    p = as_grid(joint)
    w = as_marginal(pY)
    if p.shape[1] != w.shape[0]:
        raise DimensionMismatch(f"joint has {p.shape[1]} columns but pY has {w.shape[0]} entries")
    used = w > 0
    dead = used & ~(p > 0).any(axis=0)
    if dead.any():
        raise LogOfZero(f"observed values {np.flatnonzero(dead).tolist()} have zero model probability")
    return p, w, used


def log_marginal_likelihood(joint, pY) -> float:
    """``sum_y pY(y) ln sum_x p(x, y)``."""
    p, w, used = _prepare(joint, pY)
    col = p.sum(axis=0)
    return float(np.sum(w[used] * np.log(col[used])))


def _column_log_power_sums(p, beta):
    with np.errstate(divide="ignore"):
        logp = np.log(p)
    return logsumexp(beta * logp, axis=0)


def log_generalized_likelihood(joint, pY, beta) -> float:
    """``(1/beta) sum_y pY(y) ln sum_x p(x, y)**beta``.

    Power sums are evaluated in the log domain, so very large ``beta``
    (e.g. 1e4) does not underflow.
    """
    _check_beta(beta)
    p, w, used = _prepare(joint, pY)
    if beta == 1:
        return log_marginal_likelihood(p, w)
    lse = _column_log_power_sums(p[:, used], beta)
    return float(np.sum(w[used] * lse) / beta)


def h_likelihood(joint, pY) -> float:
    """The ``beta -> inf`` limit: ``sum_y pY(y) ln max_x p(x, y)``."""
    p, w, used = _prepare(joint, pY)
    return float(np.sum(w[used] * np.log(p[:, used].max(axis=0))))


def top_u_likelihood(joint, pY, U) -> float:
    """Average of ``sum_y pY(y) ln p(x_[u](y), y)`` over the ``U`` largest entries per column."""
    p, w, used = _prepare(joint, pY)
    if not 1 <= U <= p.shape[0]:
        raise DimensionMismatch(f"U={U} must lie in [1, n={p.shape[0]}]")
    # stable sort on the negated column keeps the lowest x first among ties
    order = np.argsort(-p[:, used], axis=0, kind="stable")[:U]
    top = np.take_along_axis(p[:, used], order, axis=0)
    if np.any(top == 0):
        raise LogOfZero(f"a top-{U} order statistic is zero")
    return float(np.sum(w[used] * np.log(top)) / U)


def zeta_kernel(joint, beta, pY=None) -> np.ndarray:
    """Tilted posterior ``p(x,y)**beta / sum_x p(x,y)**beta`` (one column per y).

    With ``pY`` given, all-zero columns where ``pY(y) == 0`` are left as zeros
    instead of raising.
    """
    _check_beta(beta)
    p = as_grid(joint)
    alive = (p > 0).any(axis=0)
    if pY is not None:
        w = as_marginal(pY)
        if w.shape[0] != p.shape[1]:
            raise DimensionMismatch("pY length does not match joint columns")
        bad = (w > 0) & ~alive
    else:
        bad = ~alive
    if bad.any():
        raise AllZeroColumn(f"columns {np.flatnonzero(bad).tolist()} are all zero")
    out = np.zeros_like(p)
    with np.errstate(divide="ignore"):
        logp = beta * np.log(p[:, alive])
    out[:, alive] = np.exp(logp - logsumexp(logp, axis=0))
    return out


def beta_derivative(joint, pY, beta) -> float:
    """``dL_beta/dbeta = (1/beta^2) sum_y pY(y) sum_x zeta ln zeta`` (never positive)."""
    _check_beta(beta)
    p, w, used = _prepare(joint, pY)
    z = zeta_kernel(p[:, used], beta)
    return float(np.sum(w[used] * xlogy(z, z).sum(axis=0)) / beta**2)


def entropy_profile(joint) -> np.ndarray:
    """Per-column entropy ``S_y`` of ``p(x|y)`` in nats (zero for empty columns)."""
    p = as_grid(joint)
    col = p.sum(axis=0)
    cond = np.divide(p, col, out=np.zeros_like(p), where=col > 0)
    return -xlogy(cond, cond).sum(axis=0)


def expansion_estimate(joint, pY, beta) -> float:
    """Second-order expansion of ``L_beta`` around ``beta = 1``.

    ``L_1 + (1-b) <S> + (1-b)^2 [<S> + 1/2 sum pY p(x|y) (ln p(x|y) + S_y)^2]``
    where ``<S> = sum_y pY(y) S_y``. Error is O((1-beta)^3).
    """
    _check_beta(beta)
    p, w, used = _prepare(joint, pY)
    L1 = log_marginal_likelihood(p, w)
    pu = p[:, used]
    cond = pu / pu.sum(axis=0)
    S = -xlogy(cond, cond).sum(axis=0)
    with np.errstate(divide="ignore"):
        logc = np.where(cond > 0, np.log(cond), 0.0)
    spread = np.where(cond > 0, cond * (logc + S) ** 2, 0.0).sum(axis=0)
    eps = 1.0 - beta
    mean_S = np.sum(w[used] * S)
    return float(L1 + eps * mean_S + eps**2 * (mean_S + 0.5 * np.sum(w[used] * spread)))


def hellinger(p, q) -> float:
    """``1 - sum sqrt(p q)`` for two distributions of the same shape."""
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(1.0 - np.sum(np.sqrt(a * b)))


def relative_entropy(p, q) -> float:
    """``sum p ln(p/q)``; raises :class:`SupportViolation` if ``p > 0`` where ``q == 0``."""
    a = np.asarray(p, dtype=np.float64)
    b = np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    if np.any((a > 0) & (b == 0)):
        raise SupportViolation("support of p is not contained in support of q")
    mask = a > 0
    return float(np.sum(a[mask] * (np.log(a[mask]) - np.log(b[mask]))))


def joint_entropy(joint) -> float:
    p = as_grid(joint)
    return float(-xlogy(p, p).sum())
