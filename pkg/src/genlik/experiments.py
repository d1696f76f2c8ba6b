"""Seeded Monte-Carlo studies.

Every sample ``k`` draws from its own substream ``SeedSequence([seed, k])``,
and results are reduced in ``k`` order, so outputs are identical for any
worker-thread count.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constrained import LinearConstraint, feasible_E_bounds, solve_known_average
from .errors import (
    GenlikError,
    Infeasible,
    MomentSolveFailure,
    RejectionBudgetExhausted,
)
from .likelihood import FiniteJoint, as_marginal, hellinger, relative_entropy

FIG1_PY = (0.4, 0.01, 0.5, 0.09)
FIG1_BETAS = (0.85, 0.9, 0.95)
REJECTION_CHUNK = 4096
CONSTRAINT_TOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.stream_id]))


def default_threads() -> int:
    env = os.environ.get("GENLIK_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ordered_map(fn, items, threads=1):
    """``map`` with optional threads; results always come back in input order."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def score_grid(name, n, m) -> np.ndarray:
    """Builtin scores on ``x = 1..n``, ``y = 1..m``: ``abs-diff`` and ``product``."""
    x = np.arange(1, n + 1, dtype=float)[:, None]
    y = np.arange(1, m + 1, dtype=float)[None, :]
    if name == "abs-diff":
        return np.abs(x - y)
    if name == "product":
        return x * y
    raise ValueError(f"unknown score {name!r}; use 'abs-diff' or 'product'")


# --------------------------------------------------------------------------
# random joints and constrained conditionals

def sample_random_joint(n, m, rng) -> FiniteJoint:
    """``n*m`` uniforms on [0, 1] normalized to sum to one."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    P = rng.uniform(size=(n, m))
    return FiniteJoint(P / P.sum())


def _constraint_residual(q, w, E, target):
    return np.abs(np.einsum("...xy,y,xy->...", q, w, E) - target)


def sample_constrained_conditionals(pY, score, target, rng, count, max_tries=100_000,
                                    chunk=REJECTION_CHUNK) -> np.ndarray:
    """``count`` random conditionals ``q(x|y)`` with ``sum pY q E = target``.

    Draws ``n*m - 1`` uniform weights, solves the linear equation for the
    weight of the last cell ``(n, m)`` in closed form, and accepts when it is
    nonnegative. Returns an array of shape ``(count, n, m)``.
    """
    w = as_marginal(pY)
    E = np.asarray(score, dtype=float)
    n, m = E.shape
    if w.shape[0] != m:
        raise ValueError("pY length does not match score columns")
    if n == 1:
        if _constraint_residual(np.ones((1, m)), w, E, target) > CONSTRAINT_TOL:
            raise Infeasible("with n = 1 the constraint is fixed and does not hold")
        return np.ones((count, 1, m))
    lo, hi = feasible_E_bounds(w, E)
    if not lo < target < hi:
        raise Infeasible(f"target {target!r} is not strictly inside ({lo!r}, {hi!r})")
    e = E - target
    out = np.empty((count, n, m))
    got = 0
    dry = 0
    while got < count:
        P = rng.uniform(size=(chunk, n, m))
        P[:, n - 1, m - 1] = 0.0
        col = P.sum(axis=1)
        # known columns y < m, and the partial last column
        C = np.einsum("y,kxy,xy->k", w[: m - 1], P[:, :, : m - 1] / col[:, None, : m - 1], e[:, : m - 1])
        a = P[:, :, m - 1] @ e[:, m - 1]
        s = col[:, m - 1]
        pm, et = w[m - 1], e[n - 1, m - 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -(C * s + pm * a) / (C + pm * et)
        ok = np.isfinite(t) & (t >= 0)
        P[:, n - 1, m - 1] = np.where(ok, t, 0.0)
        Q = P / P.sum(axis=1, keepdims=True)
        ok &= _constraint_residual(Q, w, E, target) <= CONSTRAINT_TOL
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            dry += chunk
            if dry >= max_tries:
                raise RejectionBudgetExhausted(f"no acceptance in {dry} consecutive draws")
            continue
        dry = 0
        take = idx[: count - got]
        out[got: got + take.size] = Q[take]
        got += take.size
    return out


def sample_constrained_conditional(pY, score, target, rng, max_tries=100_000) -> np.ndarray:
    """One conditional from :func:`sample_constrained_conditionals`, drawn one trial at a time."""
    return sample_constrained_conditionals(pY, score, target, rng, 1, max_tries, chunk=1)[0]


# --------------------------------------------------------------------------
# D1 / D2 / D3 comparisons

def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


@dataclass
class ComparisonReport:
    """Averages with standard errors (sample stdev / sqrt(S)) and per-sample terms."""

    kind: str
    n: int
    m: int
    beta: float
    S: int
    seed: int
    score: str
    M: int | None = None
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def _col(self, key):
        return [r[key] for r in self.records]

    def stat(self, key):
        return _mean_se(self._col(key))

    @property
    def columns(self):
        return ["D1_term", "D2_term", "K1_term", "K2_term"] if self.kind == "d1d2" else ["dD3_term", "dK3_term"]

    def summary(self) -> dict:
        names = {"D1_term": "D1", "D2_term": "D2", "K1_term": "K1", "K2_term": "K2",
                 "dD3_term": "DeltaD3", "dK3_term": "DeltaK3"}
        out = {"kind": self.kind, "n": self.n, "m": self.m, "score": self.score, "beta": self.beta,
               "S": self.S, "M": self.M, "seed": self.seed,
               "used": len(self.records), "skipped": len(self.skipped)}
        for c in self.columns:
            mean, se = self.stat(c)
            out[names[c]] = mean
            out[names[c] + "_se"] = se
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k", *self.columns])
        for r in self.records:
            wr.writerow([r["k"], *[format(r[c], ".17g") for c in self.columns]])
        return buf.getvalue()

    # attribute-style access to the headline numbers
    def __getattr__(self, name):
        keys = {"D1": "D1_term", "D2": "D2_term", "K1": "K1_term", "K2": "K2_term",
                "DeltaD3": "dD3_term", "DeltaK3": "dK3_term"}
        if name in keys and keys[name] in self.columns:
            return self.stat(keys[name])[0]
        raise AttributeError(name)


def _resolve_score(score, n, m):
    if isinstance(score, str):
        return score, score_grid(score, n, m)
    E = np.asarray(score, dtype=float)
    if E.shape != (n, m):
        raise ValueError(f"score grid has shape {E.shape}, expected {(n, m)}")
    return "custom", E


def _truth(rng, n, m, E):
    pi = sample_random_joint(n, m, rng).p
    w = pi.sum(axis=0)
    return pi, w, float(np.sum(E * pi))


def _d1d2_sample(k, n, m, E, beta, seed):
    rng = RngStream(seed, k).generator()
    pi, w, Ek = _truth(rng, n, m, E)
    try:
        p_hat = solve_known_average(w, LinearConstraint(E, Ek), beta).p
        guess = w * sample_constrained_conditionals(w, E, Ek, rng, 1)[0]
    except GenlikError as exc:
        return {"k": k, "error": type(exc).__name__, "message": str(exc)}
    return {
        "k": k,
        "D1_term": hellinger(pi, p_hat),
        "D2_term": hellinger(pi, guess),
        "K1_term": relative_entropy(pi, p_hat),
        "K2_term": relative_entropy(pi, guess),
    }


def _split(report, results):
    for r in results:
        (report.skipped if "error" in r else report.records).append(r)
    return report


def run_d1_d2(n, m, score, beta=0.95, S=1000, seed=0, threads=1) -> ComparisonReport:
    """Solved joint vs one random constrained guess, averaged over ``S`` random truths."""
    if S < 1:
        raise ValueError("S must be at least 1")
    name, E = _resolve_score(score, n, m)
    results = ordered_map(lambda k: _d1d2_sample(k, n, m, E, beta, seed), range(S), threads)
    return _split(ComparisonReport("d1d2", n, m, beta, S, seed, name), results)


def _d3_sample(k, n, m, E, beta, M, seed):
    rng = RngStream(seed, k).generator()
    pi, w, Ek = _truth(rng, n, m, E)
    try:
        p_hat = solve_known_average(w, LinearConstraint(E, Ek), beta).p
        qbar = sample_constrained_conditionals(w, E, Ek, rng, M).mean(axis=0)
    except GenlikError as exc:
        return {"k": k, "error": type(exc).__name__, "message": str(exc)}
    avg = w * qbar
    return {
        "k": k,
        "dD3_term": hellinger(pi, avg) - hellinger(pi, p_hat),
        "dK3_term": relative_entropy(pi, avg) - relative_entropy(pi, p_hat),
    }


def run_d3(n, m, score, beta=0.95, S=300, M=10_000, seed=0, threads=1) -> ComparisonReport:
    """Solved joint vs the average of ``M`` random constrained conditionals."""
    if S < 1 or M < 1:
        raise ValueError("S and M must be at least 1")
    name, E = _resolve_score(score, n, m)
    results = ordered_map(lambda k: _d3_sample(k, n, m, E, beta, M, seed), range(S), threads)
    return _split(ComparisonReport("d3", n, m, beta, S, seed, name, M=M), results)


# --------------------------------------------------------------------------
# Fig. 1 sweep

def fig1_default_grid(points=25) -> np.ndarray:
    """``points`` interior targets evenly spaced in (2.28, 9.12); 25 includes the mean 5.7."""
    return np.linspace(2.28, 9.12, points + 2)[1:-1]


def run_fig1_sweep(beta_list=FIG1_BETAS, E_grid=None, pY=FIG1_PY, score=None, threads=1) -> list:
    """Hellinger distance between the solved marginal and ``pY`` per (beta, target)."""
    w = np.asarray(pY, dtype=float)
    E = score_grid("product", w.size, w.size) if score is None else np.asarray(score, dtype=float)
    grid = fig1_default_grid() if E_grid is None else np.asarray(E_grid, dtype=float)
    lo, hi = feasible_E_bounds(w, E)
    bad = [float(t) for t in grid if not lo < t < hi]
    if bad:
        raise Infeasible(f"targets {bad} are outside ({lo!r}, {hi!r})")
    jobs = [(float(b), float(t)) for b in beta_list for t in grid]

    def one(job):
        b, t = job
        sol = solve_known_average(w, LinearConstraint(E, t), b)
        return {"beta": b, "E": t, "hellinger": hellinger(sol.marginal_y(), w)}

    return ordered_map(one, jobs, threads)


def fig1_csv(records) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["beta", "E", "hellinger"])
    for r in records:
        wr.writerow([format(r["beta"], ".17g"), format(r["E"], ".17g"), format(r["hellinger"], ".17g")])
    return buf.getvalue()


# --------------------------------------------------------------------------
# maximum-entropy constraint study

def _rowdot(A, F):
    """``A @ F.T`` computed row by row, so each row is independent of the batch."""
    return (A[:, None, :] * F[None, :, :]).sum(axis=2)


def _gibbs_rows(B, F):
    """Rows of ``softmax(-B @ F)`` for a batch of multipliers ``B`` (K, r)."""
    L = -(B[:, :, None] * F[None, :, :]).sum(axis=1)
    L -= L.max(axis=1, keepdims=True)
    P = np.exp(L)
    return P / P.sum(axis=1, keepdims=True)


def _log_partition(B, F):
    L = -(B[:, :, None] * F[None, :, :]).sum(axis=1)
    top = L.max(axis=1)
    return top + np.log(np.exp(L - top[:, None]).sum(axis=1))


def maxent_first_moment_batch(z, mu, iters=200):
    """``q ∝ exp(-b z)`` with mean ``mu`` for each entry of ``mu``; returns ``(Q, b)``.

    Elementwise bisection on ``b``. At ``mu = min z`` (``max z``) the result
    is the point mass with ``b = +inf`` (``-inf``).
    """
    z = np.asarray(z, dtype=float)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    F = z[None, :]
    K = mu.size
    Q = np.zeros((K, z.size))
    b = np.zeros(K)
    low = mu <= z[0]
    high = mu >= z[-1]
    Q[low, 0], b[low] = 1.0, math.inf
    Q[high, -1], b[high] = 1.0, -math.inf
    inner = ~(low | high)
    if not inner.any():
        return Q, b
    m = mu[inner]
    mean = lambda bb: _rowdot(_gibbs_rows(bb[:, None], F), F)[:, 0]
    span = 1.0 / (z[-1] - z[0])
    lo = np.full(m.size, -span)
    hi = np.full(m.size, span)
    while np.any(bad := mean(lo) < m):
        lo[bad] *= 2.0
    while np.any(bad := mean(hi) > m):
        hi[bad] *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        up = mean(mid) > m
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    bi = 0.5 * (lo + hi)
    Q[inner] = _gibbs_rows(bi[:, None], F)
    b[inner] = bi
    return Q, b


def maxent_first_moment(z, mu):
    """Scalar form of :func:`maxent_first_moment_batch`; returns ``(q, b)``."""
    Q, b = maxent_first_moment_batch(z, [mu])
    return Q[0], float(b[0])


def two_moment_boundary(z, counts):
    """True when the sample moments lie on the boundary of the moment set.

    That happens exactly when the support fits in two adjacent points or in
    the two extreme points; the empirical distribution is then the only
    distribution with those moments.
    """
    supp = np.flatnonzero(counts)
    adjacent = supp.size == 1 or (supp.size == 2 and supp[1] - supp[0] == 1)
    extreme = set(supp.tolist()) <= {0, len(z) - 1}
    return adjacent or extreme


def maxent_two_moments_batch(z, mu, mu2, b_init=None, max_iter=200, tol=1e-12, strict=True):
    """``q ∝ exp(-b1 z - b2 z^2)`` matching ``(mu, mu2)`` elementwise.

    Damped Newton on the convex dual ``ln Z(b) + b . (mu, mu2)``, started
    from ``(b_init, 0)``. Moments must lie in the interior of the moment set.
    Unconverged rows raise :class:`MomentSolveFailure`, or become NaN rows
    when ``strict`` is false.
    """
    z = np.asarray(z, dtype=float)
    F = np.vstack([z, z * z])
    T = np.column_stack([np.atleast_1d(mu), np.atleast_1d(mu2)]).astype(float)
    K = T.shape[0]
    scale = np.array([1.0, 1.0 / max(np.abs(z).max(), 1.0)])
    B = np.zeros((K, 2))
    if b_init is not None:
        B[:, 0] = np.nan_to_num(np.broadcast_to(np.asarray(b_init, dtype=float), (K,)),
                                nan=0.0, posinf=0.0, neginf=0.0)
    dual = lambda BB, TT: _log_partition(BB, F) + np.sum(BB * TT, axis=1)
    active = np.ones(K, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Bb, Tb = B[idx], T[idx]
        Q = _gibbs_rows(Bb, F)
        mom = _rowdot(Q, F)
        g = Tb - mom
        done = np.max(np.abs(g) * scale, axis=1) < tol
        active[idx[done]] = False
        keep = ~done
        idx, Bb, Tb, Q, mom, g = idx[keep], Bb[keep], Tb[keep], Q[keep], mom[keep], g[keep]
        if idx.size == 0:
            break
        H = (Q[:, None, None, :] * F[None, :, None, :] * F[None, None, :, :]).sum(axis=3)
        H -= mom[:, :, None] * mom[:, None, :]
        det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
        det = np.where(np.abs(det) > 1e-300, det, 1e-300)
        step = -np.column_stack([H[:, 1, 1] * g[:, 0] - H[:, 0, 1] * g[:, 1],
                                 H[:, 0, 0] * g[:, 1] - H[:, 1, 0] * g[:, 0]]) / det[:, None]
        # g is the dual gradient; backtrack until the dual or the gradient drops
        f0 = dual(Bb, Tb)
        g0 = np.linalg.norm(g, axis=1)
        slope = np.sum(g * step, axis=1)
        t = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(60):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            Bt = Bb[p] + t[p, None] * step[p]
            ok = dual(Bt, Tb[p]) <= f0[p] + 1e-4 * t[p] * slope[p]
            ok |= np.linalg.norm(Tb[p] - _rowdot(_gibbs_rows(Bt, F), F), axis=1) < 0.5 * g0[p]
            pending[p[ok]] = False
            t[p[~ok]] *= 0.5
        B[idx] = Bb + t[:, None] * step
    Q = _gibbs_rows(B, F)
    err = np.max(np.abs(T - _rowdot(Q, F)) * scale, axis=1)
    failed = ~(err <= 1e-8)
    if failed.any() and not strict:
        Q[failed] = np.nan
    elif failed.any():
        k = int(np.argmax(np.where(failed, np.inf, 0.0)))
        raise MomentSolveFailure(f"two-moment solve did not converge for mu={T[k, 0]!r}, mu2={T[k, 1]!r}")
    return Q, B


def maxent_two_moments(z, mu, mu2, b_init=None):
    """Scalar form of :func:`maxent_two_moments_batch`; returns ``(q, b)``."""
    Q, B = maxent_two_moments_batch(z, [mu], [mu2], None if b_init is None else [b_init])
    return Q[0], B[0]


def maxent_median(n, j) -> np.ndarray:
    """Fixed-median estimator on ``n`` ordered points for median index ``j`` (0-based).

    Mass ``1/2`` is spread evenly over points ``0..k-1`` and ``1/2`` over the
    rest, with ``k = min(j + 1, n - 1)``; the infinitesimal tilt that pins
    the median is dropped. For ``j`` in the lower half this is the entropy
    maximizer; the upper half follows the published four-point vectors.
    """
    if n == 1:
        return np.ones(1)
    if not 0 <= j < n:
        raise ValueError(f"median index {j} outside 0..{n - 1}")
    k = min(j + 1, n - 1)
    q = np.empty(n)
    q[:k] = 0.5 / k
    q[k:] = 0.5 / (n - k)
    return q


@dataclass
class MaxentRow:
    M: int
    pct: dict
    dbar: dict
    draws: int
    skipped: int = 0

    def record(self) -> dict:
        return {
            "M": self.M,
            "pct_d1": self.pct["d1"], "pct_d12": self.pct["d12"],
            "pct_md": self.pct["md"], "pct_d0": self.pct["d0"],
            "dbar1": self.dbar["d1"], "dbar12": self.dbar["d12"],
            "dbarmd": self.dbar["md"], "dbar0": self.dbar["d0"],
        }

    def argmin(self) -> str:
        return min(("d1", "d12", "md", "d0"), key=lambda c: self.dbar[c])


MAXENT_COLUMNS = ["M", "pct_d1", "pct_d12", "pct_md", "pct_d0", "dbar1", "dbar12", "dbarmd", "dbar0"]


def maxent_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(MAXENT_COLUMNS)
    for row in rows:
        r = row.record()
        wr.writerow([r["M"]] + [format(float(r[c]), ".17g") for c in MAXENT_COLUMNS[1:]])
    return buf.getvalue()


def _estimators_for(z, counts):
    """First- and two-moment estimators for each distinct moment key in ``counts``.

    Keys are the integer pairs ``(sum i, sum i^2)`` over sample positions
    ``i = 1..n``, which fix both sample moments for any ``z``.
    """
    n = z.size
    idx = np.arange(1, n + 1)
    k1 = counts @ idx
    k2 = counts @ (idx * idx)
    keys = k1 * (n * n * counts[0].sum() + 1) + k2
    uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    rep = counts[first]
    M = rep.sum(axis=1)
    mu = rep @ z / M
    mu2 = rep @ (z * z) / M
    Q1, b1 = maxent_first_moment_batch(z, mu)
    Q12 = rep / M[:, None]
    interior = np.array([not two_moment_boundary(z, c) for c in rep], dtype=bool)
    if interior.any():
        Q12[interior], _ = maxent_two_moments_batch(z, mu[interior], mu2[interior], b1[interior],
                                                    strict=False)
    return Q1, Q12, inverse.ravel()


def run_maxent_study(n=6, z_values=None, M_list=(7, 11, 21, 31, 41, 61, 101), n_samples=1000,
                     n_probability_draws=100, seed=0, threads=1) -> list:
    """Table of win percentages and mean Hellinger distances for four estimators.

    Estimators: uniform (``d0``), max-entropy given the mean (``d1``), given
    mean and second moment (``d12``), and given the median (``md``). For each
    of ``n_probability_draws`` random true distributions (stream ``[seed, r]``)
    and each length ``M``, distances are averaged over ``n_samples``
    multinomial samples (stream ``[seed, r, M]``). ``pct_*`` is the share of
    draws where each estimator has the smallest average, and ``dbar*`` the
    mean over draws.
    """
    z = np.arange(1, n + 1, dtype=float) if z_values is None else np.asarray(z_values, dtype=float)
    if z.size != n or np.any(np.diff(z) <= 0):
        raise ValueError("z_values must be n strictly increasing values")
    R = n_probability_draws
    truths = np.array([(lambda u: u / u.sum())(RngStream(seed, r).generator().uniform(size=n))
                       for r in range(R)])
    sq = np.sqrt(truths)
    d0 = 1.0 - sq.sum(axis=1) / math.sqrt(n)
    med_q = np.array([maxent_median(n, j) for j in range(n)])
    d_md_table = 1.0 - sq @ np.sqrt(med_q).T  # (R, n)
    cols = ("d1", "d12", "md", "d0")
    rows = []
    for M in M_list:
        counts = np.stack(ordered_map(
            lambda r: np.random.default_rng(np.random.SeedSequence([seed, r, M])).multinomial(
                M, truths[r], size=n_samples), range(R), threads))
        flat = counts.reshape(R * n_samples, n)
        Q1, Q12, inv = _estimators_for(z, flat)
        inv = inv.reshape(R, n_samples)
        bad = np.isnan(Q12[:, 0])[inv]
        use = ~bad
        n_used = use.sum(axis=1)
        if np.any(n_used == 0):
            raise MomentSolveFailure(f"every sample failed the two-moment solve at M={M}")
        avg = lambda D: np.where(use, D, 0.0).sum(axis=1) / n_used
        sQ1 = np.sqrt(Q1)
        sQ12 = np.sqrt(np.nan_to_num(Q12))
        d1 = avg(np.stack([1.0 - (sQ1 @ sq[r])[inv[r]] for r in range(R)]))
        d12 = avg(np.stack([1.0 - (sQ12 @ sq[r])[inv[r]] for r in range(R)]))
        med = np.argmax(np.cumsum(counts, axis=2) >= (M + 1) // 2, axis=2)
        dmd = avg(np.take_along_axis(d_md_table, med, axis=1))
        per = np.column_stack([d1, d12, dmd, d0])
        wins = np.bincount(np.argmin(per, axis=1), minlength=4)
        pct = {c: 100.0 * wins[i] / R for i, c in enumerate(cols)}
        dbar = {c: float(per[:, i].mean()) for i, c in enumerate(cols)}
        rows.append(MaxentRow(M, pct, dbar, R, int(bad.sum())))
    return rows
