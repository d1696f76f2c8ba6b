"""Maximization of ``L_beta`` for beta > 1 and its link to entropy minimization.

With the observed marginal fixed, ``p_hat(x, y) = p_hat(x|y) pY(y)`` and the
beta > 1 objective is maximized on vertices of the feasible polytope. The
greedy construction fixes one cell at a time at its largest feasible joint
mass; a multistart numerical maximizer cross-checks it.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import xlogy

from .constrained import LinearConstraint
from .errors import DimensionMismatch, InfeasibleConstraints
from .likelihood import FiniteJoint, as_marginal, h_likelihood, log_generalized_likelihood

ZERO_TOL = 1e-15
FEAS_TOL = 1e-10
# LP solutions carry ~1e-9 error; values closer than this count as ties
LP_TIE_TOL = 1e-9


@dataclass(frozen=True)
class FeasibleSet:
    """Joints with column sums ``pY``, optional row sums ``pX`` and linear averages."""

    pY: np.ndarray
    pX: np.ndarray | None = None
    constraints: tuple = ()
    n: int | None = None

    def __post_init__(self):
        w = np.array(as_marginal(self.pY), dtype=float)
        object.__setattr__(self, "pY", w)
        if self.pX is not None:
            a = np.array(as_marginal(self.pX), dtype=float)
            if abs(a.sum() - w.sum()) > 1e-12:
                raise InfeasibleConstraints("pX and pY have different totals")
            object.__setattr__(self, "pX", a)
            if self.n is not None and self.n != a.size:
                raise DimensionMismatch("n does not match len(pX)")
            object.__setattr__(self, "n", a.size)
        elif self.n is None:
            raise DimensionMismatch("give pX or the number of hidden states n")
        cons = tuple(self.constraints)
        for c in cons:
            if not isinstance(c, LinearConstraint) or c.score.shape != (self.n, w.size):
                raise DimensionMismatch("constraints must be LinearConstraint grids of shape (n, m)")
        object.__setattr__(self, "constraints", cons)

    @property
    def m(self) -> int:
        return self.pY.size

    @property
    def shape(self):
        return (self.n, self.m)

    @property
    def marginals_only(self) -> bool:
        return not self.constraints

    def equality_system(self):
        """``A vec(p) = b`` with ``vec`` in row-major (x, y) order."""
        n, m = self.shape
        rows, rhs = [], []
        for y in range(m):
            r = np.zeros((n, m))
            r[:, y] = 1.0
            rows.append(r.ravel())
            rhs.append(self.pY[y])
        if self.pX is not None:
            for x in range(n):
                r = np.zeros((n, m))
                r[x, :] = 1.0
                rows.append(r.ravel())
                rhs.append(self.pX[x])
        for c in self.constraints:
            rows.append(c.score.ravel())
            rhs.append(c.target)
        return np.array(rows), np.array(rhs)

    def residual(self, p) -> float:
        A, b = self.equality_system()
        return float(np.max(np.abs(A @ np.asarray(p).ravel() - b)))

    def check_nonempty(self):
        A, b = self.equality_system()
        res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise InfeasibleConstraints(f"constraint set is empty ({res.message})")


@dataclass
class SparseSolution:
    joint: FiniteJoint
    selection_order: list
    stage_values: list = field(default_factory=list)

    @property
    def p(self) -> np.ndarray:
        return self.joint.p

    @property
    def zero_count(self) -> int:
        return int(np.count_nonzero(self.p < ZERO_TOL))

    @property
    def L_inf_value(self) -> float:
        """``sum_y pY ln max_x p_hat(x, y)``: the beta -> inf limit of ``L_beta``."""
        return l_infinity(self.p)

    def conditional(self) -> np.ndarray:
        return self.joint.conditional()

    def order_records(self):
        for k, ((x, y), v) in enumerate(zip(self.selection_order, self.stage_values)):
            yield {"step": k, "x": x, "y": y, "p_hat": v}


def l_infinity(p) -> float:
    p = np.asarray(p, dtype=float)
    return h_likelihood(p, p.sum(axis=0))


def joint_entropy_of(p) -> float:
    p = np.asarray(p, dtype=float)
    return float(-xlogy(p, p).sum())


def _snap(feasible: FeasibleSet, p):
    """Re-solve the equalities on the support of ``p`` to remove LP round-off."""
    A, b = feasible.equality_system()
    flat = np.asarray(p, dtype=float).ravel()
    supp = flat > 1e-12
    sol, *_ = np.linalg.lstsq(A[:, supp], b, rcond=None)
    out = np.zeros_like(flat)
    out[supp] = sol
    if np.all(out >= -1e-13) and np.max(np.abs(A @ out - b)) <= FEAS_TOL:
        out = np.clip(out, 0.0, None)
        return out.reshape(feasible.shape)
    return np.clip(flat, 0.0, None).reshape(feasible.shape)


# --------------------------------------------------------------------------
# greedy construction

def _greedy_marginals(feasible: FeasibleSet):
    n, m = feasible.shape
    col = feasible.pY.copy()
    row = feasible.pX.copy() if feasible.pX is not None else None
    p = np.zeros((n, m))
    free = np.ones((n, m), dtype=bool)
    order, values = [], []
    while free.any():
        cap = np.broadcast_to(col[None, :], (n, m)) if row is None else np.minimum(row[:, None], col[None, :])
        cand = np.where(free, cap, -np.inf)
        # argmax over a row-major flatten returns the lowest (x, y) among ties
        x, y = np.unravel_index(int(np.argmax(cand)), (n, m))
        v = max(float(cap[x, y]), 0.0)
        p[x, y] = v
        free[x, y] = False
        col[y] -= v
        if row is not None:
            row[x] -= v
        order.append((int(x), int(y)))
        values.append(v)
        # without pX a column is exhausted after its first cell
        if row is None:
            col[y] = 0.0
    return p, order, values


def _greedy_lp(feasible: FeasibleSet):
    n, m = feasible.shape
    A, b = feasible.equality_system()
    fixed = {}
    order, values = [], []

    def bounds():
        return [(fixed[(i // m, i % m)],) * 2 if (i // m, i % m) in fixed else (0, None) for i in range(n * m)]

    while len(fixed) < n * m:
        best, best_v = None, -np.inf
        bnds = bounds()
        for x in range(n):
            for y in range(m):
                if (x, y) in fixed:
                    continue
                c = np.zeros(n * m)
                c[x * m + y] = -1.0
                res = linprog(c, A_eq=A, b_eq=b, bounds=bnds, method="highs")
                if res.status != 0:
                    raise InfeasibleConstraints(f"stage LP failed at cell {(x, y)}: {res.message}")
                v = -res.fun
                if v > best_v + LP_TIE_TOL:
                    best, best_v = (x, y), v
        fixed[best] = max(best_v, 0.0)
        order.append(best)
        values.append(fixed[best])
    p = np.zeros((n, m))
    for (x, y), v in fixed.items():
        p[x, y] = v
    return _snap(feasible, p), order, values


def greedy_majorize(feasible: FeasibleSet) -> SparseSolution:
    """Fix cells one at a time at their largest feasible joint mass.

    Each stage takes the maximum over all unfixed cells given the constraints
    and every previously fixed cell; ties go to the lowest ``(x, y)``.
    Known-marginal sets use the closed form ``min(row left, column left)``;
    sets with linear averages solve one small LP per candidate cell.
    """
    feasible.check_nonempty()
    if feasible.marginals_only:
        p, order, values = _greedy_marginals(feasible)
    else:
        p, order, values = _greedy_lp(feasible)
    if feasible.residual(p) > FEAS_TOL:
        raise InfeasibleConstraints(f"greedy output violates constraints by {feasible.residual(p)!r}")
    return SparseSolution(FiniteJoint(p / p.sum() * feasible.pY.sum()), order, values)


def stage_maxima(feasible: FeasibleSet, solution: SparseSolution) -> np.ndarray:
    """Re-maximize each cell by LP given the cells fixed before it (post-hoc audit)."""
    n, m = feasible.shape
    A, b = feasible.equality_system()
    out = []
    fixed = {}
    for (x, y), v in zip(solution.selection_order, solution.stage_values):
        bnds = [(fixed[(i // m, i % m)],) * 2 if (i // m, i % m) in fixed else (0, None) for i in range(n * m)]
        c = np.zeros(n * m)
        c[x * m + y] = -1.0
        res = linprog(c, A_eq=A, b_eq=b, bounds=bnds, method="highs")
        out.append(-res.fun)
        fixed[(x, y)] = v
    return np.array(out)


# --------------------------------------------------------------------------
# sampling feasible points

def _sinkhorn(K, col, row, iters=2000, tol=1e-14):
    """Scale positive kernels ``K[..., n, m]`` to the given marginals (batched)."""
    p = K.copy()
    for _ in range(iters):
        p *= (col / p.sum(axis=-2))[..., None, :]
        if row is None:
            break
        p *= (row / p.sum(axis=-1))[..., :, None]
        if np.max(np.abs(p.sum(axis=-2) - col)) < tol:
            break
    return p


def sample_feasible(feasible: FeasibleSet, count, rng) -> np.ndarray:
    """Random feasible joints, shape ``(count, n, m)``.

    Marginal-only sets scale log-normal kernels to the marginals; sets with
    linear averages mix LP vertices for random objectives with Dirichlet weights.
    """
    n, m = feasible.shape
    if feasible.marginals_only:
        K = np.exp(2.0 * rng.normal(size=(count, n, m)))
        return _sinkhorn(K, feasible.pY, feasible.pX)
    A, b = feasible.equality_system()
    n_vert = max(8, 2 * n * m)
    verts = []
    for _ in range(n_vert):
        res = linprog(rng.normal(size=n * m), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise InfeasibleConstraints(res.message)
        verts.append(_snap(feasible, res.x).ravel())
    V = np.array(verts)
    W = rng.dirichlet(np.full(n_vert, 0.5), size=count)
    return (W @ V).reshape(count, n, m)


# --------------------------------------------------------------------------
# multistart numerical maximizer

def _lbeta(p, beta):
    return log_generalized_likelihood(p, p.sum(axis=0), beta)


def _kl_project(q, A, b, iters=100):
    """KL projection of positive ``q`` onto ``{A p = b}``: ``p = q exp(A^T lam)``."""
    lam = np.zeros(A.shape[0])
    qf = q.ravel()
    for _ in range(iters):
        p = qf * np.exp(np.clip(A.T @ lam, -700, 700))
        r = A @ p - b
        if np.max(np.abs(r)) < 1e-15:
            break
        J = (A * p) @ A.T
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        t = 1.0
        while t > 1e-8:
            trial = qf * np.exp(np.clip(A.T @ (lam + t * step), -700, 700))
            if np.max(np.abs(A @ trial - b)) < np.max(np.abs(r)):
                break
            t *= 0.5
        lam = lam + t * step
    return (qf * np.exp(np.clip(A.T @ lam, -700, 700))).reshape(q.shape)


def _eg_ascent(feasible, p, beta, eta, iters):
    A, b = feasible.equality_system()
    for _ in range(iters):
        # relative gradient p dL/dp = pY zeta is bounded, giving stable multiplicative steps
        with np.errstate(divide="ignore"):
            lp = beta * np.log(p)
        z = np.exp(lp - lp.max(axis=0))
        z /= z.sum(axis=0)
        q = np.maximum(p * np.exp(eta * z), 1e-300)
        new = _sinkhorn(q, feasible.pY, feasible.pX) if feasible.marginals_only else _kl_project(q, A, b)
        if np.max(np.abs(new - p)) < 1e-13:
            p = new
            break
        p = new
    return p


def _vertex_polish(feasible, p, beta, max_rounds=50):
    """Move to the LP vertex of the linearized objective while ``L_beta`` does not drop."""
    A, b = feasible.equality_system()
    cur, val = p, _lbeta(p, beta)
    for _ in range(max_rounds):
        S = (cur**beta).sum(axis=0)
        grad = cur.sum(axis=0) * cur ** (beta - 1) / S
        res = linprog(-grad.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            break
        v = _snap(feasible, res.x)
        v_val = _lbeta(v, beta)
        if v_val < val - 1e-12:
            break
        moved = np.max(np.abs(v - cur))
        cur, val = v, v_val
        if moved < 1e-14:
            break
    return cur, val


@dataclass
class MultistartResult:
    joint: FiniteJoint
    value: float
    start_values: np.ndarray
    best_start: int
    beta: float

    def __iter__(self):
        yield self.joint
        yield self.value


def _one_start(feasible, beta, seed, k, eta, iters):
    rng = np.random.default_rng([seed, k])
    p0 = sample_feasible(feasible, 1, rng)[0]
    p0 = np.maximum(p0, 1e-12)
    p = _eg_ascent(feasible, p0, beta, eta, iters)
    return _vertex_polish(feasible, p, beta)


def numeric_max_beta_gt1(feasible: FeasibleSet, beta=2.0, multistart=64, seed=0,
                         threads=1, eta=2.0, iters=400) -> MultistartResult:
    """Best of ``multistart`` local maximizations of ``L_beta`` over the feasible set.

    Each start uses the substream ``default_rng([seed, k])``; results are
    reduced in start order, so the output does not depend on ``threads``.
    """
    if not beta > 1:
        raise ValueError(f"numeric_max_beta_gt1 needs beta > 1, got {beta!r}")
    feasible.check_nonempty()
    run = lambda k: _one_start(feasible, beta, seed, k, eta, iters)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            outs = list(ex.map(run, range(multistart)))
    else:
        outs = [run(k) for k in range(multistart)]
    vals = np.array([v for _, v in outs])
    best = int(np.argmax(vals))
    p = outs[best][0]
    return MultistartResult(FiniteJoint(p / p.sum() * feasible.pY.sum()), float(vals[best]), vals, best, beta)


# --------------------------------------------------------------------------
# entropy and majorization audits

def sorted_partial_sums(p) -> np.ndarray:
    v = np.sort(np.asarray(p, dtype=float).ravel())[::-1]
    return np.cumsum(v)


def majorizes(a, b, tol=1e-12) -> bool:
    """True if the decreasing partial sums of ``a`` dominate those of ``b``."""
    return bool(np.all(sorted_partial_sums(a) >= sorted_partial_sums(b) - tol))


@dataclass
class EntropyReport:
    solution_entropy: float
    sample_entropies: np.ndarray
    margins: np.ndarray

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else 0.0

    @property
    def all_nonnegative(self) -> bool:
        return bool(np.all(self.margins >= -1e-12))

    def summary(self) -> dict:
        q = np.quantile(self.margins, [0.0, 0.25, 0.5, 0.75, 1.0]) if self.margins.size else np.zeros(5)
        return {
            "solution_entropy": self.solution_entropy,
            "samples": int(self.margins.size),
            "min_margin": self.min_margin,
            "margin_quartiles": q.tolist(),
            "all_nonnegative": self.all_nonnegative,
        }


def min_entropy_compare(feasible: FeasibleSet, solution: SparseSolution, samples=1000, seed=0) -> EntropyReport:
    """Entropy margins ``S(sample) - S(solution)`` over random feasible joints."""
    rng = np.random.default_rng([seed, 0])
    pts = sample_feasible(feasible, samples, rng)
    s0 = joint_entropy_of(solution.p)
    ent = -xlogy(pts, pts).sum(axis=(1, 2))
    return EntropyReport(s0, ent, ent - s0)
