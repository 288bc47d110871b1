"""Linear solver for the elastic step and bound-constrained minimizer for the damage step."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class LinearSolveError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def solve_spd(K, b, tol: float = 1e-10, max_refine: int = 10, method: str = "direct") -> np.ndarray:
    """Solve ``K x = b`` for sparse symmetric positive definite ``K``.

    ``method="direct"`` factorizes the symmetrically diagonal-scaled matrix
    with SuperLU and applies iterative refinement until
    ``|Kx - b| <= tol |b|``; ``method="cg"`` runs Jacobi-preconditioned
    conjugate gradients to the same tolerance. The scaling keeps strongly
    degraded elements from spoiling the factorization accuracy.

    When refinement stops improving and the residual is within the rounding
    level ``64 eps |K|_1 |x| / |b|`` the solution is accepted even above
    ``tol``; heavily degraded stiffness can push that level past ``tol``.

    Raises
    ------
    LinearSolveError
        If the tolerance is not met; carries the achieved relative residual.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    if n == 0:
        return np.zeros(0)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    K = sp.csc_matrix(K)
    d = K.diagonal()
    if np.any(d <= 0):
        raise LinearSolveError("non-positive diagonal", np.inf)
    if method == "cg":
        x, info = spla.cg(K, b, rtol=tol, atol=0.0, maxiter=20 * n, M=sp.diags(1.0 / d))
        res = np.linalg.norm(K @ x - b) / bnorm
        if info != 0 or res > tol:
            raise LinearSolveError("conjugate gradients did not converge", res)
        return x
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    s = 1.0 / np.sqrt(d)
    S = sp.diags(s)
    try:
        lu = spla.splu((S @ K @ S).tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
    except RuntimeError as exc:  # exactly singular
        raise LinearSolveError(f"factorization failed: {exc}", np.inf) from exc
    x = s * lu.solve(s * b)
    knorm = spla.norm(K, 1)
    prev = np.inf
    for _ in range(max_refine + 1):
        r = b - K @ x
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x
        # below this the residual itself is rounding noise
        floor = 64 * np.finfo(float).eps * knorm * np.linalg.norm(x) / bnorm
        if res <= floor and res > 0.5 * prev:
            log.debug("residual %.3e stalled at the rounding floor %.3e", res, floor)
            return x
        prev = res
        x = x + s * lu.solve(s * r)
    raise LinearSolveError("direct solve inaccurate after refinement", res)


@dataclass(frozen=True)
class BoxConstraints:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), lo.shape).astype(float)
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def damage(cls, alpha_prev) -> "BoxConstraints":
        """Irreversibility box ``alpha_prev <= alpha <= 1``."""
        lo = np.asarray(alpha_prev, dtype=float)
        if np.any((lo < 0.0) | (lo > 1.0)):
            raise ValueError("damage lower bound must lie in [0, 1]")
        return cls(lo, np.ones_like(lo))

    def project(self, x) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)


@dataclass
class KktReport:
    """First-order optimality of a box-constrained iterate.

    Gradients are divided by the problem scale before measuring, so both
    maxima are dimensionless.
    """

    max_interior_gradient: float
    max_bound_violation: float
    iterations: int = 0
    converged: bool = False
    tol: float = 0.0
    history: list = field(default_factory=list, repr=False)

    @property
    def residual(self) -> float:
        return max(self.max_interior_gradient, self.max_bound_violation)


def kkt_measures(x, grad, bounds: BoxConstraints, scale=1.0) -> tuple[float, float]:
    """``(max |g| on free entries, max sign violation on bound entries)``."""
    gs = np.asarray(grad, dtype=float) / scale
    lo, hi = bounds.lower, bounds.upper
    pinned = lo >= hi
    at_lo = (x <= lo) & ~pinned
    at_hi = (x >= hi) & ~pinned
    inner = ~(at_lo | at_hi | pinned)
    interior = float(np.max(np.abs(gs[inner]), initial=0.0))
    viol = max(float(np.max(-gs[at_lo], initial=0.0)), float(np.max(gs[at_hi], initial=0.0)))
    return interior, max(viol, 0.0)


class QuadraticObjective:
    """``x.H.x / 2 + c.x + const`` with a fixed sparse or dense ``H``."""

    def __init__(self, H, c, const=0.0):
        self.H = sp.csr_matrix(H)
        self.c = np.asarray(c, dtype=float)
        self.const = float(const)

    def value_and_grad(self, x):
        Hx = self.H @ x
        return float(0.5 * x @ Hx + self.c @ x + self.const), Hx + self.c

    def value(self, x):
        return self.value_and_grad(x)[0]

    def difference(self, x, y):
        d = y - x
        return float(d @ (self.H @ (x + 0.5 * d) + self.c))

    def hessian(self, x, convexify=False):
        return self.H


# width of the near-bound zone treated as active, in units of the variable
_EPS_ACTIVE = 1e-3
_ARMIJO = 1e-4
# active-set corrections of one Newton direction
_MAX_SWAPS = 12


def _factor_solve(A, r):
    try:
        lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True})
        out = lu.solve(r)
    except RuntimeError:
        return None
    return out if np.all(np.isfinite(out)) else None


def _active_set_direction(H, g, x, lo, hi, at_lo, at_hi, pinned):
    """Newton step of the local quadratic model with a predicted active set.

    Starting from the given bound sets, variables move exactly onto their
    bound while the rest take the reduced Newton step; bound variables whose
    predicted multiplier has the wrong sign are released and free ones that
    overshoot are clamped, until the sets stop changing.
    """
    n = len(x)
    for _ in range(_MAX_SWAPS):
        F = ~(at_lo | at_hi | pinned)
        d = np.zeros(n)
        d[at_lo] = lo[at_lo] - x[at_lo]
        d[at_hi] = hi[at_hi] - x[at_hi]
        if F.any():
            dF = _factor_solve(H[F][:, F], -(g + H @ d)[F])
            if dF is None:
                return None
            d[F] = dF
        r = g + H @ d
        xn = x + d
        new_lo = ((at_lo & (r > 0)) | (F & (xn < lo))) & ~pinned
        new_hi = ((at_hi & (r < 0)) | (F & (xn > hi))) & ~pinned
        if np.array_equal(new_lo, at_lo) and np.array_equal(new_hi, at_hi):
            break
        at_lo, at_hi = new_lo, new_hi & ~new_lo
    return d


def _is_descent(g, d):
    slope = float(g @ d)
    return slope < -1e-14 * np.linalg.norm(g) * np.linalg.norm(d)


def minimize_box(f, bounds: BoxConstraints, x0=None, tol: float = 1e-6, max_iter: int = 200, scale=None):
    """Minimize a smooth function over a box by projected Newton.

    Each iteration builds a Newton direction of the local quadratic model
    with a predicted active set: variables at or near a bound with the
    gradient pushing outward start on that bound, and the set is corrected
    from the predicted multipliers and the box. The exact Hessian is tried
    first, then the convexified one; a diagonally scaled gradient step is the
    last resort. The trial point is projected onto the box and accepted by
    Armijo backtracking, so every iterate is feasible and the objective never
    increases. When ``f`` provides ``difference(x, y)`` the decrease is
    measured with it, which stays accurate where ``f(y) - f(x)`` would be lost
    to rounding.

    Parameters
    ----------
    f : object
        Provides ``value_and_grad(x)`` and ``hessian(x, convexify=False)``.
    bounds : BoxConstraints
    x0 : ndarray, optional
        Starting point (projected onto the box). Defaults to the lower bound.
    tol : float
        Target for both KKT maxima of the scaled gradient ``g / scale``.
    scale : float or ndarray, optional
        Per-variable gradient scale; 1 when omitted.

    Returns
    -------
    x : ndarray
    report : KktReport
        ``converged`` is False when ``max_iter`` is reached or the line search
        stalls; ``x`` is then the best iterate. ``history`` holds the
        objective after each accepted step.
    """
    lo, hi = bounds.lower, bounds.upper
    n = len(lo)
    scale = np.ones(n) if scale is None else np.broadcast_to(np.asarray(scale, dtype=float), (n,))
    x = bounds.project(lo.copy() if x0 is None else np.asarray(x0, dtype=float))
    pinned = lo >= hi
    diff = getattr(f, "difference", None)
    fx, g = f.value_and_grad(x)
    history = [fx]
    it = 0
    while True:
        interior, viol = kkt_measures(x, g, bounds, scale)
        if max(interior, viol) <= tol or it >= max_iter:
            return x, KktReport(interior, viol, it, max(interior, viol) <= tol, tol, history)
        it += 1
        gs = g / scale
        width = float(np.max(np.abs(x - bounds.project(x - gs)), initial=0.0))
        eps = min(_EPS_ACTIVE, width)
        at_lo = ~pinned & (x <= lo + eps) & (gs > 0)
        at_hi = ~pinned & ~at_lo & (x >= hi - eps) & (gs < 0)

        directions = []
        H = f.hessian(x)
        for convexify in (False, True):
            if convexify:
                H = f.hessian(x, convexify=True)
            d = _active_set_direction(H, g, x, lo, hi, at_lo, at_hi, pinned)
            if d is not None and _is_descent(g, bounds.project(x + d) - x):
                directions.append(d)
                break
        diag = np.asarray(H.diagonal()).ravel()
        diag = np.where(diag > 0, diag, scale)
        directions.append(-g / diag)

        accepted = False
        for d in directions:
            d[pinned] = 0.0
            t = 1.0
            while t > 1e-12:
                xt = bounds.project(x + t * d)
                ft, gt = f.value_and_grad(xt)
                change = diff(x, xt) if diff is not None else ft - fx
                slope = float(g @ (xt - x))
                if slope < 0.0 and change <= _ARMIJO * slope:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            log.debug("line search stalled at iteration %d (kkt %.3e)", it, max(interior, viol))
            return x, KktReport(interior, viol, it, False, tol, history)
        x, g = xt, gt
        fx = fx + change if diff is not None else ft
        history.append(fx)
