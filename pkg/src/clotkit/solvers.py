"""Solvers for the penalized and noise-constrained sparse regression programs.

Two problem forms are handled:

* Lagrangian, either ``||y - Az||^2 + lam*R(z)`` (multiplier on the penalty)
  or ``lam*||y - Az||^2 + R(z)`` (multiplier on the loss), solved with
  accelerated proximal gradient descent plus a monotone restart;
* noise-constrained, ``min R(z) s.t. ||Az - y||_2 <= eps``, solved by a
  homotopy on the Lagrangian multiplier: bisection when ``eps > 0``, and for
  ``eps = 0`` a multiplier ramp followed by a least-squares polish on the
  detected support.

Every Lagrangian solve is certified by the independent subgradient check in
:mod:`clotkit.kkt`; failure to converge is reported through the result, not
raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kkt import kkt_residual, subdiff_distance
from .regularizers import PenaltyKind, RegularizerSpec, penalty_value, prox, _soft

__all__ = [
    "Lagrangian",
    "Constrained",
    "Problem",
    "SolverOptions",
    "SolveResult",
    "PathPoint",
    "InfeasibleError",
    "solve_lagrangian",
    "solve_constrained",
    "solution_path",
    "penalty_gauge_at_zero",
    "lambda_zero_threshold",
]


class InfeasibleError(ValueError):
    """The noise-constrained program has an empty feasible set."""


@dataclass(frozen=True)
class Lagrangian:
    """Multiplier form; ``side`` says which term carries the multiplier."""

    lam: float
    side: str = "penalty"

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive and finite, got {self.lam}")
        if self.side not in ("penalty", "loss"):
            raise ValueError(f"side must be 'penalty' or 'loss', got {self.side!r}")


@dataclass(frozen=True)
class Constrained:
    """Noise-budget form with ``||Az - y||_2 <= eps``."""

    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise ValueError(f"eps must be nonnegative and finite, got {self.eps}")


@dataclass
class Problem:
    A: np.ndarray
    y: np.ndarray
    form: object

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if A.ndim != 2:
            raise ValueError("A must be a 2-D matrix")
        if y.ndim != 1:
            raise ValueError("y must be a 1-D vector")
        if A.shape[0] != y.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but y has length {y.shape[0]}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A contains non-finite entries")
        if not np.all(np.isfinite(y)):
            raise ValueError("y contains non-finite entries")
        if not isinstance(self.form, (Lagrangian, Constrained)):
            raise ValueError("form must be Lagrangian or Constrained")
        self.A, self.y = A, y


@dataclass
class SolverOptions:
    """Tolerances and iteration limits.

    ``kkt_tol`` is relative: a Lagrangian solve stops once the subgradient
    gap falls below ``kkt_tol * max(1, |gradient at the origin|_inf)``.
    """

    kkt_tol: float = 1e-8
    feas_tol: float = 1e-6
    obj_tol: float = 1e-8
    max_iters: int = 50_000
    x0: Optional[np.ndarray] = None
    check_every: int = 25
    power_iters: int = 50
    power_tol: float = 1e-10
    use_gram: Optional[bool] = None
    bisection_steps: int = 60
    lambda_floor: float = 1e-10
    polish: bool = True
    support_rel_tol: float = 1e-6
    ramp_factor: float = 10.0
    ramp_max_stages: int = 16
    ramp_stage_iters: int = 3000


@dataclass
class SolveResult:
    x_hat: np.ndarray
    objective: float
    residual_l2: float
    iterations: int
    kkt_residual: float
    converged: bool
    info: dict = field(default_factory=dict)


@dataclass
class PathPoint:
    lam: float
    result: Optional[SolveResult]
    error: Optional[str] = None


# ---------------------------------------------------------------------------
# quadratic data-fit term, optionally routed through the Gram matrix
# ---------------------------------------------------------------------------


class _Quadratic:
    """Evaluates ``||Ax - y||^2`` and its half-gradient ``A^T(Ax - y)``.

    For tall-ish problems the Gram matrix ``A^T A`` is precomputed; one
    Gram matvec (n^2 flops) then beats the two rectangular products
    (2*m*n flops) whenever n < 2m.
    """

    def __init__(self, A, y, use_gram=None):
        m, n = A.shape
        if use_gram is None:
            use_gram = n <= 2 * m and n <= 2048
        self.A, self.y = A, y
        self.m, self.n = m, n
        self.use_gram = bool(use_gram)
        self.aty = A.T @ y
        self.yy = float(y @ y)
        self.gram = A.T @ A if self.use_gram else None

    def half_grad(self, x):
        if self.use_gram:
            return self.gram @ x - self.aty
        return self.A.T @ (self.A @ x) - self.aty

    def value(self, x):
        if self.use_gram:
            v = float(x @ (self.gram @ x)) - 2.0 * float(self.aty @ x) + self.yy
            return max(v, 0.0)
        r = self.A @ x - self.y
        return float(r @ r)

    def residual_norm(self, x):
        if self.use_gram:
            return float(np.sqrt(self.value(x)))
        return float(np.linalg.norm(self.A @ x - self.y))

    def sigma_sq_max(self, iters=50, tol=1e-10, seed=0):
        """Largest squared singular value of A, by power iteration on A^T A."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.n)
        v /= np.linalg.norm(v)
        lam_prev = 0.0
        for _ in range(iters):
            w = self.gram @ v if self.use_gram else self.A.T @ (self.A @ v)
            lam = float(np.linalg.norm(w))
            if lam == 0.0:
                return 0.0
            v = w / lam
            if abs(lam - lam_prev) <= tol * lam:
                break
            lam_prev = lam
        return lam


class _Workspace:
    """Per-(A, y) state shared across warm-started solves."""

    def __init__(self, A, y, opts: SolverOptions):
        self.quad = _Quadratic(A, y, opts.use_gram)
        self.sigma2 = self.quad.sigma_sq_max(opts.power_iters, opts.power_tol)
        if self.sigma2 <= 0.0:
            raise ValueError("A must be nonzero")


# ---------------------------------------------------------------------------
# accelerated proximal gradient with monotone restart
# ---------------------------------------------------------------------------


def _fista(ws: _Workspace, spec, loss_w, pen_w, opts: SolverOptions, x0=None):
    quad = ws.quad
    n = quad.n

    def smooth(x):
        return loss_w * quad.value(x)

    def smooth_grad(x):
        return 2.0 * loss_w * quad.half_grad(x)

    def objective(x):
        return smooth(x) + pen_w * penalty_value(spec, x)

    grad_scale = max(1.0, 2.0 * loss_w * float(np.max(np.abs(quad.aty), initial=0.0)))
    tol = opts.kkt_tol * grad_scale

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    kkt = subdiff_distance(spec, x, -smooth_grad(x), pen_w)
    if kkt <= tol:
        return x, 0, kkt, True, objective(x)

    step = 1.0 / (2.0 * loss_w * ws.sigma2)
    best_x, best_f = x, objective(x)
    z = x.copy()
    t = 1.0
    iters = 0
    kkt = np.inf
    converged = False

    while iters < opts.max_iters:
        iters += 1
        g = smooth_grad(z)
        w, step = _backtracked_step(quad, spec, loss_w, pen_w, z, g, step, smooth)
        if float((z - w) @ (w - x)) > 0.0:
            # momentum points uphill: restart it from the best point so far,
            # which keeps the objective at restarts nonincreasing
            if objective(x) > best_f:
                x = best_x
            t = 1.0
            z = x
            g = smooth_grad(z)
            w, step = _backtracked_step(quad, spec, loss_w, pen_w, z, g, step, smooth)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = w + ((t - 1.0) / t_next) * (w - x)
        x, t = w, t_next
        fx = objective(x)
        if fx < best_f:
            best_x, best_f = x, fx

        if iters % opts.check_every == 0 or iters == opts.max_iters:
            kkt = subdiff_distance(spec, x, -smooth_grad(x), pen_w)
            if kkt <= tol:
                converged = True
                break

    if not converged:
        kkt = subdiff_distance(spec, x, -smooth_grad(x), pen_w)
        if best_f < objective(x):
            kkt_best = subdiff_distance(spec, best_x, -smooth_grad(best_x), pen_w)
            if kkt_best < kkt:
                x, kkt = best_x, kkt_best
        converged = kkt <= tol
    return x, iters, kkt, converged, objective(x)


def _backtracked_step(quad, spec, loss_w, pen_w, z, g, step, smooth):
    """One prox-gradient step with halving until the descent lemma holds."""
    fz = smooth(z)
    for _ in range(60):
        w = prox(spec, z - step * g, step * pen_w)
        d = w - z
        quad_bound = fz + float(g @ d) + float(d @ d) / (2.0 * step)
        if smooth(w) <= quad_bound + 1e-12 * max(1.0, abs(fz)):
            return w, step
        step *= 0.5
    return w, step


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------


def solve_lagrangian(problem: Problem, spec: RegularizerSpec, opts: SolverOptions = None,
                     _ws: _Workspace = None) -> SolveResult:
    """Solve the multiplier form of the program given by ``problem.form``.

    Returns a result whose ``kkt_residual`` comes from the independent
    subgradient check; non-convergence sets ``converged=False`` instead of
    raising.
    """
    opts = opts or SolverOptions()
    form = problem.form
    if not isinstance(form, Lagrangian):
        raise ValueError("solve_lagrangian needs a Lagrangian-form problem")
    spec.group_indices(problem.A.shape[1])  # dimension check up front
    ws = _ws or _Workspace(problem.A, problem.y, opts)
    loss_w = form.lam if form.side == "loss" else 1.0
    pen_w = 1.0 if form.side == "loss" else form.lam

    x, iters, kkt, converged, fx = _fista(ws, spec, loss_w, pen_w, opts, opts.x0)
    objective = loss_w * ws.quad.value(x) + pen_w * penalty_value(spec, x)
    return SolveResult(
        x_hat=x,
        objective=objective,
        residual_l2=ws.quad.residual_norm(x),
        iterations=iters,
        kkt_residual=kkt,
        converged=converged,
        info={"form": "lagrangian", "lambda": form.lam, "side": form.side},
    )


def solve_constrained(problem: Problem, spec: RegularizerSpec, opts: SolverOptions = None) -> SolveResult:
    """Minimize the penalty subject to ``||Az - y||_2 <= eps``.

    ``eps > 0``: bisection on the penalty-side multiplier (the residual is
    nondecreasing in it), warm-starting each inner solve.  ``eps = 0``: ramp
    the loss-side multiplier until the residual is negligible, then refit on
    the detected support by least squares, keeping the refit only if it does
    not worsen the penalty.
    """
    opts = opts or SolverOptions()
    form = problem.form
    if not isinstance(form, Constrained):
        raise ValueError("solve_constrained needs a Constrained-form problem")
    A, y, eps = problem.A, problem.y, form.eps
    spec.group_indices(A.shape[1])
    ynorm = float(np.linalg.norm(y))
    feas_slack = opts.feas_tol * max(1.0, ynorm)

    if ynorm <= eps:
        x = np.zeros(A.shape[1])
        return SolveResult(x, 0.0, ynorm, 0, 0.0, True,
                           info={"form": "constrained", "eps": eps, "trivial_zero": True})

    x_ls, *_ = np.linalg.lstsq(A, y, rcond=None)
    r_min = float(np.linalg.norm(A @ x_ls - y))
    if r_min > eps + feas_slack:
        raise InfeasibleError(
            f"least-squares residual {r_min:.6g} exceeds the noise budget eps={eps:.6g}"
        )

    ws = _Workspace(A, y, opts)
    if eps == 0.0:
        return _solve_eps_zero(problem, spec, opts, ws, feas_slack)
    return _solve_eps_positive(problem, spec, opts, ws, eps, feas_slack)


def _solve_eps_zero(problem, spec, opts, ws, feas_slack):
    A, y = problem.A, problem.y
    ynorm = float(np.linalg.norm(y))
    gauge = penalty_gauge_at_zero(spec, ws.quad.aty)
    lam0 = 1.0 / (2.0 * gauge) if np.isfinite(gauge) and gauge > 0 else \
        1.0 / (2.0 * max(float(np.max(np.abs(ws.quad.aty), initial=0.0)), 1e-12))
    r_target = 1e-9 * ynorm  # relative, so the ramp is scale-equivariant

    x = np.zeros(A.shape[1])
    total_iters = 0
    lam_path = []
    inner = None
    for stage in range(1, opts.ramp_max_stages + 1):
        lam = lam0 * opts.ramp_factor**stage
        stage_opts = _with_x0(opts, x)
        # stages only need to hand a good warm start to the next multiplier;
        # the polish and the feasibility check decide the final quality
        stage_opts.max_iters = min(opts.max_iters, opts.ramp_stage_iters)
        inner = solve_lagrangian(Problem(A, y, Lagrangian(lam, "loss")), spec, stage_opts, _ws=ws)
        x = inner.x_hat
        total_iters += inner.iterations
        lam_path.append(lam)
        if inner.residual_l2 <= r_target:
            break

    polished = False
    residual = inner.residual_l2
    if opts.polish and np.max(np.abs(x)) > 0:
        support = np.abs(x) > opts.support_rel_tol * np.max(np.abs(x))
        if 0 < support.sum():
            xp = np.zeros_like(x)
            sol, *_ = np.linalg.lstsq(A[:, support], y, rcond=None)
            xp[support] = sol
            rp = float(np.linalg.norm(A @ xp - y))
            pen_x = penalty_value(spec, x)
            pen_p = penalty_value(spec, xp)
            # scale-relative acceptance so equivariance survives the polish
            if rp <= residual * (1.0 + 1e-9) + 1e-14 * ynorm and pen_p <= pen_x * (1.0 + 1e-9):
                x, residual, polished = xp, rp, True

    feasible = residual <= feas_slack
    return SolveResult(
        x_hat=x,
        objective=penalty_value(spec, x),
        residual_l2=residual,
        iterations=total_iters,
        kkt_residual=inner.kkt_residual,
        converged=bool(feasible and (inner.converged or polished)),
        info={"form": "constrained", "eps": 0.0, "lambda_path": lam_path,
              "polished": polished, "feasible": feasible},
    )


def _solve_eps_positive(problem, spec, opts, ws, eps, feas_slack):
    A, y = problem.A, problem.y

    def solve_at(lam, x0):
        inner_opts = _with_x0(opts, x0)
        return solve_lagrangian(Problem(A, y, Lagrangian(lam, "penalty")), spec, inner_opts, _ws=ws)

    gauge = penalty_gauge_at_zero(spec, ws.quad.aty)
    warm = np.zeros(A.shape[1])
    if np.isfinite(gauge) and gauge > 0:
        lam_hi = 2.0 * gauge
    else:
        lam_hi = 1.0  # ridge-like penalties never reach an exact zero solution
        for _ in range(80):
            res = solve_at(lam_hi, warm)
            warm = res.x_hat
            if res.residual_l2 >= eps:
                break
            lam_hi *= 4.0

    lam_lo = opts.lambda_floor
    best = None
    total_iters = 0
    stable = 0
    for _ in range(opts.bisection_steps):
        lam_mid = float(np.sqrt(lam_lo * lam_hi))
        res = solve_at(lam_mid, warm)
        warm = res.x_hat
        total_iters += res.iterations
        if res.residual_l2 <= eps:
            lam_lo = lam_mid
            prev = best
            best = (lam_mid, res)
            # stop once the feasible-side penalty has stabilized to obj_tol
            if prev is not None:
                pen_prev = penalty_value(spec, prev[1].x_hat)
                pen_new = penalty_value(spec, res.x_hat)
                stable = stable + 1 if abs(pen_new - pen_prev) <= opts.obj_tol * max(1.0, pen_prev) else 0
                if stable >= 5:
                    break
        else:
            lam_hi = lam_mid
        if lam_hi / lam_lo < 1.0 + 1e-14:
            break

    if best is None:
        res = solve_at(lam_lo, warm)
        total_iters += res.iterations
        best = (lam_lo, res)
    lam_star, res = best
    feasible = res.residual_l2 <= eps * (1.0 + opts.feas_tol) + 1e-12
    return SolveResult(
        x_hat=res.x_hat,
        objective=penalty_value(spec, res.x_hat),
        residual_l2=res.residual_l2,
        iterations=total_iters,
        kkt_residual=res.kkt_residual,
        converged=bool(res.converged and feasible),
        info={"form": "constrained", "eps": eps, "lambda_star": lam_star,
              "feasible": feasible},
    )


def solution_path(problem: Problem, spec: RegularizerSpec, lambda_grid, opts: SolverOptions = None):
    """Solve the Lagrangian program along a strictly monotone multiplier grid.

    Each point is warm-started from the previous one.  A failing point is
    recorded with its error message instead of aborting the path.
    """
    opts = opts or SolverOptions()
    form = problem.form
    if not isinstance(form, Lagrangian):
        raise ValueError("solution_path needs a Lagrangian-form template problem")
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda_grid must be a nonempty 1-D sequence")
    diffs = np.diff(grid)
    if grid.size > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("lambda_grid must be strictly monotone")
    if np.any(grid <= 0):
        raise ValueError("lambda_grid entries must be positive")

    ws = _Workspace(problem.A, problem.y, opts)
    points = []
    warm = opts.x0
    for lam in grid:
        try:
            point_opts = _with_x0(opts, warm)
            res = solve_lagrangian(Problem(problem.A, problem.y, Lagrangian(float(lam), form.side)),
                                   spec, point_opts, _ws=ws)
            warm = res.x_hat
            points.append(PathPoint(float(lam), res))
        except Exception as exc:  # keep walking the path
            points.append(PathPoint(float(lam), None, error=str(exc)))
    return points


def _with_x0(opts: SolverOptions, x0):
    out = SolverOptions(**{k: getattr(opts, k) for k in opts.__dataclass_fields__})
    out.x0 = None if x0 is None else np.asarray(x0, dtype=float)
    return out


# ---------------------------------------------------------------------------
# zero-solution thresholds
# ---------------------------------------------------------------------------


def penalty_gauge_at_zero(spec: RegularizerSpec, c) -> float:
    """Minkowski gauge of ``c`` with respect to the subdifferential of the
    penalty at the origin.

    The origin solves ``||y - Az||^2 + lam*R(z)`` exactly when
    ``lam >= 2 * gauge(A^T y)``.  Penalties with a smooth quadratic part
    (ridge, and EN with mu = 0) have gauge infinity for nonzero ``c``.
    """
    c = np.asarray(c, dtype=float)
    kind, mu = spec.kind, spec.mu
    if not np.any(c):
        return 0.0
    if kind is PenaltyKind.L1:
        return float(np.max(np.abs(c)))
    if kind is PenaltyKind.L2SQ:
        return np.inf
    if kind is PenaltyKind.EN:
        return float(np.max(np.abs(c))) / mu if mu > 0 else np.inf
    worst = 0.0
    for idx in spec.group_indices(c.shape[0]):
        worst = max(worst, _combined_ball_gauge(c[idx], mu))
    return worst


def _combined_ball_gauge(cg, mu) -> float:
    """Gauge of the Minkowski sum of the (1-mu) max-norm ball and the mu
    Euclidean ball, computed by bisection in log scale."""
    cinf = float(np.max(np.abs(cg), initial=0.0))
    if cinf == 0.0:
        return 0.0
    if mu >= 1.0:
        return float(np.linalg.norm(cg))
    hi = cinf / (1.0 - mu)

    def inside(s):
        return float(np.linalg.norm(_soft(cg / s, 1.0 - mu))) <= mu

    lo = hi * 1e-20
    if inside(lo):
        return lo
    for _ in range(100):
        mid = float(np.sqrt(lo * hi))
        if inside(mid):
            hi = mid
        else:
            lo = mid
    return hi


def lambda_zero_threshold(spec: RegularizerSpec, A, y, side: str = "penalty") -> float:
    """Multiplier level at which the zero vector becomes optimal.

    Penalty side: zero is optimal for all ``lam`` at or above the returned
    value.  Loss side: zero is optimal for all ``lam`` at or below it.
    """
    c = np.asarray(A).T @ np.asarray(y)
    gauge = penalty_gauge_at_zero(spec, c)
    if side == "penalty":
        return 2.0 * gauge
    if side == "loss":
        if gauge == 0.0:
            return np.inf
        return 0.0 if not np.isfinite(gauge) else 1.0 / (2.0 * gauge)
    raise ValueError(f"side must be 'penalty' or 'loss', got {side!r}")
