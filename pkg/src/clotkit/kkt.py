"""Subgradient-inclusion optimality checks, written independently of the solvers.

For the penalized least-squares programs the first-order condition is that
the negative gradient of the data-fit term belongs to the (scaled)
subdifferential of the penalty.  ``subdiff_distance`` measures how badly
that inclusion fails; a converged solve should bring it near zero.
"""

from __future__ import annotations

import numpy as np

from .regularizers import PenaltyKind, RegularizerSpec, _soft

__all__ = ["subdiff_distance", "loss_gradient", "kkt_residual", "prox_optimality_residual"]


def subdiff_distance(spec: RegularizerSpec, x, target, weight: float = 1.0) -> float:
    """Distance from ``target`` to ``weight * (subdifferential of R at x)``.

    Coordinatewise parts are measured in the max norm.  For a group whose
    block of ``x`` is entirely zero, the distance to the Minkowski-sum ball
    ``{u + w : |u|_inf <= weight*(1-mu), ||w||_2 <= weight*mu}`` is measured
    in the Euclidean norm (which upper-bounds the per-coordinate gap).
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(target, dtype=float)
    if x.shape != t.shape:
        raise ValueError("x and target must have the same shape")
    kind, mu, w = spec.kind, spec.mu, float(weight)

    if kind is PenaltyKind.L1:
        return _separable_gap(t, x, w)
    if kind is PenaltyKind.L2SQ:
        return float(np.max(np.abs(t - 2.0 * w * x))) if x.size else 0.0
    if kind is PenaltyKind.EN:
        return _separable_gap(t - 2.0 * w * (1.0 - mu) * x, x, w * mu)

    # CLOT / SGL / GL: per group, l1 part plus the Euclidean-norm part.
    worst = 0.0
    for idx in spec.group_indices(x.shape[0]):
        xg, tg = x[idx], t[idx]
        nrm = float(np.linalg.norm(xg))
        if nrm == 0.0:
            gap = float(np.linalg.norm(_soft(tg, w * (1.0 - mu)))) - w * mu
            worst = max(worst, max(gap, 0.0))
        else:
            resid = tg - w * mu * xg / nrm
            worst = max(worst, _separable_gap(resid, xg, w * (1.0 - mu)))
    return worst


def _separable_gap(target, x, thr) -> float:
    """Max-norm distance from ``target`` to ``thr*sign(x_i)`` (or to
    ``[-thr, thr]`` where ``x_i = 0``)."""
    if x.size == 0:
        return 0.0
    on = x != 0
    gap = np.where(on, np.abs(target - thr * np.sign(x)), np.maximum(np.abs(target) - thr, 0.0))
    return float(np.max(gap))


def loss_gradient(A, y, x, lam: float = 1.0, side: str = "penalty") -> np.ndarray:
    """Gradient of the squared-residual term, including a multiplier on the
    loss when ``side == 'loss'``."""
    w = float(lam) if side == "loss" else 1.0
    return 2.0 * w * (A.T @ (A @ x - y))


def kkt_residual(A, y, x, spec: RegularizerSpec, lam: float, side: str = "penalty") -> float:
    """Stationarity gap of ``x`` for the Lagrangian program.

    ``side='penalty'`` checks ``||y - Az||^2 + lam*R(z)``;
    ``side='loss'`` checks ``lam*||y - Az||^2 + R(z)``.
    """
    if side not in ("penalty", "loss"):
        raise ValueError(f"side must be 'penalty' or 'loss', got {side!r}")
    grad = loss_gradient(A, y, x, lam, side)
    pen_weight = 1.0 if side == "loss" else float(lam)
    return subdiff_distance(spec, x, -grad, pen_weight)


def prox_optimality_residual(spec: RegularizerSpec, z, v, step: float) -> float:
    """Stationarity gap of ``z`` for ``step*R(.) + 0.5*||. - v||^2``."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    return subdiff_distance(spec, z, v - z, float(step))
