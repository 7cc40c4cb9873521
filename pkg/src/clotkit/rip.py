"""Recovery certificates from restricted-isometry constants, plus exact
small-instance RIP evaluation and robust null-space property spot checks.

The certificate chain turns a restricted isometry constant ``delta`` of
order ``ceil(t*k)`` into null-space constants ``(rho, tau)`` and then into
the coefficients of the recovery error bound

    ||x_hat - x||_1 <= c_sigma * sigma_k(x) + c_eps * eps

for the combined l1/l2 and sparse-group-lasso programs, provided the mixing
parameter stays below ``mu_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, islice
from typing import Optional

import numpy as np

__all__ = [
    "Certificate",
    "certificate",
    "error_bounds",
    "delta_bound_from_mu",
    "RipEstimate",
    "exact_rip",
    "RnspReport",
    "rnsp_check",
]

_SUBSET_GUARD = 10_000_000


@dataclass(frozen=True)
class Certificate:
    """Full constant chain for one ``(t, k, delta, g, mu)`` configuration.

    ``tau`` already carries the ``sqrt(k)`` factor; the null-space
    inequality divides both ``rho`` and ``tau`` by ``sqrt(k)`` when applied.
    ``c_sigma`` and ``c_eps`` are the coefficients of the l1 error bound.
    """

    t: float
    k: int
    delta: float
    g: int
    mu: float
    nu: float
    a: float
    b: float
    c: float
    rho: float
    tau: float
    gamma: float
    mu_max: float
    c_sigma: float
    c_eps: float
    valid: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "t": self.t, "k": self.k, "delta": self.delta, "g": self.g, "mu": self.mu,
            "nu": self.nu, "a": self.a, "b": self.b, "c": self.c,
            "rho": self.rho, "tau": self.tau, "gamma": self.gamma, "mu_max": self.mu_max,
            "c_sigma": self.c_sigma, "c_eps": self.c_eps,
            "valid": self.valid, "reason": self.reason,
        }


def certificate(t: float, k: int, delta: float, g: int = 1, mu: float = 0.0) -> Certificate:
    """Compute the recovery-certificate constants.

    Never raises for in-range inputs: configurations that fail the
    sufficient conditions come back with ``valid=False`` and a reason.
    """
    t = float(t)
    k = int(k)
    g = int(g)
    delta = float(delta)
    mu = float(mu)
    if t < 4.0 / 3.0:
        raise ValueError(f"t must be at least 4/3, got {t}")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if g < 1:
        raise ValueError(f"g must be at least 1, got {g}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu must lie in [0, 1), got {mu}")

    nu = math.sqrt(t * (t - 1.0)) - (t - 1.0)
    a_sq = nu * (1.0 - nu) - delta * (0.5 - nu + nu * nu)
    b = nu * (1.0 - nu) * math.sqrt(1.0 + delta)
    c = math.sqrt(delta * nu * nu / (2.0 * (t - 1.0)))
    delta_limit = math.sqrt((t - 1.0) / t)

    if a_sq > 0.0:
        a = math.sqrt(a_sq)
        rho = c / a
        tau = b * math.sqrt(k) / a_sq
    else:
        a, rho, tau = 0.0, math.inf, math.inf

    gamma = mu * math.sqrt(g) / (1.0 - mu)
    mu_max = (1.0 - rho) / (math.sqrt(g) * (1.0 + rho)) if rho < 1.0 else 0.0
    det = (1.0 - gamma) - (1.0 + gamma) * rho if rho < math.inf else -math.inf

    valid, reason = True, ""
    if delta >= delta_limit:
        valid, reason = False, f"delta {delta:.6g} is not below sqrt((t-1)/t) = {delta_limit:.6g}"
    elif not rho < 1.0:
        valid, reason = False, f"null-space constant rho = {rho:.6g} is not below 1"
    elif not mu < mu_max:
        valid, reason = False, f"mu {mu:.6g} is not below mu_max = {mu_max:.6g}"
    elif not det > 0.0:
        # rho must stay below (1-gamma)/(1+gamma) for the bound coefficients
        # to be positive; this is stricter than mu < mu_max because gamma
        # carries the 1/(1-mu) factor.
        valid, reason = False, (f"bound denominator (1-gamma)-(1+gamma)*rho = {det:.6g} "
                                f"is not positive")

    if valid:
        c_sigma = 2.0 * (1.0 + rho) / det
        c_eps = 4.0 * tau / det
    else:
        c_sigma = c_eps = math.nan

    return Certificate(t, k, delta, g, mu, nu, a, b, c, rho, tau, gamma, mu_max,
                       c_sigma, c_eps, valid, reason)


def error_bounds(cert: Certificate, sigma_k: float, epsilon: float, p: float = 2.0):
    """Recovery error bounds ``(l1, lp)`` implied by a valid certificate.

    The lp bound holds for ``p`` in [1, 2] and scales by ``k^{-(1 - 1/p)}``.
    """
    if not cert.valid:
        raise ValueError(f"certificate is not valid: {cert.reason}")
    if sigma_k < 0 or epsilon < 0:
        raise ValueError("sigma_k and epsilon must be nonnegative")
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    bound_l1 = cert.c_sigma * sigma_k + cert.c_eps * epsilon
    scale = cert.k ** (-(1.0 - 1.0 / p))
    bound_lp = scale * ((1.0 + cert.rho) * cert.c_sigma * sigma_k
                        + ((1.0 + cert.rho) * cert.c_eps + 2.0 * cert.tau) * epsilon)
    return bound_l1, bound_lp


def delta_bound_from_mu(t: float, mu: float, g: int = 1) -> float:
    """Largest admissible RIP constant for a given mixing parameter.

    Any ``delta`` strictly below the returned value yields a valid
    certificate at the same ``(t, g, mu)``.  At ``mu = 0`` the bound
    degenerates to the plain l1 threshold ``sqrt((t-1)/t)``.
    """
    t = float(t)
    mu = float(mu)
    g = int(g)
    if t < 4.0 / 3.0:
        raise ValueError(f"t must be at least 4/3, got {t}")
    if g < 1:
        raise ValueError(f"g must be at least 1, got {g}")
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu must lie in [0, 1), got {mu}")
    if mu == 0.0:
        return math.sqrt((t - 1.0) / t)
    nu = math.sqrt(t * (t - 1.0)) - (t - 1.0)
    theta1 = nu * (1.0 - nu)
    theta2 = 0.5 - theta1
    theta3 = nu * nu / (2.0 * (t - 1.0))
    gamma = mu * math.sqrt(g) / (1.0 - mu)
    rho_bar = (1.0 - gamma) / (1.0 + gamma)
    if rho_bar <= 0.0:
        return 0.0
    return rho_bar * rho_bar * theta1 / (theta3 + rho_bar * rho_bar * theta2)


# ---------------------------------------------------------------------------
# exact RIP constants by exhaustive support enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RipEstimate:
    k: int
    delta_k: float
    argmax_support: tuple


def exact_rip(A, k: int, max_subsets: int = _SUBSET_GUARD, chunk: int = 200_000) -> RipEstimate:
    """Exact ``delta_k`` of a matrix by enumerating every size-``k`` support.

    Supports of size below ``k`` are dominated by eigenvalue interlacing, so
    only exact size-``k`` subsets are visited.  Refuses combinatorially
    infeasible requests (more than ``max_subsets`` subsets).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    count = math.comb(n, k)
    if count > max_subsets:
        raise ValueError(
            f"C({n},{k}) = {count} supports exceeds the enumeration guard of {max_subsets}"
        )
    gram = A.T @ A

    best = -np.inf
    best_support = None
    combos = combinations(range(n), k)
    while True:
        block = np.fromiter(
            (i for combo in islice(combos, chunk) for i in combo), dtype=np.intp
        )
        if block.size == 0:
            break
        supports = block.reshape(-1, k)
        sub = gram[supports[:, :, None], supports[:, None, :]]
        evals = np.linalg.eigvalsh(sub)
        dev = np.maximum(evals[:, -1] - 1.0, 1.0 - evals[:, 0])
        j = int(np.argmax(dev))
        if dev[j] > best:
            best = float(dev[j])
            best_support = tuple(int(i) for i in supports[j])
    return RipEstimate(k=k, delta_k=max(best, 0.0), argmax_support=best_support)


# ---------------------------------------------------------------------------
# robust null-space property spot checks
# ---------------------------------------------------------------------------


@dataclass
class RnspReport:
    k: int
    rho: float
    tau: float
    checked: int
    violations: list = field(default_factory=list)
    min_margin: float = math.inf

    @property
    def ok(self) -> bool:
        return not self.violations


def rnsp_check(A, k: int, rho: float, tau: float, trials: int = 1000, seed: int = 0,
               slack: float = 1e-9, random_supports: int = 3) -> RnspReport:
    """Sample vectors and supports against the l2 robust null-space inequality

        ||h_S||_2 <= (rho/sqrt(k)) * ||h_{S^c}||_1 + (tau/sqrt(k)) * ||A h||_2.

    For each trial vector the top-``k``-magnitude support (the worst case
    over supports) is always checked, plus a few random supports of size up
    to ``k``.  Vectors are drawn dense, sparse-plus-noise, and projected
    onto the null space when one exists.  Report-only: violations are
    collected, not raised.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    k = int(k)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    rng = np.random.default_rng(seed)
    report = RnspReport(k=k, rho=rho, tau=tau, checked=0)
    sq = math.sqrt(k)
    pinv_factor = np.linalg.pinv(A) if m < n else None

    for trial in range(trials):
        style = trial % 3
        h = rng.standard_normal(n)
        if style == 1:
            sparse = np.zeros(n)
            idx = rng.choice(n, size=min(k, n), replace=False)
            sparse[idx] = rng.standard_normal(idx.size) * 10.0
            h = sparse + 0.05 * h
        elif style == 2 and pinv_factor is not None:
            h = h - pinv_factor @ (A @ h)
            if not np.any(h):
                continue

        ah = float(np.linalg.norm(A @ h))
        order = np.argsort(-np.abs(h), kind="stable")
        supports = [order[:k]]
        for _ in range(random_supports):
            size = int(rng.integers(1, k + 1))
            supports.append(rng.choice(n, size=size, replace=False))

        for S in supports:
            mask = np.zeros(n, dtype=bool)
            mask[S] = True
            lhs = float(np.linalg.norm(h[mask]))
            rhs = rho / sq * float(np.sum(np.abs(h[~mask]))) + tau / sq * ah
            report.checked += 1
            margin = rhs - lhs
            report.min_margin = min(report.min_margin, margin)
            if lhs > rhs + slack * max(1.0, rhs):
                if len(report.violations) < 20:
                    report.violations.append(
                        {"trial": trial, "support": [int(i) for i in S],
                         "lhs": lhs, "rhs": rhs}
                    )
                else:
                    report.violations.append({"trial": trial})
    return report
