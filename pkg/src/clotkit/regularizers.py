"""Penalty functions for sparse regression: values, exact proximal maps, sparsity index.

Six penalties are supported.  Four of them are norms (absolutely homogeneous):

* ``L1``    sum of absolute values (lasso),
* ``GL``    sum of per-group Euclidean norms (group lasso),
* ``SGL``   per-group combination ``(1 - mu)*l1 + mu*l2`` (sparse group lasso),
* ``CLOT``  ``(1 - mu)*l1 + mu*l2`` over all coordinates; identical to SGL
  with a single group covering everything,

and two are not:

* ``L2SQ``  squared Euclidean norm (ridge),
* ``EN``    elastic net ``mu*l1 + (1 - mu)*l2^2``.

Mind the two ``mu`` conventions: EN puts ``mu`` on the l1 term, while CLOT
and SGL put ``1 - mu`` on the l1 term.  Both conventions are kept exactly as
commonly written; mixing them up is the classic bug when comparing EN
against CLOT at "the same mu".

Group-lasso terms are not divided or weighted by group size here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "PenaltyKind",
    "Partition",
    "RegularizerSpec",
    "penalty_value",
    "prox",
    "sparsity_index",
]


class PenaltyKind(str, Enum):
    L1 = "l1"
    L2SQ = "l2sq"
    EN = "en"
    CLOT = "clot"
    GL = "gl"
    SGL = "sgl"


_GROUPED = (PenaltyKind.GL, PenaltyKind.SGL)
_MU_KINDS = (PenaltyKind.EN, PenaltyKind.CLOT, PenaltyKind.SGL)


@dataclass(frozen=True)
class Partition:
    """Disjoint grouping of the coordinates ``0..n-1``.

    ``groups`` is an ordered tuple of index tuples; the groups must be
    nonempty, pairwise disjoint, and cover every coordinate exactly once.
    """

    groups: tuple
    n: int

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if self.n < 1:
            raise ValueError("partition dimension must be positive")
        if not groups:
            raise ValueError("partition needs at least one group")
        seen = set()
        for g in groups:
            if not g:
                raise ValueError("empty group in partition")
            for i in g:
                if not 0 <= i < self.n:
                    raise ValueError(f"index {i} outside 0..{self.n - 1}")
                if i in seen:
                    raise ValueError(f"index {i} appears in two groups")
                seen.add(i)
        if len(seen) != self.n:
            missing = sorted(set(range(self.n)) - seen)
            raise ValueError(f"partition does not cover indices {missing[:5]}")

    @property
    def g(self) -> int:
        return len(self.groups)

    @cached_property
    def index_arrays(self) -> tuple:
        return tuple(np.asarray(g, dtype=np.intp) for g in self.groups)

    @classmethod
    def contiguous(cls, sizes: Sequence[int]) -> "Partition":
        """Partition into consecutive blocks of the given sizes."""
        bounds = np.cumsum([0, *sizes])
        groups = tuple(tuple(range(bounds[i], bounds[i + 1])) for i in range(len(sizes)))
        return cls(groups, int(bounds[-1]))

    @classmethod
    def single(cls, n: int) -> "Partition":
        return cls((tuple(range(n)),), n)


@dataclass(frozen=True)
class RegularizerSpec:
    """Which penalty to use, with its mixing parameter and group structure.

    ``mu`` is required to lie in [0, 1] for EN, CLOT, and SGL.  GL ignores
    ``mu`` (it behaves as SGL with mu = 1).  SGL and GL require a partition;
    CLOT takes an optional one but always acts as a single group.
    """

    kind: PenaltyKind
    mu: float = 0.0
    partition: Optional[Partition] = None

    def __post_init__(self):
        kind = PenaltyKind(self.kind.lower() if isinstance(self.kind, str) else self.kind)
        object.__setattr__(self, "kind", kind)
        mu = float(self.mu)
        if kind in _MU_KINDS and not 0.0 <= mu <= 1.0:
            raise ValueError(f"mu={mu} outside [0, 1] for {kind.value}")
        if kind is PenaltyKind.GL:
            mu = 1.0
        if kind in (PenaltyKind.L1, PenaltyKind.L2SQ):
            mu = 0.0
        object.__setattr__(self, "mu", mu)
        if kind in _GROUPED and self.partition is None:
            raise ValueError(f"{kind.value} requires a partition")

    # -- convenience constructors -------------------------------------------
    @classmethod
    def lasso(cls):
        return cls(PenaltyKind.L1)

    @classmethod
    def ridge(cls):
        return cls(PenaltyKind.L2SQ)

    @classmethod
    def elastic_net(cls, mu: float):
        return cls(PenaltyKind.EN, mu)

    @classmethod
    def clot(cls, mu: float):
        return cls(PenaltyKind.CLOT, mu)

    @classmethod
    def group_lasso(cls, partition: Partition):
        return cls(PenaltyKind.GL, 1.0, partition)

    @classmethod
    def sparse_group_lasso(cls, mu: float, partition: Partition):
        return cls(PenaltyKind.SGL, mu, partition)

    def group_indices(self, n: int) -> tuple:
        """Index arrays of the groups this spec acts on, for dimension ``n``."""
        if self.partition is not None:
            if self.partition.n != n:
                raise ValueError(
                    f"vector has length {n} but the partition covers {self.partition.n}"
                )
            return self.partition.index_arrays
        return (np.arange(n, dtype=np.intp),)

    def label(self) -> str:
        if self.kind in _MU_KINDS:
            return f"{self.kind.value}(mu={self.mu:g})"
        return self.kind.value


def _soft(v: np.ndarray, t: float) -> np.ndarray:
    """Componentwise soft threshold at level ``t >= 0``."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _block_shrink(u: np.ndarray, t: float) -> np.ndarray:
    """Euclidean-norm shrinkage ``u * max(1 - t/||u||, 0)``."""
    nrm = float(np.linalg.norm(u))
    if nrm <= t:
        return np.zeros_like(u)
    return u * (1.0 - t / nrm)


def penalty_value(spec: RegularizerSpec, z) -> float:
    """Value of the penalty at ``z``; nonnegative, zero only at the origin."""
    z = np.asarray(z, dtype=float)
    kind, mu = spec.kind, spec.mu
    if kind is PenaltyKind.L1:
        return float(np.sum(np.abs(z)))
    if kind is PenaltyKind.L2SQ:
        return float(z @ z)
    if kind is PenaltyKind.EN:
        return float(mu * np.sum(np.abs(z)) + (1.0 - mu) * (z @ z))
    if kind is PenaltyKind.CLOT and spec.partition is None:
        return float((1.0 - mu) * np.sum(np.abs(z)) + mu * np.linalg.norm(z))
    total = 0.0
    for idx in spec.group_indices(z.shape[0]):
        zg = z[idx]
        total += (1.0 - mu) * float(np.sum(np.abs(zg))) + mu * float(np.linalg.norm(zg))
    return total


def prox(spec: RegularizerSpec, v, step: float) -> np.ndarray:
    """Exact minimizer of ``step * R(z) + 0.5 * ||z - v||^2``.

    Closed forms: soft thresholding for L1; scaling for ridge; threshold
    then rescale for EN; and per group, soft threshold at ``step*(1 - mu)``
    followed by a Euclidean shrink at ``step*mu`` for CLOT/SGL/GL.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    v = np.asarray(v, dtype=float)
    kind, mu = spec.kind, spec.mu
    if kind is PenaltyKind.L1:
        return _soft(v, step)
    if kind is PenaltyKind.L2SQ:
        return v / (1.0 + 2.0 * step)
    if kind is PenaltyKind.EN:
        return _soft(v, step * mu) / (1.0 + 2.0 * step * (1.0 - mu))
    if kind is PenaltyKind.CLOT and spec.partition is None:
        return _block_shrink(_soft(v, step * (1.0 - mu)), step * mu)
    out = np.empty_like(v)
    for idx in spec.group_indices(v.shape[0]):
        out[idx] = _block_shrink(_soft(v[idx], step * (1.0 - mu)), step * mu)
    return out


def sparsity_index(x, k: int, norm: str = "l1") -> float:
    """Distance from ``x`` to the nearest vector with at most ``k`` nonzeros.

    Equals the chosen norm of ``x`` with its ``k`` largest-magnitude entries
    zeroed out.  Magnitude ties are broken toward lower indices (the value
    itself does not depend on the tie break).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    k = int(k)
    if not 0 <= k <= n:
        raise ValueError(f"k={k} outside 0..{n}")
    order = np.argsort(-np.abs(x), kind="stable")
    tail = x[order[k:]]
    if norm == "l1":
        return float(np.sum(np.abs(tail)))
    if norm == "l2":
        return float(np.linalg.norm(tail))
    raise ValueError(f"unknown norm {norm!r}; expected 'l1' or 'l2'")
