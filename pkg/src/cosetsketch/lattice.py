"""Submodules of Z^n as values.

A :class:`Submodule` is stored by its canonical HNF basis, so two submodules
are equal exactly when their dataclass fields are equal. This module also
provides saturation, the quotient shape, the real span (as an orthonormal
split of R^n) and brute-force counting over the box ``{-m..m}^n``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from . import budget as _budget
from .intlinalg import IntMatrix, Vector, hnf, integral_kernel, pivot_columns, snf, solve_integral

ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class Submodule:
    n: int
    basis: IntMatrix

    def __post_init__(self):
        if self.basis.ncols != self.n:
            raise ValueError(f"basis has {self.basis.ncols} columns, ambient dimension is {self.n}")

    @property
    def rank(self) -> int:
        return self.basis.nrows

    @cached_property
    def pivots(self) -> Tuple[int, ...]:
        return pivot_columns(self.basis)

    @cached_property
    def fingerprint(self) -> str:
        doc = json.dumps({"n": self.n, "basis": self.basis.tolist()}, separators=(",", ":"))
        return hashlib.sha256(doc.encode()).hexdigest()

    def __contains__(self, x) -> bool:
        return member(self, x)

    def __repr__(self):
        return f"Submodule(n={self.n}, basis={self.basis.tolist()})"


@dataclass(frozen=True)
class QuotientShape:
    """Z^n/M as ``Z^free_rank + Z/(q_1) + ... + Z/(q_k)`` with ``q_i > 1``."""

    free_rank: int
    torsion: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class OrthoSplit:
    """Orthonormal columns: ``V2`` spans the real span of M, ``V1`` its complement."""

    V1: np.ndarray
    V2: np.ndarray
    tolerance: float = ORTHO_TOL

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the real span of M."""
        return self.V2 @ self.V2.T

    def check(self) -> None:
        n = self.V1.shape[0]
        V = np.hstack([self.V1, self.V2])
        tol = self.tolerance
        if V.shape != (n, n):
            raise AssertionError(f"split has shape {V.shape}, expected {(n, n)}")
        if not np.allclose(V.T @ V, np.eye(n), atol=tol, rtol=0):
            raise AssertionError("columns are not orthonormal")
        if not np.allclose(V @ V.T, np.eye(n), atol=tol, rtol=0):
            raise AssertionError("V1 V1^T + V2 V2^T differs from the identity")


def make_submodule(n: int, generators=()) -> Submodule:
    """Canonical submodule spanned over Z by the generator rows."""
    gens = [tuple(int(v) for v in row) for row in generators]
    for row in gens:
        if len(row) != n:
            raise ValueError(f"generator {row} does not have length {n}")
    if not gens:
        return Submodule(n, IntMatrix.zeros(0, n))
    H, _ = hnf(IntMatrix.of(gens, n))
    r = len(pivot_columns(H))
    return Submodule(n, IntMatrix(H.rows[:r], n))


def zero_module(n: int) -> Submodule:
    return make_submodule(n)


def full_module(n: int) -> Submodule:
    return make_submodule(n, IntMatrix.identity(n).rows)


def _check_vector(M: Submodule, x) -> Vector:
    x = tuple(int(v) for v in x)
    if len(x) != M.n:
        raise ValueError(f"vector of length {len(x)} for ambient dimension {M.n}")
    return x


def member(M: Submodule, x: Sequence[int]) -> bool:
    x = _check_vector(M, x)
    if not any(x):
        return True
    if M.rank == 0:
        return False
    return solve_integral(M.basis, x) is not None


def contains(M: Submodule, N: Submodule) -> bool:
    """True when N is a subset of M."""
    return all(member(M, row) for row in N.basis.rows)


def saturate(M: Submodule) -> Submodule:
    """``{x : a*x in M for some a != 0}``, the real span of M intersected with Z^n.

    Computed as the integer vectors orthogonal to every integer vector
    orthogonal to M.
    """
    if M.rank in (0, M.n):
        return M if M.rank == 0 else full_module(M.n)
    ortho = integral_kernel(M.basis)
    return make_submodule(M.n, integral_kernel(ortho).rows)


def quotient_shape(M: Submodule) -> QuotientShape:
    if M.rank == 0:
        return QuotientShape(M.n, ())
    factors = snf(M.basis).invariant_factors
    return QuotientShape(M.n - M.rank, tuple(q for q in factors if q > 1))


def _gram_schmidt(vectors, against=(), tol=ORTHO_TOL) -> List[np.ndarray]:
    basis = [np.asarray(q, dtype=float) for q in against]
    out = []
    for v in vectors:
        w = np.asarray(v, dtype=float)
        scale = np.linalg.norm(w)
        if scale == 0:
            continue
        w = w / scale
        for _ in range(2):  # second pass re-orthogonalises
            for q in basis + out:
                w = w - (q @ w) * q
        norm = np.linalg.norm(w)
        if norm > tol:
            out.append(w / norm)
    return out


def ortho_split(M: Submodule) -> OrthoSplit:
    n = M.n
    v2 = _gram_schmidt(M.basis.rows)
    if len(v2) != M.rank:
        raise ArithmeticError("basis rows became dependent during orthonormalisation")
    complement = integral_kernel(M.basis).rows if M.rank else IntMatrix.identity(n).rows
    v1 = _gram_schmidt(complement, against=v2)
    if len(v1) != n - M.rank:
        raise ArithmeticError("complement has the wrong dimension")
    V1 = np.array(v1).T if v1 else np.zeros((n, 0))
    V2 = np.array(v2).T if v2 else np.zeros((n, 0))
    split = OrthoSplit(V1, V2)
    split.check()
    return split


def box_size(n: int, m: int) -> int:
    return (2 * m + 1) ** n


def box(n: int, m: int) -> Iterator[Vector]:
    """All points of ``{-m..m}^n`` in lexicographic order."""
    return itertools.product(range(-m, m + 1), repeat=n)


def lattice_points(M: Submodule, lo: Sequence[int], hi: Sequence[int], budget=None) -> Iterator[Vector]:
    """Points ``v`` of M with ``lo[j] <= v[j] <= hi[j]``, in lexicographic order.

    Walks the HNF coefficients depth first. HNF row k vanishes before its
    pivot, so once the first k coefficients are fixed every coordinate left
    of the next pivot is final and can be range-checked. The number of
    search nodes is charged against the budget.
    """
    budget = _budget.resolve(budget)
    n = M.n
    rows = M.basis.rows
    piv = M.pivots
    r = len(rows)
    stops = list(piv[1:]) + [n]
    start = piv[0] if r else n
    if any(lo[j] > 0 or hi[j] < 0 for j in range(start)):
        return
    nodes = 0

    def ok(v, a, b):
        return all(lo[j] <= v[j] <= hi[j] for j in range(a, b))

    def rec(k, v):
        nonlocal nodes
        if k == r:
            yield tuple(v)
            return
        p = piv[k]
        a = rows[k][p]
        cmin = -((v[p] - lo[p]) // a)      # ceil((lo - v) / a)
        cmax = (hi[p] - v[p]) // a
        # visit coefficients so that output is lexicographic: pivot entry increases with c
        for c in range(cmin, cmax + 1):
            nodes += 1
            if nodes > budget:
                raise _budget.BudgetExceeded(nodes, budget, "search nodes")
            w = [x + c * y for x, y in zip(v, rows[k])] if c else list(v)
            if ok(w, p, stops[k]):
                yield from rec(k + 1, w)

    yield from rec(0, [0] * n)


def points_in_box(M: Submodule, m: int, budget=None) -> List[Vector]:
    """``M ∩ {-m..m}^n`` in lexicographic order."""
    return list(lattice_points(M, [-m] * M.n, [m] * M.n, budget))


def coset_count(M: Submodule, m: int, budget=None) -> int:
    """Number of distinct cosets ``x + M`` for x in the box, by exhaustive bucketing."""
    from .sketch import compile_kernel

    _budget.require(box_size(M.n, m), budget)
    spec = compile_kernel(M)
    return len({spec.residue(x) for x in box(M.n, m)})


def coset_buckets(M: Submodule, m: int, budget=None):
    """Map residue key -> list of box points in that coset."""
    from .sketch import compile_kernel

    _budget.require(box_size(M.n, m), budget)
    spec = compile_kernel(M)
    buckets = {}
    for x in box(M.n, m):
        buckets.setdefault(spec.residue(x), []).append(x)
    return buckets


def load_kernel(source) -> Submodule:
    """Read a kernel document ``{"n": int, "basis": [[int, ...], ...]}``.

    ``source`` is a path or an already parsed dict. Basis rows need not be
    canonical.
    """
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text())
    if not isinstance(doc, dict) or "n" not in doc or "basis" not in doc:
        raise ValueError("kernel document needs 'n' and 'basis'")
    n = doc["n"]
    rows = doc["basis"]
    if not isinstance(n, int) or n < 0 or not isinstance(rows, list):
        raise ValueError("malformed kernel document")
    for row in rows:
        if not isinstance(row, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in row):
            raise ValueError(f"malformed basis row {row!r}")
    return make_submodule(n, rows)


def kernel_document(M: Submodule) -> dict:
    return {"n": M.n, "basis": M.basis.tolist()}


def dump_kernel(M: Submodule, path) -> None:
    Path(path).write_text(json.dumps(kernel_document(M)) + "\n")


def bits(count: int) -> float:
    return math.log2(count)
