"""Estimation from a sketch state and the error functional.

``err(h, f) = ||h - f||_inf / ||f||_1``. Decoding returns the minimum-l1
element of the state's coset. The brute-force worst-case error oracles
measure how well any decoder could do on a kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import budget as _budget
from .intlinalg import Vector
from .lattice import OrthoSplit, Submodule, points_in_box, saturate
from .sketch import KernelSpec, SketchError, SketchState

ErrValue = Union[Fraction, float]

DEFAULT_SAMPLES = 10**5
WINDOWS = ("standard", "strict")


def _exact(v) -> bool:
    return isinstance(v, Rational)


def err(h: Sequence, f: Sequence[int]) -> ErrValue:
    """``||h - f||_inf / ||f||_1``; exact (a Fraction) when h is rational.

    At ``f = 0``: 0 if ``h = 0``, else infinity.
    """
    if len(h) != len(f):
        raise ValueError(f"length mismatch: {len(h)} vs {len(f)}")
    exact = all(_exact(v) for v in h)
    diff = max((abs(a - b) for a, b in zip(h, f)), default=0)
    norm = sum(abs(v) for v in f)
    if norm == 0:
        return (Fraction(0) if exact else 0.0) if diff == 0 else math.inf
    if exact:
        return Fraction(diff) / norm
    return float(diff) / norm


def err_set(h: Sequence, S: Iterable[Sequence[int]]) -> ErrValue:
    """Worst error of the single estimate ``h`` over every vector of S (0 if S is empty)."""
    return max((err(h, y) for y in S), default=Fraction(0))


def l1(x) -> int:
    return sum(abs(v) for v in x)


def min_l1(S: Iterable[Sequence[int]]) -> Vector:
    """Element of smallest l1 norm; ties go to the lexicographically smallest."""
    return min((tuple(y) for y in S), key=lambda y: (l1(y), y))


@dataclass(frozen=True)
class DecodeBudget:
    max_enumerated_points: int = _budget.DEFAULT_BUDGET

    def __post_init__(self):
        if self.max_enumerated_points <= 0:
            raise ValueError("decode budget must be positive")


def _budget_value(budget) -> int:
    if isinstance(budget, DecodeBudget):
        return budget.max_enumerated_points
    return _budget.resolve(budget)


def _descend(M: Submodule, x: Vector) -> Vector:
    # greedy +-basis-row moves; only shrinks the start point, the search below is exact
    rows = M.basis.rows
    best = l1(x)
    improved = True
    while improved:
        improved = False
        for b in rows:
            for sign in (1, -1):
                y = tuple(u + sign * v for u, v in zip(x, b))
                ny = l1(y)
                if ny < best:
                    x, best, improved = y, ny, True
    return x


def min_l1_in_coset(M: Submodule, x0: Sequence[int], budget=None) -> Vector:
    """The minimum-l1 vector of ``x0 + M``, lexicographically smallest among ties.

    Any ``x`` in the coset with ``||x||_1 <= ||x0||_1`` has ``|x_j| <= ||x0||_1``,
    so trying every lattice offset with that coordinate bound is exhaustive.
    The HNF coefficients are walked depth first in lexicographic order of the
    result, pruned by the l1 mass of the coordinates already fixed.
    """
    x0 = tuple(int(v) for v in x0)
    if len(x0) != M.n:
        raise ValueError(f"vector of length {len(x0)} for ambient dimension {M.n}")
    if M.rank == 0:
        return x0
    limit = _budget_value(budget)
    start = _descend(M, x0)
    N = l1(start)
    n = M.n
    rows = M.basis.rows
    piv = M.pivots
    r = len(rows)
    stops = list(piv[1:]) + [n]
    best_norm = N
    best: Optional[Vector] = None
    nodes = 0
    # coordinates before the first pivot never change
    head = sum(abs(v) for v in start[:piv[0]])

    def rec(k, x, partial):
        nonlocal best, best_norm, nodes
        if k == r:
            if partial < best_norm or best is None:
                best, best_norm = tuple(x), partial
            return
        p = piv[k]
        a = rows[k][p]
        cmin = -((x[p] + N) // a)
        cmax = (N - x[p]) // a
        for c in range(cmin, cmax + 1):
            nodes += 1
            if nodes > limit:
                raise _budget.BudgetExceeded(nodes, limit, "search nodes")
            y = [u + c * v for u, v in zip(x, rows[k])] if c else x
            seg = 0
            for j in range(p, stops[k]):
                seg += abs(y[j])
            total = partial + seg
            # later candidates are lexicographically larger, so ties can be cut
            if total > best_norm or (best is not None and total == best_norm):
                continue
            if any(abs(y[j]) > N for j in range(p, stops[k])):
                continue
            rec(k + 1, y, total)

    rec(0, list(start), head)
    return best


def coset_representative(spec: KernelSpec, s: SketchState) -> Vector:
    """Some ``x`` with ``rho(x) == s``: lift the residues through the inverse transform."""
    if s.kernel_fingerprint != spec.fingerprint:
        raise SketchError("state does not belong to this kernel")
    if len(s.torsion_residues) != len(spec.torsion_rows) or len(s.free_coords) != len(spec.free_rows):
        raise SketchError("state has the wrong number of coordinates")
    y = [0] * spec.n
    for i, v in zip(spec.torsion_rows, s.torsion_residues):
        y[i] = v
    for i, v in zip(spec.free_rows, s.free_coords):
        y[i] = v
    return spec.inverse @ y


def estimate(spec: KernelSpec, s: SketchState, budget=None, saturated: bool = False) -> Vector:
    """Minimum-l1 decoding of a state.

    With ``saturated=True`` the search runs over the saturation of the kernel
    (a coarser coset containing the true one).
    """
    x0 = coset_representative(spec, s)
    M = saturate(spec.module) if saturated else spec.module
    return min_l1_in_coset(M, x0, budget)


def worst_case_err_zero(M: Submodule, m: int, budget=None) -> Fraction:
    """``max ||x||_inf / ||x||_1`` over nonzero x in ``M ∩ {-m..m}^n`` (0 if none)."""
    best = Fraction(0)
    for x in points_in_box(M, m, budget):
        norm = l1(x)
        if norm:
            val = Fraction(max(abs(v) for v in x), norm)
            if val > best:
                best = val
    return best


def _ratio(Z: np.ndarray) -> np.ndarray:
    norms = np.abs(Z).sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.abs(Z).max(axis=-1) / norms
    return np.where(norms > 0, out, 0.0)


def _lp_extreme(V2: np.ndarray, i: int) -> Optional[np.ndarray]:
    """Vector z in span(V2) with z_i = 1 and minimal l1 norm, polished on its support."""
    from scipy.optimize import linprog

    n, r = V2.shape
    # variables: g (r), t (n); minimise sum t subject to -t <= V2 g <= t, (V2 g)_i = 1
    c = np.concatenate([np.zeros(r), np.ones(n)])
    A_ub = np.block([[V2, -np.eye(n)], [-V2, -np.eye(n)]])
    b_ub = np.zeros(2 * n)
    A_eq = np.concatenate([V2[i], np.zeros(n)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(None, None)] * r + [(0, None)] * n, method="highs")
    if res.status != 0:
        return None
    z = V2 @ res.x[:r]
    zeros = np.flatnonzero(np.abs(z) < 1e-7)
    zeros = zeros[zeros != i]
    if len(zeros):
        A = np.vstack([V2[zeros], V2[i:i + 1]])
        rhs = np.zeros(len(zeros) + 1)
        rhs[-1] = 1.0
        g, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        polished = V2 @ g
        if np.allclose(polished, z, atol=1e-6):
            z = polished
    return z


def worst_case_err_extension(split: OrthoSplit, samples: int = DEFAULT_SAMPLES, seed=0,
                             refine: bool = True) -> float:
    """Estimate of ``sup ||z||_inf / ||z||_1`` over the real span of M.

    Combines seeded random combinations of V2's columns, the projections of
    the coordinate vectors, and (``refine=True``) a per-coordinate linear
    program. Every candidate is a point of the span, so the result never
    exceeds the true supremum beyond rounding.
    """
    V2 = split.V2
    n, r = V2.shape
    if r == 0:
        raise ValueError("the real span is {0}; the supremum is over an empty set")
    P = V2 @ V2.T
    best = float(_ratio(P).max())
    best = max(best, float(_ratio(V2.T).max()))
    rng = np.random.default_rng(seed)
    chunk = 10_000
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        Z = rng.standard_normal((k, r)) @ V2.T
        best = max(best, float(_ratio(Z).max()))
        done += k
    if refine:
        for i in range(n):
            if P[i, i] <= split.tolerance:
                continue  # coordinate i vanishes on the whole span
            z = _lp_extreme(V2, i)
            if z is not None:
                best = max(best, float(_ratio(z)))
    return best


@dataclass(frozen=True)
class RankBoundReport:
    n: int
    rank: int
    free_dim: int           # n - rank, the rank of V1
    eps: ErrValue
    eps_hat: Optional[float]
    bound: Optional[ErrValue]  # 1 / (72 eps^2)
    status: str             # "pass", "fail", "window-violated" or "hypothesis-not-met"

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def in_window(eps, n: int, window: str = "standard") -> bool:
    """Whether eps lies in the range where the rank bound is stated.

    ``"standard"`` is ``1/sqrt(6n) < eps <= 1/8``; ``"strict"`` also
    imposes ``1/(6 sqrt n) <= eps < 1/8``. Compared exactly by squaring.
    """
    if window not in WINDOWS:
        raise ValueError(f"unknown window {window!r}")
    eps = Fraction(eps) if not isinstance(eps, float) else eps
    if eps <= 0:
        return False
    ok = eps * eps * 6 * n > 1 and eps <= Fraction(1, 8)
    if window == "strict":
        ok = ok and eps * eps * 36 * n >= 1 and eps < Fraction(1, 8)
    return bool(ok)


def rank_bound_check(M: Submodule, split: OrthoSplit, eps, window: str = "standard",
                     samples: int = DEFAULT_SAMPLES, seed=0) -> RankBoundReport:
    """Check ``n - rank(M) >= 1/(72 eps^2)`` for a kernel that achieves eps.

    The hypothesis is that the measured extension error is at most eps; when
    it is not, the report says so instead of asserting anything.
    """
    n, r = M.n, M.rank
    if not in_window(eps, n, window):
        return RankBoundReport(n, r, n - r, eps, None, None, "window-violated")
    eps_q = eps if isinstance(eps, float) else Fraction(eps)
    bound = 1 / (72 * eps_q * eps_q)
    eps_hat = 0.0 if r == 0 else worst_case_err_extension(split, samples, seed)
    if eps_hat > eps_q + split.tolerance:
        return RankBoundReport(n, r, n - r, eps, eps_hat, bound, "hypothesis-not-met")
    status = "pass" if n - r >= bound else "fail"
    return RankBoundReport(n, r, n - r, eps, eps_hat, bound, status)
