"""Brute-force verification suites behind ``lattice-sketch verify``.

Each suite returns a :class:`SuiteResult` with a counterexample record for
every failing case. A case that would exceed the enumeration budget is
recorded as skipped instead of aborting the suite.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List

from . import automaton as au
from .battery import battery, resolve_kernel
from .budget import BudgetExceeded
from .decode import (
    err, err_set, estimate, min_l1, rank_bound_check, worst_case_err_extension,
    worst_case_err_zero,
)
from .intlinalg import IntMatrix, hnf, is_unimodular, snf, solve_integral
from .lattice import box, coset_count, member, ortho_split, points_in_box, saturate
from .sketch import StreamRecord, compile_kernel, init, merge, process_stream, state_of


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: List[dict] = field(default_factory=list)
    skipped: List[dict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, **info):
        self.failures.append(info)

    def as_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "cases": self.cases,
                "failures": self.failures, "skipped": self.skipped, "notes": self.notes}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def random_stream(rng: random.Random, n: int, length: int) -> List[StreamRecord]:
    return [StreamRecord(rng.randint(1, n), rng.choice((1, -1))) for _ in range(length)]


def load_automaton_arg(spec: str) -> au.ExplicitAutomaton:
    if Path(spec).exists() or spec.endswith(".json"):
        return au.load_automaton(spec)
    return au.named_automaton(spec)


def suite_l1min(trials=1000, n=5, seed=0, **_) -> SuiteResult:
    res = SuiteResult("l1min")
    rng = random.Random(seed)
    for t in range(trials):
        S = [tuple(rng.randint(-6, 6) for _ in range(n)) for _ in range(rng.randint(1, 50))]
        if rng.random() < 0.5:
            h = tuple(rng.randint(-6, 6) for _ in range(n))
        else:
            h = tuple(Fraction(rng.randint(-60, 60), rng.randint(1, 10)) for _ in range(n))
        u = min_l1(S)
        res.cases += 1
        lhs, eps = err_set(u, S), err_set(h, S)
        if not lhs <= 2 * eps:
            res.fail(trial=t, S=S, h=_jsonable(h), lhs=_jsonable(lhs), eps=_jsonable(eps))
    return res


def suite_zero(n=3, m=2, seed=0, per_kernel=100, **_) -> SuiteResult:
    res = SuiteResult("zero")
    rng = random.Random(seed)
    zero = (0,) * n
    for name, M in battery(n):
        try:
            S = points_in_box(M, m)
        except BudgetExceeded as exc:
            res.skipped.append({"kernel": name, "reason": str(exc)})
            continue
        base = err_set(zero, S)
        for _ in range(per_kernel):
            h = tuple(Fraction(rng.randint(-4 * m, 4 * m), rng.randint(1, 4)) for _ in range(n))
            res.cases += 1
            if not base <= err_set(h, S):
                res.fail(kernel=name, h=_jsonable(h), err0=str(base))
    return res


def suite_zero_extension(n=3, m=10, samples=20000, seed=0, slack=0.05, **_) -> SuiteResult:
    res = SuiteResult("zero-extension")
    for name, M in battery(n):
        if M.rank == 0:
            res.notes.append(f"{name}: real span is {{0}}, skipped")
            continue
        try:
            exact = worst_case_err_zero(M, m)
        except BudgetExceeded as exc:
            res.skipped.append({"kernel": name, "reason": str(exc)})
            continue
        ext = worst_case_err_extension(ortho_split(M), samples, seed)
        res.cases += 1
        if ext < float(exact) - 1e-9 or ext > float(exact) + slack:
            res.fail(kernel=name, extension=ext, box=str(exact), radius=m)
    return res


def suite_pathindependent(n=3, m=2, **_) -> SuiteResult:
    res = SuiteResult("pathindependent")
    for name, M in battery(n):
        Ms = saturate(M)
        try:
            eps = worst_case_err_zero(Ms, 4 * m)
        except BudgetExceeded as exc:
            res.skipped.append({"kernel": name, "reason": str(exc)})
            continue
        spec = compile_kernel(M)
        for x in box(n, m):
            if not any(x):
                continue
            res.cases += 1
            e = err(estimate(spec, state_of(spec, x), saturated=True), x)
            if not e <= 4 * eps:
                res.fail(kernel=name, x=x, err=str(e), eps=str(eps))
    return res


def suite_space_count(kernel="repetition", n=2, m=1, **_) -> SuiteResult:
    res = SuiteResult("space-count")
    M = resolve_kernel(kernel, n)
    count = coset_count(M, m)
    lower = (2 * m + 1) ** (M.n - M.rank)
    res.cases = 1
    res.notes.append(f"{kernel}: {count} >= {lower}")
    if count < lower:
        res.fail(kernel=kernel, count=count, lower=lower)
    return res


def suite_rank_bound(kernel="zero", n=16, eps="1/8", window="standard", samples=20000, seed=0, **_) -> SuiteResult:
    res = SuiteResult("rank-bound")
    M = resolve_kernel(kernel, n)
    eps_v = Fraction(eps)
    rep = rank_bound_check(M, ortho_split(M), eps_v, window=window, samples=samples, seed=seed)
    res.cases = 1
    res.notes.append(f"{kernel}: n-r = {rep.free_dim}, bound = {rep.bound}, status = {rep.status}")
    if rep.status == "fail":
        res.fail(kernel=kernel, free_dim=rep.free_dim, bound=str(rep.bound))
    return res


def suite_nrrev(automaton="clamped:3", m=4, **_) -> SuiteResult:
    res = SuiteResult("nrrev")
    A = load_automaton_arg(automaton)
    am = au.alpha_map(A, m)
    R = au.reversibilize(A, m, alpha=am)
    for t in R.configs:
        for l in au.letters(A.n):
            res.cases += 1
            if R.step(R.step(t, l), -l) != t:
                res.fail(config=t, letter=l)
    # outputs of R match A on the recorded zero-frequency padding
    rng = random.Random(0)
    for _ in range(200):
        sigma = tuple(rng.choice(au.letters(A.n)) for _ in range(rng.randint(0, 8)))
        try:
            padded = am.padded_stream(A, sigma)
        except KeyError:
            continue  # run left C_m
        res.cases += 1
        if au.stream_frequency(padded, A.n) != au.stream_frequency(sigma, A.n) or \
                R.out(R.run(sigma)) != A.out(A.run(padded)):
            res.fail(stream=sigma, padded=padded)
    return res


def suite_quotient(automaton="clamped:3", m=4, length=6, slack=2, **_) -> SuiteResult:
    res = SuiteResult("quotient")
    A = load_automaton_arg(automaton)
    R = au.reversibilize(A, m)
    Q = au.quotient_path_independent(R, m)
    checks = {
        "reversible": au.is_path_reversible(R),
        "path-independent": au.is_path_independent(Q, m),
        "output-restriction": bool(au.is_output_restriction(Q, A, length, slack)),
        "state-count": coset_count(Q.kernel, m) <= len(au.reachable_configs(A, m)),
    }
    for k, ok in checks.items():
        res.cases += 1
        res.notes.append(f"{k}: {'pass' if ok else 'FAIL'}")
        if not ok:
            res.fail(check=k)
    res.notes.append(f"kernel at radius {m}: {Q.kernel.basis.tolist()}")
    return res


def random_matrix(rng: random.Random, max_dim=6, bound=10) -> IntMatrix:
    r, c = rng.randint(1, max_dim), rng.randint(1, max_dim)
    return IntMatrix.of([[rng.randint(-bound, bound) for _ in range(c)] for _ in range(r)], c)


def suite_normal_forms(trials=1000, seed=0, **_) -> SuiteResult:
    res = SuiteResult("normal-forms")
    rng = random.Random(seed)
    for t in range(trials):
        A = random_matrix(rng)
        res.cases += 1
        dec = snf(A)
        d = [f for f in dec.invariant_factors if f]
        ok = (dec.U @ A @ dec.V == dec.D and is_unimodular(dec.U) and is_unimodular(dec.V)
              and all(b % a == 0 for a, b in zip(d, d[1:])))
        H, U = hnf(A)
        ok = ok and U @ A == H and is_unimodular(U)
        ok = ok and all(solve_integral(H, row) is not None for row in A.rows)
        ok = ok and all(solve_integral(A, row) is not None for row in H.rows if any(row))
        if not ok:
            res.fail(trial=t, A=A.tolist())
    return res


def suite_kernel_equality(n=3, m=3, **_) -> SuiteResult:
    res = SuiteResult("kernel-equality")
    for name, M in battery(n):
        spec = compile_kernel(M)
        zero = init(spec)
        for x in box(n, m):
            res.cases += 1
            if (state_of(spec, x) == zero) != member(M, x):
                res.fail(kernel=name, x=x)
    return res


def suite_mergeability(trials=1000, seed=0, **_) -> SuiteResult:
    res = SuiteResult("mergeability")
    rng = random.Random(seed)
    for t in range(trials):
        n = rng.randint(1, 8)
        name, M = rng.choice(battery(n))
        spec = compile_kernel(M)
        s1 = random_stream(rng, n, rng.randint(0, 100))
        s2 = random_stream(rng, n, rng.randint(0, 100))
        whole = process_stream(spec, init(spec), s1 + s2)
        parts = merge(spec, process_stream(spec, init(spec), s1), process_stream(spec, init(spec), s2))
        shuffled = list(s1 + s2)
        rng.shuffle(shuffled)
        perm = process_stream(spec, init(spec), shuffled)
        res.cases += 1
        if not whole == parts == perm:
            res.fail(trial=t, kernel=name, n=n)
    return res


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "l1min": suite_l1min,
    "zero": suite_zero,
    "zero-extension": suite_zero_extension,
    "pathindependent": suite_pathindependent,
    "space-count": suite_space_count,
    "rank-bound": suite_rank_bound,
    "nrrev": suite_nrrev,
    "quotient": suite_quotient,
    "normal-forms": suite_normal_forms,
    "kernel-equality": suite_kernel_equality,
    "mergeability": suite_mergeability,
}


def run_suite(name: str, **params) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](**{k: v for k, v in params.items() if v is not None})
