import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetsketch.battery import battery
from cosetsketch.budget import BudgetExceeded
from cosetsketch.decode import (
    DecodeBudget, coset_representative, err, err_set, estimate, in_window, l1, min_l1,
    min_l1_in_coset, rank_bound_check, worst_case_err_extension, worst_case_err_zero,
)
from cosetsketch.lattice import (
    box, full_module, make_submodule, member, ortho_split, points_in_box, saturate, zero_module,
)
from cosetsketch.sketch import compile_kernel, init, state_of


def small_modules(max_n=3, bound=3):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(st.lists(st.integers(-bound, bound), min_size=n, max_size=n), max_size=n)
        .map(lambda gens: make_submodule(n, gens)))


def brute_min_l1(M, x0):
    # every candidate at least as good as x0 lies in the box of radius ||x0||_1
    R = l1(x0)
    cands = [y for y in box(M.n, R) if member(M, tuple(a - b for a, b in zip(y, x0)))]
    return min(cands, key=lambda y: (l1(y), y))


def test_err_examples():
    assert err((3, -1), (3, -1)) == 0
    assert err((1, 1), (1, 0)) == 1
    for n in (1, 4, 9):
        assert err((0,) * n, (1,) * n) == Fraction(1, n)
    assert err((0, 0), (0, 0)) == 0
    assert err((1, 0), (0, 0)) == math.inf
    assert isinstance(err((Fraction(1, 2), 0), (1, 1)), Fraction)
    assert err((0.5, 1.0), (1, 1)) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        err((1,), (1, 2))


def test_err_set_and_min_l1():
    S = [(2, 0), (-1, 1), (0, -2)]
    assert min_l1(S) == (-1, 1)
    assert err_set((0, 0), S) == 1
    assert err_set((0, 0), []) == 0


def test_min_l1_examples_against_scan():
    M = make_submodule(3, [(1, 1, 1)])
    scan = min(((2 + t, t, t) for t in range(-10, 11)), key=lambda y: (l1(y), y))
    assert min_l1_in_coset(M, (2, 0, 0)) == scan == (2, 0, 0)
    M = make_submodule(2, [(1, 1)])
    scan = min(((3 + t, 1 + t) for t in range(-10, 11)), key=lambda y: (l1(y), y))
    assert min_l1_in_coset(M, (3, 1)) == scan == (0, -2)
    assert min_l1_in_coset(M, (4, 4)) == (0, 0)
    with pytest.raises(ValueError):
        min_l1_in_coset(M, (1, 2, 3))


@settings(max_examples=150, deadline=None)
@given(small_modules(), st.data())
def test_min_l1_matches_brute_force(M, data):
    x0 = data.draw(st.tuples(*[st.integers(-2, 2)] * M.n))
    got = min_l1_in_coset(M, x0)
    assert got == brute_min_l1(M, x0)
    assert min_l1_in_coset(M, x0) == got  # deterministic tie-break


def test_min_l1_budget():
    M = make_submodule(3, [(1, 2, 3), (0, 5, 1)])
    with pytest.raises(BudgetExceeded):
        min_l1_in_coset(M, (40, -37, 29), DecodeBudget(5))
    with pytest.raises(ValueError):
        DecodeBudget(0)


def test_estimate_examples():
    spec = compile_kernel(make_submodule(3, [(1, 1, 1)]))
    assert estimate(spec, init(spec)) == (0, 0, 0)
    assert estimate(spec, state_of(spec, (2, 0, 0))) == (2, 0, 0)
    spec = compile_kernel(zero_module(3))
    assert estimate(spec, state_of(spec, (5, -2, 7))) == (5, -2, 7)


def test_estimate_saturated_decodes_coarser_coset():
    spec = compile_kernel(make_submodule(2, [(2, 2)]))
    s = state_of(spec, (1, 1))
    assert estimate(spec, s) == (-1, -1)  # ties with (1, 1), lexicographically smaller
    assert estimate(spec, s, saturated=True) == (0, 0)


@settings(max_examples=100, deadline=None)
@given(small_modules(max_n=4, bound=4), st.data())
def test_representative_roundtrip(M, data):
    spec = compile_kernel(M)
    x = data.draw(st.tuples(*[st.integers(-30, 30)] * M.n))
    s = state_of(spec, x)
    assert state_of(spec, coset_representative(spec, s)) == s
    assert coset_representative(spec, init(spec)) == (0,) * M.n


@pytest.mark.parametrize("n", [1, 2, 3])
def test_estimate_stays_in_coset(n):
    for _, M in battery(n):
        spec = compile_kernel(M)
        for x in box(n, 2):
            h = estimate(spec, state_of(spec, x))
            assert member(M, tuple(a - b for a, b in zip(h, x)))
            assert l1(h) <= l1(x)


def test_worst_case_zero_examples():
    for n in (2, 3, 4):
        assert worst_case_err_zero(make_submodule(n, [(1,) * n]), 3) == Fraction(1, n)
    assert worst_case_err_zero(zero_module(3), 2) == 0
    assert worst_case_err_zero(make_submodule(2, [(1, 1)]), 5) == Fraction(1, 2)


def test_worst_case_extension_examples():
    assert worst_case_err_extension(ortho_split(make_submodule(2, [(1, 1)])), 2000) == pytest.approx(0.5)
    assert worst_case_err_extension(ortho_split(make_submodule(3, [(1, 0, 0)])), 2000) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        worst_case_err_extension(ortho_split(zero_module(2)))
    sp = ortho_split(make_submodule(3, [(1, 2, 0), (0, 1, 3)]))
    assert worst_case_err_extension(sp, 500, seed=4) == worst_case_err_extension(sp, 500, seed=4)


@settings(max_examples=40, deadline=None)
@given(small_modules(max_n=3, bound=3))
def test_extension_contains_box_ratio(M):
    if M.rank == 0:
        return
    ext = worst_case_err_extension(ortho_split(M), 2000)
    assert ext >= float(worst_case_err_zero(M, 4)) - 1e-9
    assert ext <= 1 + 1e-12


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(*[st.integers(-8, 8)] * n), min_size=1, max_size=50),
    st.one_of(st.tuples(*[st.integers(-8, 8)] * n),
              st.tuples(*[st.fractions(-8, 8, max_denominator=12)] * n)))))
def test_min_l1_is_2_approximate(case):
    S, h = case
    assert err_set(min_l1(S), S) <= 2 * err_set(h, S)


@settings(max_examples=100, deadline=None)
@given(small_modules(max_n=3, bound=3), st.integers(1, 3), st.data())
def test_zero_is_optimal_on_symmetric_sets(M, m, data):
    S = points_in_box(M, m)
    h = data.draw(st.tuples(*[st.fractions(-3 * m, 3 * m, max_denominator=6)] * M.n))
    assert err_set((0,) * M.n, S) <= err_set(h, S)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_four_eps_chain(n):
    m = 2
    for _, M in battery(n):
        eps = worst_case_err_zero(saturate(M), 4 * m)
        spec = compile_kernel(M)
        for x in box(n, m):
            if any(x):
                assert err(estimate(spec, state_of(spec, x), saturated=True), x) <= 4 * eps


def test_rank_bound_arithmetic():
    rep = rank_bound_check(zero_module(16), ortho_split(zero_module(16)), Fraction(1, 8))
    assert rep.bound == Fraction(1, 72) / Fraction(1, 64) and rep.bound == Fraction(8, 9)
    assert rep.passed and rep.free_dim == 16 and rep.eps_hat == 0
    # the value 128/9 is what the formula gives at eps = 1/32
    assert 1 / (72 * Fraction(1, 32) ** 2) == Fraction(128, 9)


def test_rank_bound_windows():
    assert in_window(Fraction(1, 8), 16)
    assert not in_window(Fraction(1, 8), 16, window="strict")
    assert not in_window(Fraction(1, 8), 10)  # 1/sqrt(60) > 1/8
    assert not in_window(Fraction(1, 7), 100)
    with pytest.raises(ValueError):
        in_window(Fraction(1, 8), 16, window="other")
    M = make_submodule(100, [(1,) * 100])
    rep = rank_bound_check(M, ortho_split(M), Fraction(1, 100))
    assert rep.status == "window-violated" and not rep.passed


def test_rank_bound_hypothesis_not_met():
    M = full_module(16)
    rep = rank_bound_check(M, ortho_split(M), Fraction(1, 8), samples=1000)
    assert rep.status == "hypothesis-not-met"
    M = make_submodule(20, [(1,) * 20])
    rep = rank_bound_check(M, ortho_split(M), Fraction(1, 10), samples=2000)
    assert rep.eps_hat == pytest.approx(1 / 20)
    assert rep.status == "pass"
