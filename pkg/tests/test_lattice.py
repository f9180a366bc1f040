import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetsketch.battery import battery, named_kernel
from cosetsketch.budget import BudgetExceeded
from cosetsketch.lattice import (
    box, contains, coset_buckets, coset_count, dump_kernel, full_module, load_kernel,
    make_submodule, member, ortho_split, points_in_box, quotient_shape, saturate, zero_module,
)


def submodules(max_n=4, bound=4):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(st.lists(st.integers(-bound, bound), min_size=n, max_size=n), max_size=n)
        .map(lambda gens: make_submodule(n, gens)))


def brute_member(M, x, radius=8):
    # oracle: search coefficient vectors directly
    for c in itertools.product(range(-radius, radius + 1), repeat=M.rank):
        if tuple(sum(ci * row[j] for ci, row in zip(c, M.basis.rows)) for j in range(M.n)) == tuple(x):
            return True
    return not any(x) if M.rank == 0 else False


def test_make_submodule_examples():
    assert make_submodule(2, [(2, 4), (6, 8)]).basis.tolist() == [[2, 0], [0, 4]]
    Z = make_submodule(3, [])
    assert Z.rank == 0 and Z == zero_module(3)
    M = make_submodule(2, [(1, 1), (2, 2)])
    assert M.basis.tolist() == [[1, 1]] and M.rank == 1
    with pytest.raises(ValueError):
        make_submodule(2, [(1, 2, 3)])


def test_equality_is_canonical():
    assert make_submodule(2, [(1, 1), (0, 2)]) == make_submodule(2, [(1, -1), (2, 0), (3, 3)])
    assert make_submodule(2, [(1, 1)]).fingerprint == make_submodule(2, [(-2, -2), (3, 3)]).fingerprint


def test_member_examples():
    M = make_submodule(2, [(1, 1)])
    assert member(M, (0, 0)) and member(zero_module(3), (0, 0, 0))
    assert member(M, (2, 2)) and (2, 2) in M
    assert not member(M, (1, 2))
    with pytest.raises(ValueError):
        member(M, (1, 2, 3))


def test_saturate_examples():
    assert saturate(make_submodule(2, [(2, 2)])) == make_submodule(2, [(1, 1)])
    assert saturate(make_submodule(2, [(2, 0), (0, 3)])) == full_module(2)
    M = make_submodule(2, [(1, 1)])
    assert saturate(M) == M


def test_quotient_shape_examples():
    s = quotient_shape(make_submodule(2, [(2, 0), (0, 3)]))
    assert (s.free_rank, s.torsion) == (0, (6,))
    s = quotient_shape(zero_module(3))
    assert (s.free_rank, s.torsion) == (3, ())
    s = quotient_shape(make_submodule(2, [(1, 1)]))
    assert (s.free_rank, s.torsion) == (1, ())


def test_ortho_split_examples():
    sp = ortho_split(make_submodule(2, [(1, 1)]))
    assert np.allclose(np.abs(sp.V2[:, 0]), [1 / math.sqrt(2)] * 2)
    assert np.allclose(np.abs(sp.V1[:, 0]), [1 / math.sqrt(2)] * 2)
    assert abs(sp.V1[:, 0] @ np.array([1, 1])) < 1e-12
    sp = ortho_split(zero_module(3))
    assert sp.V1.shape == (3, 3) and sp.V2.shape == (3, 0)
    sp = ortho_split(full_module(3))
    assert sp.V1.shape == (3, 0) and sp.V2.shape == (3, 3)


def test_box_point_examples():
    assert points_in_box(zero_module(2), 3) == [(0, 0)]
    assert points_in_box(make_submodule(2, [(1, 1)]), 1) == [(-1, -1), (0, 0), (1, 1)]
    assert points_in_box(make_submodule(2, [(2, 2)]), 1) == [(0, 0)]


def test_coset_count_examples():
    assert coset_count(zero_module(1), 1) == 3
    assert coset_count(make_submodule(2, [(1, 1)]), 1) == 5
    assert coset_count(full_module(3), 2) == 1


def test_budget_refusal():
    with pytest.raises(BudgetExceeded) as info:
        coset_count(zero_module(4), 3, budget=100)
    assert info.value.required == 7**4
    with pytest.raises(BudgetExceeded):
        points_in_box(full_module(4), 5, budget=50)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("LATTICE_SKETCH_BUDGET", "10")
    with pytest.raises(BudgetExceeded):
        coset_count(zero_module(2), 2)


def test_kernel_file_roundtrip(tmp_path):
    p = tmp_path / "k.json"
    p.write_text(json.dumps({"n": 2, "basis": [[6, 8], [2, 4]]}))
    M = load_kernel(p)
    assert M.basis.tolist() == [[2, 0], [0, 4]]
    out = tmp_path / "out.json"
    dump_kernel(M, out)
    assert json.loads(out.read_text()) == {"n": 2, "basis": [[2, 0], [0, 4]]}
    assert load_kernel(out) == M
    with pytest.raises(ValueError):
        load_kernel({"n": 2, "basis": [[1, "a"]]})
    with pytest.raises(ValueError):
        load_kernel({"basis": []})


@settings(max_examples=100, deadline=None)
@given(submodules(max_n=3, bound=3), st.data())
def test_member_matches_brute_force(M, data):
    x = data.draw(st.tuples(*[st.integers(-4, 4)] * M.n))
    assert member(M, x) == brute_member(M, x, radius=12)


@settings(max_examples=100, deadline=None)
@given(submodules())
def test_saturation_properties(M):
    S = saturate(M)
    assert saturate(S) == S
    assert S.rank == M.rank
    assert quotient_shape(S).torsion == ()
    assert contains(S, M)
    # every basis row of S has a nonzero multiple in M
    for row in S.basis.rows:
        assert any(member(M, tuple(a * v for v in row)) for a in range(1, 10**4))
    # the real spans agree
    assert np.allclose(ortho_split(M).projector(), ortho_split(S).projector(), atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(submodules())
def test_ortho_split_invariants(M):
    sp = ortho_split(M)
    sp.check()
    assert sp.V2.shape == (M.n, M.rank)
    P = sp.projector()
    for row in M.basis.rows:
        v = np.array(row, dtype=float)
        assert np.allclose(P @ v, v, atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(submodules(), st.data())
def test_module_closure(M, data):
    pts = points_in_box(M, 2)
    x = data.draw(st.sampled_from(pts))
    y = data.draw(st.sampled_from(pts))
    assert member(M, tuple(a + b for a, b in zip(x, y)))
    assert member(M, tuple(-a for a in x))


@settings(max_examples=60, deadline=None)
@given(submodules(max_n=3), st.integers(0, 2))
def test_counting_chain(M, m):
    count = coset_count(M, m)
    assert count >= (2 * m + 1) ** (M.n - M.rank)
    buckets = coset_buckets(M, m)
    assert len(buckets) == count
    assert count * max(len(v) for v in buckets.values()) >= (2 * m + 1) ** M.n
    # the points of M in the box are exactly the bucket holding zero
    inbox = points_in_box(M, m)
    assert inbox == sorted(x for x in box(M.n, m) if member(M, x))
    assert len(inbox) <= (2 * m + 1) ** M.rank


def test_battery_is_reproducible():
    assert battery(4) == battery(4)
    assert named_kernel("diagonal-mod:2,3", 3).basis.tolist() == [[2, 0, 0], [0, 3, 0]]
    assert named_kernel("repetition", 3).basis.tolist() == [[1, 1, 1]]
    with pytest.raises(ValueError):
        named_kernel("nope", 2)
