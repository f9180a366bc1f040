import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cosetsketch.battery import battery
from cosetsketch.lattice import box, coset_count, full_module, make_submodule, member, zero_module
from cosetsketch.sketch import (
    MergeError, SketchError, SketchState, StreamRecord, add, compile_kernel, deserialize,
    format_stream, frequency, init, merge, parse_stream, process_stream, serialize, space_report,
    state_of, update,
)


def records(n, max_len=60):
    return st.lists(st.builds(StreamRecord, st.integers(1, n), st.sampled_from((1, -1))), max_size=max_len)


kernels = st.sampled_from([M for n in (1, 2, 3, 4) for _, M in battery(n)])


def test_compile_examples():
    spec = compile_kernel(zero_module(2))
    assert spec.shape.torsion == () and len(spec.free_rows) == 2
    assert state_of(spec, (3, -4)).free_coords == (3, -4)
    spec = compile_kernel(full_module(3))
    assert state_of(spec, (5, 1, 2)) == init(spec)
    assert spec.torsion_rows == () and spec.free_rows == ()
    spec = compile_kernel(make_submodule(2, [(2, 0), (0, 3)]))
    assert spec.moduli == (6,)
    for x in box(2, 3):
        assert (state_of(spec, x) == init(spec)) == member(spec.module, x)


def test_update_examples():
    spec = compile_kernel(make_submodule(1, [(3,)]))
    s = init(spec)
    for _ in range(3):
        s = update(spec, s, StreamRecord(1, 1))
    assert s == init(spec)
    spec = compile_kernel(make_submodule(2, [(1, 1)]))
    s = update(spec, update(spec, init(spec), StreamRecord(2, 1)), StreamRecord(2, -1))
    assert s == init(spec)
    spec = compile_kernel(zero_module(3))
    s = process_stream(spec, init(spec), [StreamRecord(1, 1), StreamRecord(3, -1), StreamRecord(1, 1)])
    assert s.free_coords == (2, 0, -1)
    with pytest.raises(SketchError):
        update(spec, init(spec), StreamRecord(4, 1))


def test_record_validation():
    with pytest.raises(SketchError):
        StreamRecord(1, 2)
    with pytest.raises(SketchError):
        StreamRecord(0, 1)


def test_batch_add_equals_repeated_updates():
    spec = compile_kernel(make_submodule(2, [(2, 4)]))
    five_minus_two = [StreamRecord(1, 1)] * 5 + [StreamRecord(1, -1)] * 2
    assert process_stream(spec, init(spec), five_minus_two) == add(spec, init(spec), 1, 3)
    assert add(spec, init(spec), 2, -7) == state_of(spec, (0, -7))


def test_merge_refuses_other_kernel():
    a = compile_kernel(zero_module(2))
    b = compile_kernel(make_submodule(2, [(1, 1)]))
    with pytest.raises(MergeError):
        merge(a, init(a), init(b))
    with pytest.raises(MergeError):
        add(a, init(b), 1)


def test_space_report_examples():
    import math

    assert space_report(compile_kernel(zero_module(2)), 1) == (math.log2(9), math.log2(9))
    assert space_report(compile_kernel(make_submodule(2, [(1, 1)])), 1) == (math.log2(5), math.log2(3))
    assert space_report(compile_kernel(full_module(3)), 1) == (0.0, 0.0)


def test_serialize_roundtrip_and_tamper():
    spec = compile_kernel(make_submodule(3, [(2, 0, 0), (0, 1, 1)]))
    s = state_of(spec, (5, -3, 10**30))
    data = serialize(s)
    assert deserialize(data, spec) == s
    assert deserialize(serialize(init(spec)), spec) == init(spec)
    doc = json.loads(data)
    assert all(isinstance(v, str) for v in doc["free_coords"])
    bad = dict(doc, kernel_fingerprint="0" * 64)
    with pytest.raises(MergeError):
        deserialize(json.dumps(bad), spec)
    with pytest.raises(SketchError):
        deserialize(b"{not json", spec)
    with pytest.raises(SketchError):
        deserialize(json.dumps(dict(doc, torsion_residues=[7])), spec)
    with pytest.raises(SketchError):
        deserialize(json.dumps(dict(doc, free_coords=[1, 2])), spec)
    with pytest.raises(SketchError):
        deserialize(json.dumps(dict(doc, version=2)), spec)


def test_stream_format():
    text = "# header\n1,1\n\n3,-1\n1,1\n"
    recs = parse_stream(text, 3)
    assert frequency(recs, 3) == (2, 0, -1)
    assert parse_stream(format_stream(recs), 3) == recs
    for bad in ("1,2\n", "x,1\n", "4,1\n", "1\n"):
        with pytest.raises(SketchError):
            parse_stream(bad, 3)


@settings(max_examples=150, deadline=None)
@given(kernels, st.data())
def test_path_independence_and_homomorphism(M, data):
    spec = compile_kernel(M)
    s1 = data.draw(records(M.n))
    s2 = data.draw(records(M.n))
    whole = process_stream(spec, init(spec), s1 + s2)
    assert whole == merge(spec, process_stream(spec, init(spec), s1), process_stream(spec, init(spec), s2))
    perm = list(s1 + s2)
    random.Random(len(perm)).shuffle(perm)
    assert process_stream(spec, init(spec), perm) == whole
    assert whole == state_of(spec, frequency(s1 + s2, M.n))
    inverse = [StreamRecord(r.index, -r.delta) for r in reversed(s1)]
    assert process_stream(spec, init(spec), s1 + inverse) == init(spec)


@settings(max_examples=100, deadline=None)
@given(kernels, st.data())
def test_merge_laws(M, data):
    spec = compile_kernel(M)
    vec = st.tuples(*[st.integers(-50, 50)] * M.n)
    a, b, c = (state_of(spec, data.draw(vec)) for _ in range(3))
    assert merge(spec, a, init(spec)) == a
    assert merge(spec, a, b) == merge(spec, b, a)
    assert merge(spec, merge(spec, a, b), c) == merge(spec, a, merge(spec, b, c))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_kernel_equality_exhaustive(n):
    m = 3 if n <= 3 else 2
    for _, M in battery(n):
        spec = compile_kernel(M)
        zero = init(spec)
        for x in box(n, m):
            assert (state_of(spec, x) == zero) == member(M, x)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_states_separate_cosets(n):
    for _, M in battery(n):
        spec = compile_kernel(M)
        states = {state_of(spec, x) for x in box(n, 2)}
        assert len(states) == coset_count(M, 2)


def test_state_counts_match_modulus():
    spec = compile_kernel(make_submodule(1, [(3,)]))
    assert {state_of(spec, (x,)).torsion_residues for x in range(-10, 10)} == {(0,), (1,), (2,)}
    assert isinstance(init(spec), SketchState)
