"""Path-independent, mergeable frequency sketches over Z^n/M.

The state after a stream with frequency vector ``f`` is the coset ``f + M``,
held as residues through a unimodular change of basis taken from the Smith
form of M's basis: torsion coordinates are reduced mod their invariant factor,
free coordinates are exact integers. Updates add a precomputed column, and a
merge is coordinate-wise addition, so the state of a concatenated stream is
the merge of the states of its parts.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple

from .intlinalg import IntMatrix, Vector, inverse_unimodular, snf
from .lattice import (
    QuotientShape, Submodule, bits, box, box_size, coset_count, member, quotient_shape,
)

SELF_TEST_RADIUS = 2
SELF_TEST_POINTS = 4096
STATE_VERSION = 1


class SketchError(ValueError):
    """Malformed or inconsistent sketch input."""


class MergeError(SketchError):
    """States built for different kernels cannot be merged."""


@dataclass(frozen=True)
class StreamRecord:
    index: int  # 1-based item id
    delta: int  # +1 or -1

    def __post_init__(self):
        if self.delta not in (1, -1):
            raise SketchError(f"delta must be +1 or -1, got {self.delta}")
        if self.index < 1:
            raise SketchError(f"item index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class SketchState:
    kernel_fingerprint: str
    torsion_residues: Tuple[int, ...]
    free_coords: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """The compiled residue map ``rho: Z^n -> Z/(q_1) + ... + Z^free_rank``.

    ``transform`` is unimodular; rows listed in ``torsion_rows`` are reduced
    mod the matching entry of ``shape.torsion`` and rows in ``free_rows`` are
    kept exact. Every other row of ``transform`` has invariant factor 1 and
    carries no information.
    """

    module: Submodule
    shape: QuotientShape
    transform: IntMatrix
    inverse: IntMatrix
    torsion_rows: Tuple[int, ...]
    free_rows: Tuple[int, ...]
    fingerprint: str

    @property
    def n(self) -> int:
        return self.module.n

    @property
    def moduli(self) -> Tuple[Optional[int], ...]:
        """Modulus per output coordinate: ``q_i`` for torsion, ``None`` for free."""
        return self.shape.torsion + (None,) * len(self.free_rows)

    def residue(self, x: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        rows = self.transform.rows
        tors = tuple(sum(a * b for a, b in zip(rows[i], x)) % q
                     for i, q in zip(self.torsion_rows, self.shape.torsion))
        free = tuple(sum(a * b for a, b in zip(rows[i], x)) for i in self.free_rows)
        return tors, free

    @property
    def _steps(self):
        # column j of the transform, split into torsion and free parts
        return _column_steps(self)


@lru_cache(maxsize=None)
def _column_steps(spec: KernelSpec):
    rows = spec.transform.rows
    out = []
    for j in range(spec.n):
        tors = tuple(rows[i][j] % q for i, q in zip(spec.torsion_rows, spec.shape.torsion))
        free = tuple(rows[i][j] for i in spec.free_rows)
        out.append((tors, free))
    return out


def _fingerprint(M: Submodule, shape: QuotientShape) -> str:
    doc = json.dumps({"n": M.n, "basis": M.basis.tolist(),
                      "torsion": list(shape.torsion), "free": shape.free_rank},
                     separators=(",", ":"))
    return hashlib.sha256(doc.encode()).hexdigest()


@lru_cache(maxsize=None)
def compile_kernel(M: Submodule) -> KernelSpec:
    """Build the residue map for M and self-test it.

    Raises ``AssertionError`` if the map's kernel differs from M on the test
    box; that can only be an implementation bug.
    """
    n, r = M.n, M.rank
    if r == 0:
        shape = QuotientShape(n, ())
        T = T_inv = IntMatrix.identity(n)
        torsion_rows = ()
    else:
        dec = snf(M.basis)
        if dec.U @ M.basis @ dec.V != dec.D:
            raise AssertionError("Smith decomposition does not reconstruct")
        # x in M  <=>  (x V)_i divisible by d_i for i < r and zero for i >= r
        T = dec.V.T
        T_inv = inverse_unimodular(T)
        shape = quotient_shape(M)
        factors = dec.invariant_factors
        torsion_rows = tuple(i for i, q in enumerate(factors) if q > 1)
        if tuple(factors[i] for i in torsion_rows) != shape.torsion:
            raise AssertionError("invariant factors disagree")
    spec = KernelSpec(M, shape, T, T_inv, torsion_rows, tuple(range(r, n)),
                      _fingerprint(M, shape))
    _self_test(spec)
    return spec


def _self_test(spec: KernelSpec) -> None:
    M = spec.module
    zero = ((0,) * len(spec.torsion_rows), (0,) * len(spec.free_rows))
    for b in M.basis.rows:
        if spec.residue(b) != zero:
            raise AssertionError(f"basis row {b} is not mapped to zero")
    radius = SELF_TEST_RADIUS
    while radius > 1 and box_size(M.n, radius) > SELF_TEST_POINTS:
        radius -= 1
    if box_size(M.n, radius) <= SELF_TEST_POINTS:
        points = box(M.n, radius)
    else:
        rng = random.Random(M.fingerprint)
        points = (tuple(rng.randint(-SELF_TEST_RADIUS, SELF_TEST_RADIUS) for _ in range(M.n))
                  for _ in range(SELF_TEST_POINTS))
    for x in points:
        if (spec.residue(x) == zero) != member(M, x):
            raise AssertionError(f"residue map and membership disagree at {x}")


def init(spec: KernelSpec) -> SketchState:
    return SketchState(spec.fingerprint, (0,) * len(spec.torsion_rows), (0,) * len(spec.free_rows))


def state_of(spec: KernelSpec, x: Sequence[int]) -> SketchState:
    """The state reached by any stream with frequency vector ``x``."""
    if len(x) != spec.n:
        raise SketchError(f"vector of length {len(x)} for ambient dimension {spec.n}")
    tors, free = spec.residue(x)
    return SketchState(spec.fingerprint, tors, free)


def _check_state(spec: KernelSpec, s: SketchState) -> None:
    if s.kernel_fingerprint != spec.fingerprint:
        raise MergeError("state was built for a different kernel")


def add(spec: KernelSpec, s: SketchState, index: int, count: int = 1) -> SketchState:
    """Apply ``count`` (any sign) copies of the update ``e_index``."""
    _check_state(spec, s)
    if not 1 <= index <= spec.n:
        raise SketchError(f"item index {index} outside [1, {spec.n}]")
    if count == 0:
        return s
    tstep, fstep = spec._steps[index - 1]
    tors = tuple((a + count * b) % q for a, b, q in zip(s.torsion_residues, tstep, spec.shape.torsion))
    free = tuple(a + count * b for a, b in zip(s.free_coords, fstep))
    return SketchState(s.kernel_fingerprint, tors, free)


def update(spec: KernelSpec, s: SketchState, rec: StreamRecord) -> SketchState:
    return add(spec, s, rec.index, rec.delta)


def process_stream(spec: KernelSpec, s: SketchState, records: Iterable[StreamRecord]) -> SketchState:
    _check_state(spec, s)
    tors = list(s.torsion_residues)
    free = list(s.free_coords)
    steps = spec._steps
    moduli = spec.shape.torsion
    n = spec.n
    for rec in records:
        if not 1 <= rec.index <= n:
            raise SketchError(f"item index {rec.index} outside [1, {n}]")
        tstep, fstep = steps[rec.index - 1]
        d = rec.delta
        for k, b in enumerate(tstep):
            tors[k] = (tors[k] + d * b) % moduli[k]
        for k, b in enumerate(fstep):
            free[k] += d * b
    return SketchState(s.kernel_fingerprint, tuple(tors), tuple(free))


def merge(spec: KernelSpec, a: SketchState, b: SketchState) -> SketchState:
    if a.kernel_fingerprint != b.kernel_fingerprint:
        raise MergeError("cannot merge states of different kernels")
    _check_state(spec, a)
    tors = tuple((x + y) % q for x, y, q in zip(a.torsion_residues, b.torsion_residues, spec.shape.torsion))
    free = tuple(x + y for x, y in zip(a.free_coords, b.free_coords))
    return SketchState(a.kernel_fingerprint, tors, free)


def space_report(spec: KernelSpec, m: int, budget=None) -> Tuple[float, float]:
    """``(log2 #cosets in the box, (n - rank) * log2(2m + 1))``."""
    count = coset_count(spec.module, m, budget)
    return bits(count), spec.shape.free_rank * bits(2 * m + 1)


def serialize(s: SketchState) -> bytes:
    doc = {
        "version": STATE_VERSION,
        "kernel_fingerprint": s.kernel_fingerprint,
        "torsion_residues": list(s.torsion_residues),
        "free_coords": [str(v) for v in s.free_coords],
    }
    return (json.dumps(doc, separators=(",", ":")) + "\n").encode()


def deserialize(data, spec: KernelSpec) -> SketchState:
    """Parse a state document and check it against ``spec``."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SketchError(f"state document is not JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != STATE_VERSION:
        raise SketchError("unsupported or missing state version")
    fp = doc.get("kernel_fingerprint")
    tors = doc.get("torsion_residues")
    free = doc.get("free_coords")
    if not isinstance(fp, str) or not isinstance(tors, list) or not isinstance(free, list):
        raise SketchError("state document is missing fields")
    if fp != spec.fingerprint:
        raise MergeError("state fingerprint does not match the kernel")
    if len(tors) != len(spec.shape.torsion) or len(free) != len(spec.free_rows):
        raise SketchError("state has the wrong number of coordinates for this kernel")
    for v, q in zip(tors, spec.shape.torsion):
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < q:
            raise SketchError(f"torsion residue {v!r} out of range for modulus {q}")
    try:
        free_vals = tuple(int(v) for v in free if isinstance(v, str))
    except ValueError:
        raise SketchError("free coordinates must be decimal strings") from None
    if len(free_vals) != len(free):
        raise SketchError("free coordinates must be decimal strings")
    return SketchState(fp, tuple(tors), free_vals)


def save_state(s: SketchState, path) -> None:
    Path(path).write_bytes(serialize(s))


def load_state(path, spec: KernelSpec) -> SketchState:
    return deserialize(Path(path).read_bytes(), spec)


def parse_stream(text: str, n: Optional[int] = None):
    """Parse ``i,delta`` lines; blank lines and ``#`` comments are skipped."""
    records = []
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SketchError(f"line {lineno}: expected 'i,delta'")
        try:
            i, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise SketchError(f"line {lineno}: non-integer field") from None
        if d not in (1, -1) or i < 1 or (n is not None and i > n):
            raise SketchError(f"line {lineno}: bad record {line!r}")
        records.append(StreamRecord(i, d))
    return records


def read_stream(path, n: Optional[int] = None):
    return parse_stream(Path(path).read_text(), n)


def format_stream(records: Iterable[StreamRecord]) -> str:
    return "".join(f"{r.index},{r.delta}\n" for r in records)


def frequency(records: Iterable[StreamRecord], n: int) -> Vector:
    f = [0] * n
    for r in records:
        f[r.index - 1] += r.delta
    return tuple(f)
