"""Named kernel generators, so experiments are reproducible without fixture files.

Names (the ambient dimension ``n`` is passed separately):

- ``zero``: the zero submodule (exact counting)
- ``full``: all of Z^n
- ``repetition``: span of the all-ones vector
- ``diagonal-mod:q1,q2,...``: span of ``q_i e_i`` on the first coordinates;
  the remaining coordinates are free
- ``random-hnf:seed``: seeded random generators with small entries
"""

from __future__ import annotations

import random
from typing import List, Tuple

from .lattice import Submodule, full_module, make_submodule, zero_module

RANDOM_ENTRY_BOUND = 3


def random_generators(n: int, seed: int, bound: int = RANDOM_ENTRY_BOUND) -> List[Tuple[int, ...]]:
    rng = random.Random(f"random-hnf:{n}:{seed}")
    count = rng.randint(1, n) if n else 0
    return [tuple(rng.randint(-bound, bound) for _ in range(n)) for _ in range(count)]


def named_kernel(name: str, n: int) -> Submodule:
    if n < 1:
        raise ValueError("ambient dimension must be at least 1")
    kind, _, arg = name.partition(":")
    if kind == "zero" and not arg:
        return zero_module(n)
    if kind == "full" and not arg:
        return full_module(n)
    if kind == "repetition" and not arg:
        return make_submodule(n, [(1,) * n])
    if kind == "diagonal-mod" and arg:
        qs = [int(q) for q in arg.split(",")]
        if len(qs) > n or any(q < 1 for q in qs):
            raise ValueError(f"{name!r} does not fit n = {n}")
        rows = []
        for i, q in enumerate(qs):
            row = [0] * n
            row[i] = q
            rows.append(row)
        return make_submodule(n, rows)
    if kind == "random-hnf" and arg:
        return make_submodule(n, random_generators(n, int(arg)))
    raise ValueError(f"unknown kernel generator {name!r}")


def battery_names(n: int) -> List[str]:
    """The standard battery at dimension n."""
    names = ["zero", "full", "repetition", "diagonal-mod:2"]
    if n >= 2:
        names.append("diagonal-mod:2,3")
    if n >= 3:
        names.append("diagonal-mod:2,2,4")
    names += [f"random-hnf:{seed}" for seed in range(3)]
    return names


def battery(n: int) -> List[Tuple[str, Submodule]]:
    return [(name, named_kernel(name, n)) for name in battery_names(n)]


def resolve_kernel(spec: str, n=None) -> Submodule:
    """A kernel file path, or a generator name when ``n`` is given."""
    from pathlib import Path

    from .lattice import load_kernel

    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        M = load_kernel(path)
        if n is not None and M.n != n:
            raise ValueError(f"kernel file has n = {M.n}, expected {n}")
        return M
    if n is None:
        raise ValueError(f"{spec!r} is not a kernel file; named generators need --n")
    return named_kernel(spec, n)
