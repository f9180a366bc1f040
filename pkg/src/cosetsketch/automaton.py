"""Explicit finite stream automata and the constructions that turn them into
coset sketches.

An automaton here is its configuration graph: a finite set of configuration
ids, a total transition per letter ``+i`` / ``-i`` and an output vector per
configuration. Every brute-force question is asked inside a frequency box
``{-m..m}^n``: a configuration is in ``C_m`` when some stream whose prefix
frequencies all stay in the box reaches it. Results are valid "at radius m"
only.

Pipeline: :func:`reversibilize` collapses each configuration onto a terminal
class of the zero-frequency graph, :func:`quotient_path_independent` then
replaces a path-reversible automaton by a coset automaton over its kernel,
and :func:`is_output_restriction` checks the result exhaustively on short
streams.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from . import budget as _budget
from .lattice import Submodule, box_size, make_submodule
from .sketch import KernelSpec, SketchState, add, compile_kernel, init, state_of

Config = Hashable
Letter = int   # +i or -i, 1-based
Stream = Tuple[Letter, ...]


class NotReversible(ValueError):
    """The construction needs a path-reversible automaton."""


def lex_key(c):
    """Ordering used for every "least configuration" choice."""
    if isinstance(c, int) and not isinstance(c, bool):
        return (0, c, "")
    return (1, 0, str(c))


def letters(n: int) -> Tuple[Letter, ...]:
    return tuple(s * i for i in range(1, n + 1) for s in (1, -1))


def inverse_stream(stream: Sequence[Letter]) -> Stream:
    return tuple(-l for l in reversed(stream))


def stream_frequency(stream: Sequence[Letter], n: int) -> Tuple[int, ...]:
    f = [0] * n
    for l in stream:
        f[abs(l) - 1] += 1 if l > 0 else -1
    return tuple(f)


def _shift(f, l):
    i = abs(l) - 1
    return f[:i] + (f[i] + (1 if l > 0 else -1),) + f[i + 1:]


@dataclass(frozen=True, eq=False)
class ExplicitAutomaton:
    n: int
    configs: Tuple[Config, ...]
    initial: Config
    delta: Mapping[Config, Mapping[Letter, Config]]
    output: Mapping[Config, Tuple[int, ...]]

    def __post_init__(self):
        known = set(self.configs)
        if len(known) != len(self.configs):
            raise ValueError("duplicate configuration ids")
        if self.initial not in known:
            raise ValueError(f"initial configuration {self.initial!r} is not listed")
        for c in self.configs:
            row = self.delta.get(c)
            if row is None:
                raise ValueError(f"no transitions for configuration {c!r}")
            for l in letters(self.n):
                if row.get(l) not in known:
                    raise ValueError(f"transition {c!r} on {l:+d} is missing or leaves the configuration set")
            if c not in self.output:
                raise ValueError(f"no output for configuration {c!r}")

    def step(self, c: Config, l: Letter) -> Config:
        return self.delta[c][l]

    def out(self, c: Config) -> Tuple[int, ...]:
        return tuple(self.output[c])

    def run(self, stream: Sequence[Letter], start: Optional[Config] = None) -> Config:
        c = self.initial if start is None else start
        for l in stream:
            c = self.delta[c][l]
        return c

    def with_output(self, c: Config, value) -> "ExplicitAutomaton":
        output = dict(self.output)
        output[c] = tuple(value)
        return ExplicitAutomaton(self.n, self.configs, self.initial, self.delta, output)


@dataclass
class FreqExploration:
    """Pairs ``(config, frequency)`` reachable inside the box, with BFS parents.

    Frequencies are relative to ``start``. ``reached`` maps each pair to its
    predecessor pair and the letter read (``None`` for the start pair).
    """

    radius: int
    start: Config
    reached: Dict[Tuple[Config, Tuple[int, ...]], Optional[Tuple[tuple, Letter]]]

    def configs(self) -> List[Config]:
        return sorted({c for c, _ in self.reached}, key=lex_key)

    def at(self, f) -> List[Config]:
        f = tuple(f)
        return sorted((c for c, g in self.reached if g == f), key=lex_key)

    def by_frequency(self) -> Dict[Tuple[int, ...], set]:
        out: Dict[Tuple[int, ...], set] = {}
        for c, f in self.reached:
            out.setdefault(f, set()).add(c)
        return out

    def stream_to(self, c: Config, f) -> Stream:
        key = (c, tuple(f))
        if key not in self.reached:
            raise KeyError(f"{key} was not reached")
        path = []
        while self.reached[key] is not None:
            key, l = self.reached[key]
            path.append(l)
        return tuple(reversed(path))


def _size(A) -> int:
    return len(A.configs) if hasattr(A, "configs") else 1


def explore(A, m: int, start=None, budget=None) -> FreqExploration:
    """Breadth-first closure from ``start`` under moves that keep the frequency in the box."""
    _budget.require(_size(A) * box_size(A.n, m), budget)
    start = A.initial if start is None else start
    origin = (start, (0,) * A.n)
    reached = {origin: None}
    queue = deque([origin])
    ls = letters(A.n)
    while queue:
        c, f = key = queue.popleft()
        for l in ls:
            g = _shift(f, l)
            if abs(g[abs(l) - 1]) > m:
                continue
            nxt = (A.step(c, l), g)
            if nxt not in reached:
                reached[nxt] = (key, l)
                queue.append(nxt)
    return FreqExploration(m, start, reached)


def reachable_configs(A, m: int, budget=None) -> List[Config]:
    """``C_m``: configurations reachable from the initial one inside the box."""
    return explore(A, m, budget=budget).configs()


def is_path_reversible(A: ExplicitAutomaton) -> bool:
    """Single-letter check: ``s + e_i - e_i == s`` and ``s - e_i + e_i == s`` for all s, i.

    This suffices for whole streams: the inverse of ``sigma + l`` is
    ``-l`` followed by the inverse of sigma, so the cancellation unwinds
    one letter at a time.
    """
    for c in A.configs:
        for l in letters(A.n):
            if A.step(A.step(c, l), -l) != c:
                return False
    return True


def is_path_independent(A, m: int, budget=None) -> bool:
    """Every frequency in the box is reached by exactly one configuration from the start."""
    return all(len(cs) == 1 for cs in explore(A, m, budget=budget).by_frequency().values())


def path_independence_witness(A, m: int, budget=None):
    """Two streams with equal frequency that end in different configurations, or None."""
    ex = explore(A, m, budget=budget)
    for f, cs in sorted(ex.by_frequency().items()):
        if len(cs) > 1:
            a, b = sorted(cs, key=lex_key)[:2]
            return ex.stream_to(a, f), ex.stream_to(b, f)
    return None


def kernel_generators(A: ExplicitAutomaton, m: int, budget=None) -> List[Tuple[int, ...]]:
    """Frequencies in the box for which some stream returns the start to itself."""
    if not is_path_reversible(A):
        raise NotReversible("kernel_of needs a path-reversible automaton")
    ex = explore(A, m, budget=budget)
    return sorted(f for c, f in ex.reached if c == A.initial)


def kernel_of(A: ExplicitAutomaton, m: int, budget=None) -> Submodule:
    """Submodule generated by the kernel frequencies found in the box.

    This can be smaller than the true kernel when generators lie outside the
    box; it grows monotonically with ``m``.
    """
    return make_submodule(A.n, kernel_generators(A, m, budget))


@dataclass
class ZeroFreqClasses:
    """Mutual zero-frequency reachability classes of ``C_m``."""

    radius: int
    classes: List[Tuple[Config, ...]]
    terminal: List[bool]
    class_of: Dict[Config, int]
    graph: "nx.DiGraph"   # edge s -> t carries attribute "stream" (frequency 0)

    def terminal_classes(self) -> List[Tuple[Config, ...]]:
        return [c for c, t in zip(self.classes, self.terminal) if t]


def zero_freq_classes(A, m: int, budget=None) -> ZeroFreqClasses:
    """Partition ``C_m`` by mutual reachability through zero-frequency streams.

    An edge ``s -> t`` exists when a stream of total frequency 0, with every
    prefix frequency in ``{-m..m}^n`` relative to ``s``, leads from ``s`` to
    ``t`` and ``t`` is in ``C_m``. A class is terminal when no edge leaves it.
    """
    cm = reachable_configs(A, m, budget)
    members = set(cm)
    zero = (0,) * A.n
    G = nx.DiGraph()
    G.add_nodes_from(cm)
    for s in cm:
        ex = explore(A, m, start=s, budget=budget)
        for t, f in ex.reached:
            if f == zero and t != s and t in members:
                G.add_edge(s, t, stream=ex.stream_to(t, zero))
    sccs = [tuple(sorted(c, key=lex_key)) for c in nx.strongly_connected_components(G)]
    sccs.sort(key=lambda c: lex_key(c[0]))
    class_of = {c: k for k, cls in enumerate(sccs) for c in cls}
    leaving = {class_of[s] for s, t in G.edges if class_of[s] != class_of[t]}
    terminal = [k not in leaving for k in range(len(sccs))]
    return ZeroFreqClasses(m, sccs, terminal, class_of, G)


@dataclass
class AlphaMap:
    """``alpha_m``: each configuration of ``C_m`` to the least member of the
    terminal classes it can reach, with the zero-frequency stream that gets
    there."""

    radius: int
    alpha: Dict[Config, Config]
    padding: Dict[Config, Stream]

    def padded_stream(self, A, stream: Sequence[Letter]) -> Stream:
        """The stream of A whose run the reversibilized automaton simulates.

        Equal in frequency to ``stream``; zero-frequency padding is inserted
        after the start and after every letter.
        """
        c = A.initial
        out = list(self.padding[c])
        c = self.alpha[c]
        for l in stream:
            u = A.step(c, l)
            out.append(l)
            out.extend(self.padding[u])
            c = self.alpha[u]
        return tuple(out)


def alpha_map(A, m: int, budget=None) -> AlphaMap:
    zc = zero_freq_classes(A, m, budget)
    G = zc.graph
    terminal_members = {c for cls in zc.terminal_classes() for c in cls}
    alpha, padding = {}, {}
    for s in G.nodes:
        targets = (nx.descendants(G, s) | {s}) & terminal_members
        t = min(targets, key=lex_key)
        alpha[s] = t
        path = nx.shortest_path(G, s, t)
        padding[s] = tuple(itertools.chain.from_iterable(G.edges[a, b]["stream"]
                                                         for a, b in zip(path, path[1:])))
    return AlphaMap(m, alpha, padding)


def reversibilize(A, m: int, budget=None, alpha: Optional[AlphaMap] = None) -> ExplicitAutomaton:
    """Path-reversible automaton on the alpha images of ``C_m``.

    Transition ``t +' l = alpha(t + l)``; output is A's output at ``t``.
    Raises ``ValueError`` when a transition leaves ``C_m`` (use a larger m).
    """
    am = alpha if alpha is not None else alpha_map(A, m, budget)
    images = sorted(set(am.alpha.values()), key=lex_key)
    delta = {}
    for t in images:
        row = {}
        for l in letters(A.n):
            u = A.step(t, l)
            if u not in am.alpha:
                raise ValueError(f"transition {t!r} on {l:+d} leaves C_{m}; increase m")
            row[l] = am.alpha[u]
        delta[t] = row
    return ExplicitAutomaton(A.n, tuple(images), am.alpha[A.initial], delta,
                             {t: A.out(t) for t in images})


@dataclass(eq=False)
class QuotientAutomaton:
    """Coset automaton over the kernel of a path-reversible automaton.

    Configurations are sketch states. The output of a coset is the output of
    the least source configuration reachable with a frequency in that coset.
    """

    source: ExplicitAutomaton
    spec: KernelSpec
    radius: int
    choice: Dict[SketchState, Config]
    _extra: Dict[SketchState, Config] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def initial(self) -> SketchState:
        return init(self.spec)

    @property
    def kernel(self) -> Submodule:
        return self.spec.module

    @property
    def table(self) -> Dict[SketchState, Tuple[int, ...]]:
        return {s: self.source.out(c) for s, c in self.choice.items()}

    def step(self, s: SketchState, l: Letter) -> SketchState:
        return add(self.spec, s, abs(l), 1 if l > 0 else -1)

    def chosen(self, s: SketchState) -> Config:
        if s in self.choice:
            return self.choice[s]
        if s not in self._extra:
            # coset outside the explored box: explore far enough to reach a representative
            from .decode import coset_representative

            x = coset_representative(self.spec, s)
            ex = explore(self.source, max(abs(v) for v in x))
            self._extra[s] = ex.at(x)[0]
        return self._extra[s]

    def out(self, s: SketchState) -> Tuple[int, ...]:
        return self.source.out(self.chosen(s))


def quotient_path_independent(A: ExplicitAutomaton, m: int, budget=None) -> QuotientAutomaton:
    if not is_path_reversible(A):
        raise NotReversible("quotient needs a path-reversible automaton; reversibilize first")
    M = kernel_of(A, m, budget)
    spec = compile_kernel(M)
    ex = explore(A, m, budget=budget)
    choice: Dict[SketchState, Config] = {}
    for c, f in ex.reached:
        s = state_of(spec, f)
        if s not in choice or lex_key(c) < lex_key(choice[s]):
            choice[s] = c
    return QuotientAutomaton(A, spec, m, choice)


@dataclass(frozen=True)
class OutputRestriction:
    ok: bool
    checked: int                       # streams of B examined
    witness: Optional[Stream] = None   # stream of B with no matching stream of A

    def __bool__(self):
        return self.ok


def is_output_restriction(B, A, len_bound: int, slack: int = 2, budget=None) -> OutputRestriction:
    """Exhaustive check that B's output on every stream of length <= len_bound
    equals A's output on some stream of the same frequency and length at most
    ``slack * len_bound``."""
    if A.n != B.n:
        raise ValueError("automata over different domains")
    n = A.n
    total = sum((2 * n) ** k for k in range(len_bound + 1))
    _budget.require(total, budget, "streams")
    horizon = slack * len_bound
    _budget.require(_size(A) * box_size(n, horizon), budget)

    # outputs of A by frequency over streams of length <= horizon
    outputs: Dict[Tuple[int, ...], set] = {}
    origin = (A.initial, (0,) * n)
    frontier = {origin}
    seen = {origin}
    for c, f in frontier:
        outputs.setdefault(f, set()).add(A.out(c))
    ls = letters(n)
    for _ in range(horizon):
        nxt = set()
        for c, f in frontier:
            for l in ls:
                key = (A.step(c, l), _shift(f, l))
                if key not in seen:
                    seen.add(key)
                    nxt.add(key)
                    outputs.setdefault(key[1], set()).add(A.out(key[0]))
        frontier = nxt

    checked = 0
    stack = [(B.initial, (0,) * n, ())]
    while stack:
        c, f, path = stack.pop()
        checked += 1
        if B.out(c) not in outputs.get(f, ()):
            return OutputRestriction(False, checked, path)
        if len(path) < len_bound:
            for l in reversed(ls):
                stack.append((B.step(c, l), _shift(f, l), path + (l,)))
    return OutputRestriction(True, checked)


# -- test automata -----------------------------------------------------------

def _table(n, configs, fn):
    return {c: {l: fn(c, l) for l in letters(n)} for c in configs}


def mod_counter(q: int) -> ExplicitAutomaton:
    """One item counted mod q."""
    configs = tuple(range(q))
    return ExplicitAutomaton(1, configs, 0, _table(1, configs, lambda c, l: (c + (1 if l > 0 else -1)) % q),
                             {c: (c,) for c in configs})


def product_counter(moduli: Sequence[int]) -> ExplicitAutomaton:
    """Item i counted mod ``moduli[i]``; config id is the mixed-radix encoding."""
    n = len(moduli)
    digits = list(itertools.product(*(range(q) for q in reversed(moduli))))
    encode = {}
    for d in digits:
        d = tuple(reversed(d))
        cid, w = 0, 1
        for v, q in zip(d, moduli):
            cid += v * w
            w *= q
        encode[d] = cid
    decode = {v: k for k, v in encode.items()}

    def step(c, l):
        d = list(decode[c])
        i = abs(l) - 1
        d[i] = (d[i] + (1 if l > 0 else -1)) % moduli[i]
        return encode[tuple(d)]

    configs = tuple(sorted(decode))
    return ExplicitAutomaton(n, configs, 0, _table(n, configs, step), {c: decode[c] for c in configs})


def exact_counter(window: int) -> ExplicitAutomaton:
    """Counter over ``-window..window`` that wraps around at the ends.

    Inside a box of radius ``m <= window`` it never wraps, so it counts
    exactly there and its kernel at that radius is {0}.
    """
    q = 2 * window + 1
    configs = tuple(range(-window, window + 1))

    def step(c, l):
        return (c + (1 if l > 0 else -1) + window) % q - window

    return ExplicitAutomaton(1, configs, 0, _table(1, configs, step), {c: (c,) for c in configs})


def clamped_counter(cap: int) -> ExplicitAutomaton:
    """Counter on ``0..cap`` that saturates at both ends (not reversible)."""
    configs = tuple(range(cap + 1))

    def step(c, l):
        return min(cap, c + 1) if l > 0 else max(0, c - 1)

    return ExplicitAutomaton(1, configs, 0, _table(1, configs, step), {c: (c,) for c in configs})


NAMED = {
    "mod": lambda args: mod_counter(*args),
    "product": lambda args: product_counter(args),
    "exact": lambda args: exact_counter(*args),
    "clamped": lambda args: clamped_counter(*args),
}


def named_automaton(name: str) -> ExplicitAutomaton:
    """``mod:3``, ``product:2,3``, ``exact:4`` or ``clamped:3``."""
    kind, _, rest = name.partition(":")
    if kind not in NAMED or not rest:
        raise ValueError(f"unknown automaton {name!r}")
    args = [int(v) for v in rest.split(",")]
    return NAMED[kind](args)


# -- file format ---------------------------------------------------------------

def _letter_key(l: Letter) -> str:
    return f"{l:+d}"


def automaton_document(A: ExplicitAutomaton) -> dict:
    return {
        "n": A.n,
        "configs": list(A.configs),
        "initial": A.initial,
        "delta": {str(c): {_letter_key(l): A.delta[c][l] for l in letters(A.n)} for c in A.configs},
        "output": {str(c): list(A.out(c)) for c in A.configs},
    }


def load_automaton(source) -> ExplicitAutomaton:
    """Read ``{"n", "configs", "initial", "delta", "output"}``; ids may be ints or strings."""
    doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    try:
        n = doc["n"]
        configs = tuple(doc["configs"])
        by_name = {str(c): c for c in configs}
        delta = {}
        for c in configs:
            row = doc["delta"][str(c)]
            delta[c] = {l: by_name[str(row[_letter_key(l)])] for l in letters(n)}
        output = {c: tuple(int(v) for v in doc["output"][str(c)]) for c in configs}
        initial = by_name[str(doc["initial"])]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed automaton document: {exc}") from None
    return ExplicitAutomaton(n, configs, initial, delta, output)


def dump_automaton(A: ExplicitAutomaton, path) -> None:
    Path(path).write_text(json.dumps(automaton_document(A), indent=1) + "\n")
