"""Bounded countermodel search.

Frames are enumerated in a canonical order (fewest states first), and for
each frame every valuation of the query's variables is tried.  A `Witness` is
a concrete model and state; `ExhaustedBounds` only says that no witness exists
within the bounds searched.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Iterator, Optional, Union

from .errors import CapExceeded
from .formula import Formula, Var, metrics, variables
from .frames import Chain, Cluster, FrameIndex, FrameSpec
from .modelfile import model_to_dict
from .rules import InferenceRule, ReducedNormalFormRule, atom_mask
from .semantics import Model, compile_formula

DEFAULT_CAP = 2 ** 22
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SearchBounds:
    max_time_clusters: int = 2
    max_cluster_size: int = 2
    max_chains_per_gap: int = 1
    max_chain_length: int = 1
    allow_loop: bool = True
    agents: Optional[int] = None  # None: the query's largest agent index (at least 1)
    bridge_gaps: bool = True

    def __post_init__(self):
        for name in ("max_time_clusters", "max_cluster_size", "max_chain_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_chains_per_gap < 0:
            raise ValueError("max_chains_per_gap must be >= 0")
        if self.agents is not None and self.agents < 1:
            raise ValueError("agents must be >= 1")

    def with_agents(self, agents: int) -> "SearchBounds":
        return replace(self, agents=agents)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Witness:
    model: Model
    state: str
    bounds: SearchBounds
    frames_checked: int

    found = True

    def to_dict(self) -> dict:
        return {"verdict": "witness", "model": model_to_dict(self.model), "state": self.state,
                "bounds": self.bounds.to_dict(), "frames_checked": self.frames_checked}


@dataclass(frozen=True)
class ExhaustedBounds:
    bounds: SearchBounds
    frames_checked: int

    found = False

    def to_dict(self) -> dict:
        return {"verdict": "exhausted", "bounds": self.bounds.to_dict(),
                "frames_checked": self.frames_checked}


SearchOutcome = Union[Witness, ExhaustedBounds]


# -- frame enumeration -------------------------------------------------------

def set_partitions(n: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All partitions of range(n), via restricted growth strings."""
    def grow(prefix: list[int], k: int):
        if len(prefix) == n:
            blocks: list[list[int]] = [[] for _ in range(k)]
            for x, b in enumerate(prefix):
                blocks[b].append(x)
            yield tuple(tuple(b) for b in blocks)
            return
        for b in range(k + 1):
            yield from grow(prefix + [b], max(k, b + 1))
    yield from grow([], 0)


def _relabel(parts, perm) -> tuple:
    return tuple(tuple(sorted(tuple(sorted(perm[x] for x in b)) for b in p)) for p in parts)


def cluster_types(size: int, agents: int) -> list[tuple]:
    """Clusters of `size` states up to renaming, as canonical partition tuples."""
    seen = set()
    perms = list(itertools.permutations(range(size)))
    for parts in itertools.product(list(set_partitions(size)), repeat=agents):
        seen.add(min(_relabel(parts, p) for p in perms))
    return sorted(seen)


def _cluster(key: tuple) -> Cluster:
    size = sum(len(b) for b in key[0])
    states = tuple(_LETTERS[:size])
    return Cluster(states, tuple(tuple(tuple(states[x] for x in b) for b in p) for p in key))


def _key_size(key: tuple) -> int:
    return sum(len(b) for b in key[0])


def frame_keys(bounds: SearchBounds, agents: int) -> list[tuple]:
    clusters = [k for s in range(1, bounds.max_cluster_size + 1) for k in cluster_types(s, agents)]
    chains = [c for n in range(1, bounds.max_chain_length + 1)
              for c in itertools.product(clusters, repeat=n)]
    gap_options = [g for c in range(bounds.max_chains_per_gap + 1)
                   for g in itertools.combinations_with_replacement(chains, c)]
    gap_size = {g: sum(_key_size(k) for ch in g for k in ch) for g in gap_options}
    keys = []
    for T in range(1, bounds.max_time_clusters + 1):
        loops = [None] + (list(range(T)) if bounds.allow_loop else [])
        for tc in itertools.product(clusters, repeat=T):
            base = sum(_key_size(k) for k in tc)
            for loop in loops:
                n_gaps = T if loop is not None else T - 1
                for gaps in itertools.product(gap_options, repeat=n_gaps):
                    size = base + sum(gap_size[g] for g in gaps)
                    keys.append((size, T, -1 if loop is None else loop, tc, gaps))
    keys.sort()
    return keys


def _spec_from_key(key: tuple, agents: int, bridge_gaps: bool = True) -> FrameSpec:
    _, T, loop, tc, gaps = key
    return FrameSpec(
        agents,
        tuple(_cluster(k) for k in tc),
        tuple(tuple(Chain(tuple(_cluster(k) for k in ch)) for ch in g) for g in gaps),
        None if loop < 0 else loop,
        bridge_gaps,
    )


def enumerate_frames(bounds: SearchBounds) -> Iterator[FrameSpec]:
    """Every frame within `bounds` once, up to state renaming, smallest first."""
    agents = bounds.agents or 1
    for key in frame_keys(bounds, agents):
        yield _spec_from_key(key, agents, bounds.bridge_gaps)


# -- per-frame searches ------------------------------------------------------

class _OverBudget(Exception):
    pass


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def _valuations(index: FrameIndex, vs: list[int]) -> Iterator[dict[int, int]]:
    S = len(index)
    full = index.full
    for combo in range(1 << (S * len(vs))):
        yield {v: combo >> (j * S) & full for j, v in enumerate(vs)}


def _search_formula(spec: FrameSpec, f: Formula, negate: bool, budget: int):
    index = FrameIndex(spec)
    prog = compile_formula(index, f)
    used = 0
    for val in _valuations(index, variables(f)):
        used += 1
        if used > budget:
            raise _OverBudget
        mask = prog(val)[-1]
        if negate:
            mask = index.full & ~mask
        if mask:
            return val, _lowest(mask), used
    return None, None, used


def _search_rule(spec: FrameSpec, rule: InferenceRule, budget: int):
    index = FrameIndex(spec)
    premises = [compile_formula(index, p) for p in rule.premises]
    conclusion = compile_formula(index, rule.conclusion)
    used = 0
    for val in _valuations(index, rule.variables()):
        used += 1
        if used > budget:
            raise _OverBudget
        if all(p(val)[-1] == index.full for p in premises):
            fail = index.full & ~conclusion(val)[-1]
            if fail:
                return val, _lowest(fail), used
    return None, None, used


class _RnfPlan:
    """Variable-by-variable search plan for refuting a reduced normal form.

    After fixing the first s variables (in `rnf.order`) every state's vector of
    already-determined atoms must be the projection of some disjunct; per-state
    values of the next variable are filtered the same way before its modal
    atoms are computed.
    """

    def __init__(self, rnf: ReducedNormalFormRule):
        self.rnf = rnf
        order = list(rnf.order)
        step = {v: s for s, v in enumerate(order)}
        self.order = order
        self.atoms_at = [[] for _ in order]
        for k, a in enumerate(rnf.schema):
            if isinstance(a, Var):
                continue
            s = max(step[g.index] for g in a.children())
            self.atoms_at[s].append(k)
        self.xbit = [1 << (v - 1) for v in order]
        done = 0
        self.local, self.proj = [], []
        for s, v in enumerate(order):
            local = done | self.xbit[s]
            done = local | sum(1 << k for k in self.atoms_at[s])
            self.local.append(frozenset(d & local for d in rnf.disjuncts))
            self.proj.append(frozenset(d & done for d in rnf.disjuncts))

    def search(self, spec: FrameSpec, budget: int):
        index = FrameIndex(spec)
        if self.rnf.max_agent > spec.agents:
            raise ValueError("frame has too few agents for this rule")
        S = len(index)
        full = index.full
        schema = self.rnf.schema
        used = 0
        val: dict[int, int] = {}

        def dfs(s: int, vecs: list[int]):
            nonlocal used
            if s == len(self.order):
                fail = full & ~val.get(1, 0)
                return (dict(val), _lowest(fail)) if fail else None
            v, xb = self.order[s], self.xbit[s]
            local, proj = self.local[s], self.proj[s]
            ones, free = 0, []
            for a in range(S):
                can0 = vecs[a] in local
                can1 = (vecs[a] | xb) in local
                if can0 and can1:
                    free.append(a)
                elif can1:
                    ones |= 1 << a
                elif not can0:
                    return None
            for combo in range(1 << len(free)):
                used += 1
                if used > budget:
                    raise _OverBudget
                cand = ones
                for j, a in enumerate(free):
                    if combo >> j & 1:
                        cand |= 1 << a
                if v == 1 and cand == full:
                    continue
                val[v] = cand
                extra = [(1 << k, atom_mask(index, schema[k], val)) for k in self.atoms_at[s]]
                new = []
                for a in range(S):
                    vec = vecs[a] | (xb if cand >> a & 1 else 0)
                    for b, m in extra:
                        if m >> a & 1:
                            vec |= b
                    if vec not in proj:
                        break
                    new.append(vec)
                else:
                    found = dfs(s + 1, new)
                    if found:
                        return found
                del val[v]
            return None

        found = dfs(0, [0] * S)
        if found:
            return found[0], found[1], used
        return None, None, used


# -- driver ------------------------------------------------------------------

_WORKER: dict = {}


def _make_searcher(kind: str, query):
    if kind == "rnf":
        plan = _RnfPlan(query)
        return plan.search
    if kind == "rule":
        return lambda spec, budget: _search_rule(spec, query, budget)
    negate = kind == "theorem"
    return lambda spec, budget: _search_formula(spec, query, negate, budget)


def _init_worker(kind: str, query) -> None:
    _WORKER["search"] = _make_searcher(kind, query)


def _run_one(args):
    spec, budget = args
    try:
        return _WORKER["search"](spec, budget)
    except _OverBudget:
        return None


def _cap_from_env(cap: Optional[int]) -> int:
    if cap is not None:
        return cap
    env = os.environ.get("TEMPAGENT_CAP")
    return int(env) if env else DEFAULT_CAP


def _search(kind: str, query, bounds: SearchBounds, query_agents: int,
            cap: Optional[int], jobs: int) -> SearchOutcome:
    cap = _cap_from_env(cap)
    need = max(1, query_agents)
    if bounds.agents is None:
        bounds = bounds.with_agents(need)
    elif bounds.agents < need:
        raise ValueError(f"query mentions agent {need} but bounds allow {bounds.agents} agents")
    frames = enumerate_frames(bounds)
    total = 0
    checked = 0

    def reduce(spec, result):
        nonlocal total, checked
        if result is None:
            raise CapExceeded(f"search within bounds {bounds.to_dict()}", cap)
        val, bit, used = result
        total += used
        checked += 1
        if total > cap:
            raise CapExceeded(f"search within bounds {bounds.to_dict()}", cap)
        if val is not None:
            index = FrameIndex(spec)
            model = Model(spec, {v: index.names_of(m) for v, m in val.items()})
            return Witness(model, index.states[bit], bounds, checked)
        return None

    if jobs <= 1:
        search = _make_searcher(kind, query)
        for spec in frames:
            try:
                result = search(spec, cap - total)
            except _OverBudget:
                result = None
            w = reduce(spec, result)
            if w:
                return w
        return ExhaustedBounds(bounds, checked)

    specs = list(frames)
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(kind, query)) as pool:
        try:
            for spec, result in zip(specs, pool.map(_run_one, [(s, cap) for s in specs],
                                                    chunksize=8)):
                w = reduce(spec, result)
                if w:
                    return w
        finally:
            pool.shutdown(cancel_futures=True)
    return ExhaustedBounds(bounds, checked)


def sat_bounded(f: Formula, bounds: SearchBounds = SearchBounds(), *,
                cap: Optional[int] = None, jobs: int = 1) -> SearchOutcome:
    """Find a model and state where `f` holds."""
    return _search("sat", f, bounds, metrics(f).max_agent, cap, jobs)


def theorem_bounded(f: Formula, bounds: SearchBounds = SearchBounds(), *,
                    cap: Optional[int] = None, jobs: int = 1) -> SearchOutcome:
    """Find a countermodel: a model and state where `f` fails."""
    return _search("theorem", f, bounds, metrics(f).max_agent, cap, jobs)


def refute_rule_bounded(rule: Union[InferenceRule, ReducedNormalFormRule],
                        bounds: SearchBounds = SearchBounds(), *,
                        cap: Optional[int] = None, jobs: int = 1) -> SearchOutcome:
    """Find a model where every premise is valid and the conclusion fails at `state`."""
    if isinstance(rule, ReducedNormalFormRule):
        return _search("rnf", rule, bounds, rule.max_agent, cap, jobs)
    return _search("rule", rule, bounds, rule.max_agent, cap, jobs)
