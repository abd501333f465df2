"""Cluster-and-chain frames.

A frame is a sequence of time clusters ``C(0), C(1), ...`` with, between each
consecutive pair, a finite collection of chains of clusters.  Every cluster
carries one partition of its states per agent (the agent's indistinguishability
classes) and is universally time-connected inside.  Infinite frames are given
as lassos: ``T`` time clusters plus an optional loop index ``L`` so that after
``C(T-1)`` time continues at ``C(L)``.

State names are fixed strings: ``t{i}.{name}`` for a state of ``C(i)`` and
``g{gap}.{chain}.{pos}.{name}`` for a state of a chain cluster.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


class FrameError(ValueError):
    """Raised when an operation needs a well-formed frame and gets a bad one."""


@dataclass(frozen=True)
class Cluster:
    states: tuple[str, ...]
    partitions: tuple[tuple[tuple[str, ...], ...], ...]

    @classmethod
    def of(cls, states: Iterable[str], partitions: Iterable[Iterable[Iterable[str]]]) -> "Cluster":
        return cls(tuple(states), tuple(tuple(tuple(b) for b in p) for p in partitions))

    @classmethod
    def single(cls, states: Iterable[str], agents: int = 1) -> "Cluster":
        """Cluster where every agent sees all states as one class."""
        states = tuple(states)
        return cls(states, tuple((states,) for _ in range(agents)))

    @property
    def size(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class Chain:
    clusters: tuple[Cluster, ...]

    @property
    def size(self) -> int:
        return sum(c.size for c in self.clusters)


@dataclass(frozen=True)
class FrameSpec:
    agents: int
    time_clusters: tuple[Cluster, ...]
    gaps: tuple[tuple[Chain, ...], ...] = ()
    loop: Optional[int] = None
    # Q also links C(i) directly to C(i+1); keeps empty gaps time-connected.
    bridge_gaps: bool = field(default=True, compare=True)

    @property
    def T(self) -> int:
        return len(self.time_clusters)

    @property
    def prefix(self) -> int:
        if self.loop is None:
            raise FrameError("frame has no loop")
        return self.loop

    @property
    def period(self) -> int:
        if self.loop is None:
            raise FrameError("frame has no loop")
        return self.T - self.loop

    def succ(self, i: int) -> Optional[int]:
        """Time index following time index `i`, None at the end of a loop-free frame."""
        if i + 1 < self.T:
            return i + 1
        return self.loop

    def time_index(self, position: int) -> int:
        """Time index realized at unrolled position `position`."""
        if position < self.T:
            return position
        if self.loop is None:
            raise FrameError(f"position {position} beyond a loop-free frame of length {self.T}")
        return self.loop + (position - self.loop) % self.period

    def copy_of(self, position: int) -> int:
        """How many times the loop has been traversed before `position`."""
        if self.loop is None or position < self.loop:
            return 0
        return (position - self.loop) // self.period

    def state_names(self) -> list[str]:
        """All quotient state names, time cluster i followed by the chains of gap i."""
        names = []
        for i, c in enumerate(self.time_clusters):
            names.extend(time_state(i, s) for s in c.states)
            if i < len(self.gaps):
                for ci, chain in enumerate(self.gaps[i]):
                    for p, cl in enumerate(chain.clusters):
                        names.extend(chain_state(i, ci, p, s) for s in cl.states)
        return names

    @property
    def size(self) -> int:
        return len(self.state_names())


def time_state(i: int, name: str) -> str:
    return f"t{i}.{name}"


def chain_state(gap: int, chain: int, pos: int, name: str) -> str:
    return f"g{gap}.{chain}.{pos}.{name}"


def node_key(name: str, copy: int) -> str:
    return name if copy == 0 else f"{name}.c{copy}"


# -- validation --------------------------------------------------------------

def _cluster_violations(c: Cluster, agents: int, where: str) -> list[str]:
    out = []
    if not c.states:
        out.append(f"{where}: cluster has no states")
    if len(set(c.states)) != len(c.states):
        out.append(f"{where}: duplicate state names")
    if len(c.partitions) != agents:
        out.append(f"{where}: {len(c.partitions)} partitions for {agents} agents")
    states = set(c.states)
    for j, part in enumerate(c.partitions):
        loc = f"{where}.partitions[{j}]"
        seen: set[str] = set()
        for block in part:
            if not block:
                out.append(f"{loc}: empty block")
            if seen & set(block) or len(set(block)) != len(block):
                out.append(f"{loc}: blocks not disjoint")
            seen |= set(block)
        if seen - states:
            out.append(f"{loc}: unknown states {sorted(seen - states)}")
        if states - seen:
            out.append(f"{loc}: blocks do not cover {sorted(states - seen)}")
    return out


def validate(spec: FrameSpec) -> list[str]:
    """Every violated invariant of `spec`, with its location. Empty means ok."""
    out = []
    if spec.agents < 1:
        out.append(f"agents: need at least one agent, got {spec.agents}")
    if not spec.time_clusters:
        out.append("time_clusters: need at least one time cluster")
    for i, c in enumerate(spec.time_clusters):
        out.extend(_cluster_violations(c, spec.agents, f"time_clusters[{i}]"))
    T = spec.T
    if spec.loop is not None and not 0 <= spec.loop <= T - 1:
        out.append(f"loop: loop index out of range ({spec.loop} not in 0..{T - 1})")
    want = T if spec.loop is not None else max(T - 1, 0)
    if len(spec.gaps) != want:
        out.append(f"gaps: expected {want} gaps, got {len(spec.gaps)}")
    for g, gap in enumerate(spec.gaps):
        for ci, chain in enumerate(gap):
            if not chain.clusters:
                out.append(f"gaps[{g}].chains[{ci}]: chain has no clusters")
            for p, c in enumerate(chain.clusters):
                out.extend(_cluster_violations(c, spec.agents, f"gaps[{g}].chains[{ci}].clusters[{p}]"))
    return out


def check(spec: FrameSpec) -> None:
    problems = validate(spec)
    if problems:
        raise FrameError("invalid frame: " + "; ".join(problems))


# -- explicit unrolling ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class UnrolledGraph:
    """Explicit prefix of the (possibly infinite) frame over `horizon` positions.

    Nodes are ``(name, position)`` pairs; relations are dense boolean matrices
    indexed by node number.  ``agent_rel[j]`` is the relation of agent j+1.
    """
    spec: FrameSpec
    horizon: int
    nodes: tuple[tuple[str, int], ...]
    cluster_of: np.ndarray
    next_rel: np.ndarray
    q_rel: np.ndarray
    r_rel: np.ndarray
    r_strict: np.ndarray
    agent_rel: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, name: str, position: int) -> int:
        return self._index[(name, position)]

    @functools.cached_property
    def _index(self) -> dict:
        return {n: k for k, n in enumerate(self.nodes)}

    @functools.cached_property
    def positions(self) -> np.ndarray:
        return np.array([p for _, p in self.nodes], dtype=int)

    def key(self, k: int) -> str:
        name, p = self.nodes[k]
        return node_key(name, self.spec.copy_of(p))

    def pairs(self, rel: np.ndarray) -> set[tuple[tuple[str, int], tuple[str, int]]]:
        return {(self.nodes[a], self.nodes[b]) for a, b in zip(*np.nonzero(rel))}


def transitive_closure(rel: np.ndarray) -> np.ndarray:
    """Warshall closure of a square boolean matrix."""
    r = rel.copy()
    for k in range(r.shape[0]):
        r |= np.outer(r[:, k], r[k, :])
    return r


@functools.lru_cache(maxsize=256)
def unroll(spec: FrameSpec, horizon: int) -> UnrolledGraph:
    """Unroll `spec` over positions 0..horizon-1 and build every relation.

    Chains of the gap after position p are present when position p+1 is.
    """
    check(spec)
    if horizon < 1:
        raise FrameError("horizon must be positive")
    if spec.loop is None and horizon > spec.T:
        raise FrameError(f"loop-free frame has only {spec.T} time clusters, horizon {horizon} requested")

    nodes: list[tuple[str, int]] = []
    clusters: list[list[int]] = []        # node ids per cluster copy
    blocks: list[list[list[int]]] = [[] for _ in range(spec.agents)]
    time_ids: list[list[int]] = []        # per position
    gap_chains: list[list[list[list[int]]]] = []  # per position: chains -> clusters -> ids

    def add_cluster(c: Cluster, names: Sequence[str], p: int) -> list[int]:
        ids = []
        for s in names:
            ids.append(len(nodes))
            nodes.append((s, p))
        local = dict(zip(c.states, ids))
        for j, part in enumerate(c.partitions):
            for b in part:
                blocks[j].append([local[s] for s in b])
        clusters.append(ids)
        return ids

    for p in range(horizon):
        i = spec.time_index(p)
        c = spec.time_clusters[i]
        time_ids.append(add_cluster(c, [time_state(i, s) for s in c.states], p))
        chains = []
        if p + 1 < horizon and i < len(spec.gaps):
            for ci, chain in enumerate(spec.gaps[i]):
                chains.append([add_cluster(cl, [chain_state(i, ci, k, s) for s in cl.states], p)
                               for k, cl in enumerate(chain.clusters)])
        gap_chains.append(chains)

    n = len(nodes)
    q = np.zeros((n, n), dtype=bool)
    nxt = np.zeros((n, n), dtype=bool)
    cluster_of = np.zeros(n, dtype=int)
    for cid, ids in enumerate(clusters):
        cluster_of[ids] = cid
        q[np.ix_(ids, ids)] = True

    for p in range(horizon):
        following = time_ids[p + 1] if p + 1 < horizon else None
        for chain in gap_chains[p]:
            q[np.ix_(time_ids[p], chain[0])] = True
            for a in range(len(chain)):
                for b in range(a, len(chain)):
                    q[np.ix_(chain[a], chain[b])] = True
            if following is not None:
                q[np.ix_(chain[-1], following)] = True
                for cl in chain:
                    nxt[np.ix_(cl, following)] = True
        if following is not None:
            nxt[np.ix_(time_ids[p], following)] = True
            if spec.bridge_gaps:
                q[np.ix_(time_ids[p], following)] = True

    r = transitive_closure(q)
    strict = r & ~r.T
    agent_rel = []
    for j in range(spec.agents):
        m = np.zeros((n, n), dtype=bool)
        for b in blocks[j]:
            m[np.ix_(b, b)] = True
        agent_rel.append(m)
    for arr in (q, nxt, r, strict, cluster_of, *agent_rel):
        arr.flags.writeable = False
    return UnrolledGraph(spec, horizon, tuple(nodes), cluster_of, nxt, q, r, strict, tuple(agent_rel))


def strict_power(g: UnrolledGraph, k: int) -> np.ndarray:
    """k-fold composition of the strict part of R; k = 0 gives the identity."""
    if k < 0:
        raise ValueError("k must be non-negative")
    result = np.eye(len(g), dtype=bool)
    step = g.r_strict.astype(np.int64)
    for _ in range(k):
        result = (result.astype(np.int64) @ step) > 0
    return result


# -- quotient index for fast evaluation --------------------------------------

class FrameIndex:
    """The lasso frame folded onto its T time indices, with states as bits.

    Truth at any unrolled position depends only on the state's quotient name
    (every operator looks at the current cluster or forward in time, and the
    forward frame is periodic), so sets of states are Python ints here.
    """

    def __init__(self, spec: FrameSpec):
        check(spec)
        self.spec = spec
        self.states = spec.state_names()
        self.bit = {s: k for k, s in enumerate(self.states)}
        self.full = (1 << len(self.states)) - 1
        T = spec.T

        self.cluster_masks: list[int] = []
        self.agent_blocks: list[list[int]] = [[] for _ in range(spec.agents)]
        self.components: list[int] = []
        self.time_mask = [0] * T
        self.group_mask = [0] * T          # states whose Next-successors are C(succ(i))
        self.succ = [spec.succ(i) for i in range(T)]
        edges: list[list[int]] = []         # cluster-level Q edges without self loops
        time_cluster = []
        chain_last = []

        def add(c: Cluster, names: list[str], i: int) -> int:
            mask = 0
            local = {}
            for s, full in zip(c.states, names):
                local[s] = 1 << self.bit[full]
                mask |= local[s]
            for j, part in enumerate(c.partitions):
                for b in part:
                    self.agent_blocks[j].append(sum(local[s] for s in b))
            self.components.extend(_merge_blocks(
                [sum(local[s] for s in b) for part in c.partitions for b in part]))
            self.cluster_masks.append(mask)
            self.group_mask[i] |= mask
            edges.append([])
            return len(self.cluster_masks) - 1

        for i, c in enumerate(spec.time_clusters):
            cid = add(c, [time_state(i, s) for s in c.states], i)
            self.time_mask[i] = self.cluster_masks[cid]
            time_cluster.append(cid)
        for i, gap in enumerate(spec.gaps):
            for ci, chain in enumerate(gap):
                prev = time_cluster[i]
                for p, cl in enumerate(chain.clusters):
                    cid = add(cl, [chain_state(i, ci, p, s) for s in cl.states], i)
                    edges[prev].append(cid)
                    prev = cid
                chain_last.append((i, prev))
        for i, cid in chain_last:
            edges[cid].append(time_cluster[self.succ[i]])
        if spec.bridge_gaps:
            for i in range(len(spec.gaps)):
                edges[time_cluster[i]].append(time_cluster[self.succ[i]])

        # states in clusters reachable by at least one edge
        self.strict_reach = []
        for cid in range(len(self.cluster_masks)):
            seen: set[int] = set()
            todo = list(edges[cid])
            while todo:
                d = todo.pop()
                if d not in seen:
                    seen.add(d)
                    todo.extend(edges[d])
            self.strict_reach.append(sum(self.cluster_masks[d] for d in seen))

        # the fixpoint operators are the hot spot when many valuations share a frame
        for name in ("knows", "today", "kni", "unc", "next", "until", "dist"):
            setattr(self, name, functools.lru_cache(maxsize=1 << 16)(getattr(self, "_" + name)))

    def __len__(self) -> int:
        return len(self.states)

    def mask_of(self, names: Iterable[str]) -> int:
        try:
            return sum(1 << self.bit[s] for s in set(names))
        except KeyError as e:
            raise FrameError(f"unknown state {e.args[0]!r}") from None

    def names_of(self, mask: int) -> list[str]:
        return [s for k, s in enumerate(self.states) if mask >> k & 1]

    # operators on state sets

    def _knows(self, agent: int, m: int) -> int:
        r = 0
        for b in self.agent_blocks[agent - 1]:
            if b & m == b:
                r |= b
        return r

    def _today(self, m: int) -> int:
        r = 0
        for c in self.cluster_masks:
            if c & m == c:
                r |= c
        return r

    def _kni(self, m: int) -> int:
        r = 0
        for c in self.components:
            if c & m:
                r |= c
        return r

    def _unc(self, m: int) -> int:
        return self._kni(m) & self._kni(self.full & ~m)

    def _next(self, m: int) -> int:
        r = 0
        for i, s in enumerate(self.succ):
            if s is None or self.time_mask[s] & m == self.time_mask[s]:
                r |= self.group_mask[i]
        return r

    def _until(self, phi: int, psi: int) -> int:
        # reach[i]: some later position from i on has a psi-state and every
        # time cluster strictly before it is entirely phi
        T = len(self.time_mask)
        reach = [False] * T
        changed = True
        while changed:
            changed = False
            for i in range(T):
                if reach[i]:
                    continue
                tm = self.time_mask[i]
                s = self.succ[i]
                if tm & psi or (tm & phi == tm and s is not None and reach[s]):
                    reach[i] = changed = True
        r = psi
        for i, s in enumerate(self.succ):
            if s is not None and reach[s]:
                r |= phi & self.group_mask[i]
        return r

    def _dist(self, k: int, m: int) -> int:
        for _ in range(k):
            r = 0
            for c, reach in zip(self.cluster_masks, self.strict_reach):
                if reach & m:
                    r |= c
            m = r
        return m


def _merge_blocks(blocks: list[int]) -> list[int]:
    """Connected components of overlapping bit masks."""
    comps: list[int] = []
    for b in blocks:
        merged = b
        rest = []
        for c in comps:
            if c & merged:
                merged |= c
            else:
                rest.append(c)
        comps = rest + [merged]
    return comps


@functools.lru_cache(maxsize=4096)
def frame_index(spec: FrameSpec) -> FrameIndex:
    return FrameIndex(spec)
