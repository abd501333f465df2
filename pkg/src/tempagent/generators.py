"""Seeded random frames, models and formulas for differential testing."""

from __future__ import annotations

import random
from typing import Optional

from .formula import (
    BOT, TOP, And, Dist, Formula, Implies, K, KnI, Next, Not, Or, Today, Unc, Until, Var,
)
from .frames import Chain, Cluster, FrameSpec
from .semantics import Model

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def random_partition(rng: random.Random, states: tuple[str, ...]) -> tuple[tuple[str, ...], ...]:
    blocks: list[list[str]] = []
    for s in states:
        k = rng.randrange(len(blocks) + 1)
        if k == len(blocks):
            blocks.append([s])
        else:
            blocks[k].append(s)
    return tuple(tuple(b) for b in blocks)


def random_cluster(rng: random.Random, size: int, agents: int) -> Cluster:
    states = tuple(_LETTERS[:size])
    return Cluster(states, tuple(random_partition(rng, states) for _ in range(agents)))


def random_spec(rng: random.Random, max_states: int = 12, max_agents: int = 3,
                max_time: int = 3, max_chains: int = 1, max_chain_length: int = 2,
                max_cluster: int = 3, loop: Optional[bool] = None) -> FrameSpec:
    """Random frame with at most `max_states` states in total."""
    agents = rng.randint(1, max_agents)
    T = rng.randint(1, max_time)
    has_loop = rng.random() < 0.5 if loop is None else loop
    budget = max_states - T
    sizes = []
    for _ in range(T):
        extra = rng.randint(0, min(max_cluster - 1, budget))
        budget -= extra
        sizes.append(1 + extra)
    time_clusters = tuple(random_cluster(rng, s, agents) for s in sizes)
    gaps = []
    for _ in range(T if has_loop else T - 1):
        chains = []
        for _ in range(rng.randint(0, max_chains)):
            length = rng.randint(1, max_chain_length)
            if budget < length:
                break
            clusters = []
            for k in range(length):
                extra = rng.randint(0, max(0, min(max_cluster - 1, budget - (length - k))))
                budget -= 1 + extra
                clusters.append(random_cluster(rng, 1 + extra, agents))
            chains.append(Chain(tuple(clusters)))
        gaps.append(tuple(chains))
    return FrameSpec(agents, time_clusters, tuple(gaps), rng.randrange(T) if has_loop else None)


def random_model(rng: random.Random, variables: int = 3, **kw) -> Model:
    spec = random_spec(rng, **kw)
    names = spec.state_names()
    valuation = {v: {s for s in names if rng.random() < 0.5} for v in range(1, variables + 1)}
    return Model(spec, valuation)


def random_formula(rng: random.Random, size: int = 8, variables: int = 3,
                   agents: int = 1, max_dist: int = 2) -> Formula:
    """Random formula with at most `size` nodes."""
    if size <= 1:
        r = rng.random()
        if r < 0.08:
            return TOP
        if r < 0.12:
            return BOT
        return Var(rng.randint(1, variables))
    kind = rng.choice(["not", "and", "or", "imp", "K", "N", "until", "D", "today", "kni", "unc"])
    if kind in ("and", "or", "imp", "until"):
        left = rng.randint(1, size - 2) if size > 2 else 1
        a = random_formula(rng, left, variables, agents, max_dist)
        b = random_formula(rng, max(size - 1 - left, 1), variables, agents, max_dist)
        return {"and": And, "or": Or, "imp": Implies, "until": Until}[kind](a, b)
    child = random_formula(rng, size - 1, variables, agents, max_dist)
    if kind == "K":
        return K(rng.randint(1, agents), child)
    if kind == "D":
        return Dist(rng.randint(0, max_dist), child)
    return {"not": Not, "N": Next, "today": Today, "kni": KnI, "unc": Unc}[kind](child)
