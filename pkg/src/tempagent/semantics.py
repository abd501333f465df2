"""Truth of formulas in models.

Two independent evaluators live here.  `evaluate` folds the frame onto its
quotient (`FrameIndex`) and works on bit sets; `oracle_eval` expands every
quantifier literally over an explicit `UnrolledGraph`.  For lasso frames the
oracle only trusts each subformula on a window of positions large enough that
the witnesses it needs provably lie inside the unrolled prefix; the horizon
must cover those windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .formula import (
    And, Bot, Dist, Formula, Implies, K, KnI, Next, Not, Or, Today, Top, Unc,
    Until, Var, metrics, subformulas,
)
from .frames import FrameIndex, FrameSpec, check, frame_index, strict_power, transitive_closure, unroll

TruthAssignment = dict  # state name -> bool, in frame state order


class EvaluationError(ValueError):
    pass


class HorizonError(EvaluationError):
    pass


@dataclass
class Model:
    spec: FrameSpec
    valuation: dict[int, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        check(self.spec)
        known = set(self.spec.state_names())
        clean = {}
        for var, states in self.valuation.items():
            states = frozenset(states)
            unknown = states - known
            if unknown:
                raise EvaluationError(f"unknown state {sorted(unknown)[0]!r} in valuation of x{var}")
            if states:
                clean[int(var)] = states
        self.valuation = dict(sorted(clean.items()))

    @property
    def states(self) -> list[str]:
        return self.spec.state_names()


def _check_agents(spec: FrameSpec, f: Formula) -> None:
    m = metrics(f).max_agent
    if m > spec.agents:
        raise EvaluationError(f"formula mentions agent {m} but the frame has {spec.agents} agents")


# -- fast evaluator ----------------------------------------------------------

def compile_formula(index: FrameIndex, f: Formula) -> Callable[[Mapping[int, int]], list[int]]:
    """Straight-line program computing the state set of every subformula.

    The returned function maps variable -> state bit mask to the list of masks
    in `subformulas(f)` order; the last entry is `f` itself.
    """
    _check_agents(index.spec, f)
    subs = subformulas(f)
    pos = {g: k for k, g in enumerate(subs)}
    # one generated function with a local per subformula avoids a call per step
    lines = []
    for k, g in enumerate(subs):
        a, b = ([f"r{pos[c]}" for c in g.children()] + [None, None])[:2]
        if isinstance(g, Var):
            expr = f"v.get({g.index}, 0)"
        elif isinstance(g, Top):
            expr = "full"
        elif isinstance(g, Bot):
            expr = "0"
        elif isinstance(g, Not):
            expr = f"full & ~{a}"
        elif isinstance(g, And):
            expr = f"{a} & {b}"
        elif isinstance(g, Or):
            expr = f"{a} | {b}"
        elif isinstance(g, Implies):
            expr = f"(full & ~{a}) | {b}"
        elif isinstance(g, K):
            expr = f"knows({g.agent}, {a})"
        elif isinstance(g, Next):
            expr = f"nxt({a})"
        elif isinstance(g, Until):
            expr = f"until({a}, {b})"
        elif isinstance(g, Dist):
            expr = f"dist({g.k}, {a})"
        elif isinstance(g, Today):
            expr = f"today({a})"
        elif isinstance(g, KnI):
            expr = f"kni({a})"
        elif isinstance(g, Unc):
            expr = f"unc({a})"
        else:
            raise TypeError(f"not a formula node: {g!r}")
        lines.append(f"    r{k} = {expr}")
    body = "\n".join(lines)
    out = ", ".join(f"r{k}" for k in range(len(subs)))
    source = f"def run(v):\n{body}\n    return [{out}]\n"
    scope = {"full": index.full, "knows": index.knows, "nxt": index.next, "until": index.until,
             "dist": index.dist, "today": index.today, "kni": index.kni, "unc": index.unc}
    exec(compile(source, "<formula>", "exec"), scope)
    run: Callable[[Mapping[int, int]], list[int]] = scope["run"]
    return run


def valuation_masks(index: FrameIndex, model: Model) -> dict[int, int]:
    return {v: index.mask_of(s) for v, s in model.valuation.items()}


def truth_mask(model: Model, f: Formula) -> int:
    index = frame_index(model.spec)
    return compile_formula(index, f)(valuation_masks(index, model))[-1]


def evaluate(model: Model, f: Formula, horizon: Optional[int] = None) -> TruthAssignment:
    """Truth of `f` at every readout state of `model`.

    The quotient evaluation is exact; `horizon`, when given, is only checked
    against the minimum an unrolling would need.
    """
    if horizon is not None:
        _check_horizon(model.spec, f, horizon)
    index = frame_index(model.spec)
    mask = compile_formula(index, f)(valuation_masks(index, model))[-1]
    return {s: bool(mask >> k & 1) for k, s in enumerate(index.states)}


def holds_at(model: Model, state: str, f: Formula) -> bool:
    index = frame_index(model.spec)
    if state not in index.bit:
        raise EvaluationError(f"unknown state {state!r}")
    return bool(truth_mask(model, f) >> index.bit[state] & 1)


def valid_in_model(model: Model, f: Formula) -> bool:
    return truth_mask(model, f) == frame_index(model.spec).full


def unrolled_truth(model: Model, f: Formula, horizon: int) -> dict[str, bool]:
    """Truth at every node of the unrolled prefix, keyed ``name`` / ``name.c{copy}``."""
    _check_horizon(model.spec, f, horizon)
    table = evaluate(model, f)
    g = unroll(model.spec, horizon)
    return {g.key(k): table[name] for k, (name, _) in enumerate(g.nodes)}


# -- horizons ----------------------------------------------------------------

def stable_horizon(model_or_spec, f: Formula) -> int:
    """Default unrolling depth for lasso frames."""
    spec = model_or_spec.spec if isinstance(model_or_spec, Model) else model_or_spec
    if spec.loop is None:
        raise HorizonError("stable_horizon needs a frame with a loop")
    m = metrics(f)
    return spec.prefix + (m.dist_weight + m.next_count + m.until_count + 2) * spec.period


def trust_windows(spec: FrameSpec, f: Formula) -> dict[Formula, int]:
    """Number of leading positions on which each subformula must be exact.

    A node trusted on W positions needs: N-child W+1; Until children W+P;
    D_k-child W+k+P-1 (k >= 1).  Minimal witnesses of Until and D_k lie below
    those bounds because the loop repeats every P positions.
    """
    subs = subformulas(f)
    T = spec.T
    window = {g: 0 for g in subs}
    window[f] = T
    if spec.loop is None:
        return {g: T for g in subs}
    P = spec.period
    for g in reversed(subs):
        w = window[g]
        if isinstance(g, Next):
            need = [(g.child, w + 1)]
        elif isinstance(g, Until):
            need = [(g.left, w + P), (g.right, w + P)]
        elif isinstance(g, Dist) and g.k > 0:
            need = [(g.child, w + g.k + P - 1)]
        else:
            need = [(c, w) for c in g.children()]
        for c, wc in need:
            window[c] = max(window[c], wc)
    return window


def minimum_horizon(spec: FrameSpec, f: Formula) -> int:
    if spec.loop is None:
        return spec.T
    # +1: chain states at the last trusted position need the following position
    return max(trust_windows(spec, f).values()) + 1


def _check_horizon(spec: FrameSpec, f: Formula, horizon: int) -> None:
    if spec.loop is None:
        if horizon != spec.T:
            raise HorizonError(f"loop-free frame needs horizon exactly {spec.T}, got {horizon}")
        return
    need = minimum_horizon(spec, f)
    if horizon < need:
        raise HorizonError(f"horizon {horizon} is below the minimum {need} for this formula")


# -- oracle ------------------------------------------------------------------

def _exists(rel: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """[a] -> exists b: rel[a, b] and phi[..., b]; batched over leading axes."""
    # float32 products go through BLAS; counts stay far below 2**24
    return (phi.astype(np.float32) @ rel.T.astype(np.float32)) > 0


def _forall(rel: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return ~_exists(rel, ~phi)


def oracle_truth(spec: FrameSpec, f: Formula, valuations: Mapping[int, np.ndarray],
                 horizon: Optional[int] = None) -> tuple[np.ndarray, "object"]:
    """Literal evaluation over the unrolled graph.

    `valuations` maps variable -> boolean array over quotient states with any
    number of leading batch axes.  Returns truth over unrolled nodes (same
    batch axes) and the graph.
    """
    _check_agents(spec, f)
    if horizon is None:
        horizon = spec.T if spec.loop is None else stable_horizon(spec, f)
    _check_horizon(spec, f, horizon)
    g = unroll(spec, horizon)
    n = len(g)
    names = spec.state_names()
    col = {s: k for k, s in enumerate(names)}
    lift = np.array([col[name] for name, _ in g.nodes], dtype=int)
    batch = next(iter(valuations.values())).shape[:-1] if valuations else ()
    window = trust_windows(spec, f)
    pos = g.positions

    same_cluster = g.cluster_of[:, None] == g.cluster_of[None, :]
    interaction = np.zeros((n, n), dtype=bool)
    for rel in g.agent_rel:
        interaction |= rel
    interaction = transitive_closure(interaction) & same_cluster
    next_plus = transitive_closure(g.next_rel)
    next_star = next_plus | np.eye(n, dtype=bool)
    # candidate witness pairs a Next* b; between[c, p]: c lies on the way for pair p
    pair_a, pair_b = np.nonzero(next_star)
    between = (next_star[pair_a, :] & next_plus[:, pair_b].T).T.astype(np.float32)
    pair_owner = np.zeros((len(pair_a), n), dtype=np.float32)
    pair_owner[np.arange(len(pair_a)), pair_a] = 1

    res: dict[Formula, np.ndarray] = {}
    for h in subformulas(f):
        if isinstance(h, Var):
            v = valuations.get(h.index)
            val = np.zeros(batch + (n,), dtype=bool) if v is None else v[..., lift]
        elif isinstance(h, Top):
            val = np.ones(batch + (n,), dtype=bool)
        elif isinstance(h, Bot):
            val = np.zeros(batch + (n,), dtype=bool)
        elif isinstance(h, Not):
            val = ~res[h.child]
        elif isinstance(h, And):
            val = res[h.left] & res[h.right]
        elif isinstance(h, Or):
            val = res[h.left] | res[h.right]
        elif isinstance(h, Implies):
            val = ~res[h.left] | res[h.right]
        elif isinstance(h, K):
            val = _forall(g.agent_rel[h.agent - 1], res[h.child])
        elif isinstance(h, Next):
            val = _forall(g.next_rel, res[h.child])
        elif isinstance(h, Today):
            val = _forall(same_cluster, res[h.child])
        elif isinstance(h, KnI):
            val = _exists(interaction, res[h.child])
        elif isinstance(h, Unc):
            val = _exists(interaction, res[h.child]) & _exists(interaction, ~res[h.child])
        elif isinstance(h, Dist):
            bound = window[h] + (h.k + spec.period - 1 if spec.loop is not None and h.k else 0)
            val = _exists(strict_power(g, h.k), res[h.child] & (pos < max(bound, window[h])))
        elif isinstance(h, Until):
            bound = window[h] + (spec.period if spec.loop is not None else 0)
            phi, psi = res[h.left], res[h.right] & (pos < bound)
            # pair (a, b) witnesses when psi holds at b and no c on the way fails phi
            bad = ((~phi).astype(np.float32) @ between) > 0
            good = psi[..., pair_b] & ~bad
            val = (good.astype(np.float32) @ pair_owner) > 0
        else:
            raise TypeError(f"not a formula node: {h!r}")
        res[h] = val
    return res[f], g


def oracle_eval(model: Model, f: Formula, horizon: Optional[int] = None) -> TruthAssignment:
    """Brute-force evaluator; agrees with `evaluate` on the readout window."""
    names = model.spec.state_names()
    vals = {v: np.array([s in states for s in names]) for v, states in model.valuation.items()}
    truth, g = oracle_truth(model.spec, f, vals, horizon)
    out = {}
    for k, (name, p) in enumerate(g.nodes):
        if model.spec.copy_of(p) == 0 and p < model.spec.T:
            out[name] = bool(truth[k])
    return {s: out[s] for s in names}
