"""Inference rules and their reduced normal form.

A rule ``premises / conclusion`` is valid in a model when validity of all
premises everywhere forces the conclusion everywhere.  The reduced normal form
labels every subformula with its own variable (the conclusion gets x1) and
lists, as complete conjunctions over a fixed atom table, every combination of
atom values compatible with the labelling equivalences and the premises.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from .errors import CapExceeded
from .formula import (
    And, Bot, Dist, Formula, Implies, K, KnI, Next, Not, Or, ParseError, Today, Top, Unc,
    Until, Var, iter_nodes, metrics, parse, subformulas, to_text,
)
from .frames import FrameIndex, frame_index
from .semantics import Model, compile_formula, valuation_masks

DEFAULT_NF_CAP = 2 ** 20


@dataclass(frozen=True)
class InferenceRule:
    premises: tuple[Formula, ...]
    conclusion: Formula

    def __post_init__(self):
        if not self.premises:
            raise ValueError("a rule needs at least one premise")

    @property
    def formulas(self) -> tuple[Formula, ...]:
        return self.premises + (self.conclusion,)

    def variables(self) -> list[int]:
        return sorted({g.index for f in self.formulas for g in iter_nodes(f) if isinstance(g, Var)})

    @property
    def max_agent(self) -> int:
        return max(metrics(f).max_agent for f in self.formulas)

    def __str__(self) -> str:
        return " ; ".join(to_text(p) for p in self.premises) + " |- " + to_text(self.conclusion)


def parse_rule(text: str) -> InferenceRule:
    """Parse ``premise ; ... ; premise |- conclusion``."""
    if text.count("|-") != 1:
        raise ParseError("a rule needs exactly one '|-'", 1, 1, {"|-"})
    head, _, tail = text.partition("|-")
    parts = []
    offset = 0
    for chunk in head.split(";"):
        parts.append((chunk, offset))
        offset += len(chunk) + 1
    parts.append((tail, len(head) + 2))
    formulas = []
    for chunk, start in parts:
        if not chunk.strip():
            raise ParseError("empty premise or conclusion", 1, start + 1, {"formula"})
        try:
            formulas.append(parse(chunk))
        except ParseError as e:
            col = e.column + start if e.line == 1 and "\n" not in text[:start] else e.column
            raise ParseError(e.message, e.line, col, e.expected) from None
    return InferenceRule(tuple(formulas[:-1]), formulas[-1])


def formula_to_rule(f: Formula) -> InferenceRule:
    """``x1 -> x1 / f``: valid in a frame exactly when `f` is."""
    return InferenceRule((Implies(Var(1), Var(1)),), f)


def rule_valid_in_model(model: Model, rule: InferenceRule) -> bool:
    index = frame_index(model.spec)
    val = valuation_masks(index, model)
    for p in rule.premises:
        if compile_formula(index, p)(val)[-1] != index.full:
            return True
    return compile_formula(index, rule.conclusion)(val)[-1] == index.full


# -- reduced normal form -----------------------------------------------------

_BOOLEAN = (Top, Bot, Not, And, Or, Implies)


@dataclass(frozen=True)
class ReducedNormalFormRule:
    """``OR_j theta_j / x1`` over the atom table `schema`.

    Each disjunct is an int whose bit k is the coefficient of ``schema[k]``
    (1: the atom, 0: its negation).  ``labels[i-1]`` is the subformula of the
    source rule that variable x_i names; `order` lists variables children
    first.
    """
    n: int
    labels: tuple[Formula, ...]
    order: tuple[int, ...]
    schema: tuple[Formula, ...]
    disjuncts: tuple[int, ...]  # empty when the premises admit no labelling at all

    @property
    def max_agent(self) -> int:
        return max((a.agent for a in self.schema if isinstance(a, K)), default=0)

    def tables(self) -> Iterator[tuple[int, ...]]:
        for d in self.disjuncts:
            yield tuple(d >> k & 1 for k in range(len(self.schema)))

    def disjunct_formula(self, d: int) -> Formula:
        lits = [a if d >> k & 1 else Not(a) for k, a in enumerate(self.schema)]
        out = lits[0]
        for lit in lits[1:]:
            out = And(out, lit)
        return out

    def to_dict(self) -> dict:
        return {
            "variables": [f"x{i}" for i in range(1, self.n + 1)],
            "labels": {f"x{i}": to_text(g) for i, g in enumerate(self.labels, 1)},
            "schema": [to_text(a) for a in self.schema],
            "conclusion": "x1",
            "disjuncts": [list(t) for t in self.tables()],
        }


def atom_schema(n: int, source: Sequence[Formula]) -> tuple[Formula, ...]:
    """Atom table for `n` variables, restricted to operators occurring in `source`."""
    nodes = [g for f in source for g in iter_nodes(f)]
    kinds = {type(g) for g in nodes}
    agents = max((g.agent for g in nodes if isinstance(g, K)), default=0)
    dists = [g.k for g in nodes if isinstance(g, Dist)]
    xs = [Var(i) for i in range(1, n + 1)]
    atoms: list[Formula] = list(xs)
    if Next in kinds:
        atoms += [Next(x) for x in xs]
    atoms += [K(l, x) for l in range(1, agents + 1) for x in xs]
    if dists:
        atoms += [Dist(l, x) for l in range(0, max(dists) + 1) for x in xs]
    if Until in kinds:
        atoms += [Until(x, y) for x in xs for y in xs]
    if KnI in kinds:
        atoms += [KnI(x) for x in xs]
    if Unc in kinds:
        atoms += [Unc(x) for x in xs]
    if Today in kinds:
        atoms += [Today(x) for x in xs]
    return tuple(atoms)


def _label_atom(g: Formula, var: Mapping[Formula, int]) -> Formula:
    """The atom a modal subformula pins once its children are replaced by labels."""
    if isinstance(g, Until):
        return Until(Var(var[g.left]), Var(var[g.right]))
    x = Var(var[g.children()[0]])
    if isinstance(g, K):
        return K(g.agent, x)
    if isinstance(g, Dist):
        return Dist(g.k, x)
    return type(g)(x)


def _boolean_value(g: Formula, var: Mapping[Formula, int], x: Mapping[int, int]) -> int:
    if isinstance(g, Top):
        return 1
    if isinstance(g, Bot):
        return 0
    if isinstance(g, Not):
        return 1 - x[var[g.child]]
    a, b = x[var[g.left]], x[var[g.right]]
    if isinstance(g, And):
        return a & b
    if isinstance(g, Or):
        return a | b
    return (1 - a) | b


def _nf_cap() -> int:
    env = os.environ.get("TEMPAGENT_CAP")
    return int(env) if env else DEFAULT_NF_CAP


def to_reduced_normal_form(rule: InferenceRule, cap: int | None = None) -> ReducedNormalFormRule:
    """Reduced normal form of `rule`; raises CapExceeded when too many disjuncts."""
    cap = _nf_cap() if cap is None else cap
    var: dict[Formula, int] = {rule.conclusion: 1}
    order: list[int] = []
    for f in rule.premises + (rule.conclusion,):
        for g in subformulas(f):
            if g not in var:
                var[g] = len(var) + 1
            if var[g] not in order:
                order.append(var[g])
    n = len(var)
    labels = [None] * n
    for g, i in var.items():
        labels[i - 1] = g
    schema = atom_schema(n, rule.formulas)
    bit = {a: k for k, a in enumerate(schema)}

    free_vars = [i for i in order if not isinstance(labels[i - 1], _BOOLEAN)]
    forced = {var[p] for p in rule.premises}
    pinned = {}
    for i in order:
        g = labels[i - 1]
        if not isinstance(g, (Var,) + _BOOLEAN):
            pinned[i] = bit[_label_atom(g, var)]
    x_bits = set(range(n))
    free_atoms = [k for k in range(len(schema)) if k not in x_bits and k not in pinned.values()]

    bases = []
    for combo in range(1 << len(free_vars)):
        x = {v: combo >> k & 1 for k, v in enumerate(free_vars)}
        for i in order:
            if i not in x:
                x[i] = _boolean_value(labels[i - 1], var, x)
        if any(x[i] == 0 for i in forced):
            continue
        base = 0
        for i, val in x.items():
            if val:
                base |= 1 << (i - 1)
                if i in pinned:
                    base |= 1 << pinned[i]
        bases.append(base)

    total = len(bases) << len(free_atoms)
    if total > cap:
        raise CapExceeded("reduced normal form", cap, total)
    fills = [0]
    for k in free_atoms:
        fills += [m | 1 << k for m in fills]
    disjuncts = sorted(b | m for b in bases for m in fills)
    return ReducedNormalFormRule(n, tuple(labels), tuple(order), schema, tuple(disjuncts))


def atom_mask(index: FrameIndex, a: Formula, val: Mapping[int, int]) -> int:
    """State set of one schema atom under the variable masks `val`."""
    if isinstance(a, Var):
        return val.get(a.index, 0)
    if isinstance(a, Until):
        return index.until(val.get(a.left.index, 0), val.get(a.right.index, 0))
    m = val.get(a.child.index, 0)
    if isinstance(a, Next):
        return index.next(m)
    if isinstance(a, K):
        return index.knows(a.agent, m)
    if isinstance(a, Dist):
        return index.dist(a.k, m)
    if isinstance(a, Today):
        return index.today(m)
    if isinstance(a, KnI):
        return index.kni(m)
    if isinstance(a, Unc):
        return index.unc(m)
    raise TypeError(f"not a schema atom: {a!r}")


def atom_masks(index: FrameIndex, rnf: ReducedNormalFormRule, val: Mapping[int, int]) -> list[int]:
    if rnf.max_agent > index.spec.agents:
        raise ValueError(f"rule mentions agent {rnf.max_agent} but the frame has {index.spec.agents}")
    return [atom_mask(index, a, val) for a in rnf.schema]


def rnf_premise_mask(index: FrameIndex, rnf: ReducedNormalFormRule, val: Mapping[int, int]) -> int:
    masks = atom_masks(index, rnf, val)
    allowed = set(rnf.disjuncts)
    r = 0
    for s in range(len(index)):
        vec = 0
        for k, m in enumerate(masks):
            if m >> s & 1:
                vec |= 1 << k
        if vec in allowed:
            r |= 1 << s
    return r


def rnf_valid_in_model(model: Model, rnf: ReducedNormalFormRule) -> bool:
    index = frame_index(model.spec)
    val = valuation_masks(index, model)
    if rnf_premise_mask(index, rnf, val) != index.full:
        return True
    return val.get(1, 0) == index.full
