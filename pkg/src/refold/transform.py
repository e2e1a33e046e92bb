"""Unfolding, folding, syntactic equivalence, and a bounded bottom-up
consequence oracle for tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .logic import (
    Atom,
    Clause,
    Compound,
    LogicError,
    PredicateRegistry,
    Program,
    Term,
    Var,
    _atom_skeleton,
    rename_atom,
    rename_clause,
    variant_equal,
)


class TransformError(LogicError):
    pass


class CycleError(TransformError):
    def __init__(self, cycle: list):
        super().__init__("recursive support predicates: " + " -> ".join(cycle))
        self.cycle = cycle


class MissingDefinitionError(TransformError):
    pass


class UnfoldExplosionError(TransformError):
    pass


DEFAULT_UNFOLD_CAP = 10_000


@dataclass
class UnfoldedProgram:
    """Task-headed clauses whose bodies mention primitives only."""

    clauses: tuple
    origin: tuple  # index -> original task clause index in the source program
    registry: PredicateRegistry

    @property
    def size(self) -> int:
        return sum(c.size for c in self.clauses)


# ---------------------------------------------------------------------------
# Substitutions

def subst_term(t: Term, s: dict) -> Term:
    if isinstance(t, Var):
        v = s.get(t)
        return subst_term(v, s) if v is not None and v != t else (v or t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(subst_term(a, s) for a in t.args))
    return t


def subst_atom(a: Atom, s: dict) -> Atom:
    return Atom(a.pred, tuple(subst_term(t, s) for t in a.args))


def unify(t1: Term, t2: Term, s: dict) -> Optional[dict]:
    t1, t2 = subst_term(t1, s), subst_term(t2, s)
    if t1 == t2:
        return s
    if isinstance(t1, Var):
        s2 = dict(s)
        s2[t1] = t2
        return s2
    if isinstance(t2, Var):
        s2 = dict(s)
        s2[t2] = t1
        return s2
    if isinstance(t1, Compound) and isinstance(t2, Compound):
        if t1.functor != t2.functor or len(t1.args) != len(t2.args):
            return None
        for a, b in zip(t1.args, t2.args):
            s = unify(a, b, s)
            if s is None:
                return None
        return s
    return None


def unify_atoms(a1: Atom, a2: Atom, s: dict) -> Optional[dict]:
    if a1.pred != a2.pred or a1.arity != a2.arity:
        return None
    for t1, t2 in zip(a1.args, a2.args):
        s = unify(t1, t2, s)
        if s is None:
            return None
    return s


_fresh_counter = itertools.count()


def rename_apart(c: Clause) -> Clause:
    n = next(_fresh_counter)
    mapping = {v: Var(f"_R{n}_{v.name}") for v in dict.fromkeys(c.variables())}
    return rename_clause(c, mapping)


# ---------------------------------------------------------------------------
# Unfold

def unfold(p: Program, cap: int = DEFAULT_UNFOLD_CAP) -> UnfoldedProgram:
    """Inline every support predicate until task-clause bodies mention
    primitives only. One output clause per complete inlining choice."""
    reg = p.registry
    defs: dict = {}
    for c in p.clauses:
        defs.setdefault(c.head.pred, []).append(c)

    # cycle check over support predicates reachable from task clauses
    support_graph = {}
    for pred, cs in defs.items():
        if reg.role(pred) != "support":
            continue
        deps = []
        for c in cs:
            for lit in c.body:
                if reg.role(lit.pred) == "support":
                    deps.append(lit.pred)
        support_graph[pred] = deps

    state: dict = {}  # 0 = in progress, 1 = done

    def visit(pred, stack):
        if state.get(pred) == 1:
            return
        if state.get(pred) == 0:
            i = stack.index(pred)
            raise CycleError(stack[i:] + [pred])
        state[pred] = 0
        for d in support_graph.get(pred, ()):
            visit(d, stack + [pred])
        state[pred] = 1

    for pred in support_graph:
        visit(pred, [])

    expanded: dict = {}  # support pred -> list of primitive-body clauses

    def expand_pred(pred: str) -> list:
        if pred in expanded:
            return expanded[pred]
        if pred not in defs:
            raise MissingDefinitionError(f"support predicate {pred} has no clauses")
        out = []
        for c in defs[pred]:
            out.extend(expand_clause(c))
        expanded[pred] = out
        return out

    def expand_clause(c: Clause) -> list:
        # returns clauses with primitive-only bodies
        results = [c]
        while True:
            idx = None
            for k, lit in enumerate(results[0].body):
                role = reg.role(lit.pred)
                if role == "support":
                    idx = k
                    break
                if role is None:
                    raise MissingDefinitionError(
                        f"predicate {lit.pred} in the body of {c.head.pred} is undefined"
                    )
                if role == "task":
                    raise TransformError(
                        f"task predicate {lit.pred} occurs in a body; unfolding only "
                        "inlines support predicates"
                    )
            if idx is None:
                return results
            nxt = []
            for r in results:
                lit = r.body[idx]
                for d in expand_pred(lit.pred):
                    d = rename_apart(d)
                    s = unify_atoms(d.head, lit, {})
                    if s is None:
                        continue
                    body = (
                        r.body[:idx]
                        + tuple(subst_atom(b, s) for b in d.body)
                        + r.body[idx + 1 :]
                    )
                    nxt.append(Clause(subst_atom(r.head, s), body))
                if len(nxt) > cap:
                    raise UnfoldExplosionError(
                        f"unfolding exceeded the cap of {cap} clauses"
                    )
            results = nxt
            if not results:
                return results

    out_clauses = []
    origin = []
    for idx, c in enumerate(p.clauses):
        if reg.role(c.head.pred) != "task":
            continue
        for u in expand_clause(c):
            out_clauses.append(u)
            origin.append(idx)
            if len(out_clauses) > cap:
                raise UnfoldExplosionError(f"unfolding exceeded the cap of {cap} clauses")
    return UnfoldedProgram(tuple(out_clauses), tuple(origin), reg.copy())


# ---------------------------------------------------------------------------
# Fold

def find_body_matches(body: tuple, pattern: tuple, pattern_head: Atom) -> list:
    """All sub-multiset matches of `pattern` (a support-clause body) in
    `body`, with a consistent substitution of the pattern's variables.

    A valid fold match maps every pattern variable absent from
    `pattern_head` to a distinct variable that occurs nowhere in `body`
    outside the matched literals, so that unfolding restores the
    original clause. Returns (frozenset of matched indices, instantiated
    head) pairs.
    """
    # keep the pattern's variables disjoint from the body's so bindings
    # never chain through shared names
    renamed = rename_apart(Clause(pattern_head, tuple(pattern)))
    pattern_head, pattern = renamed.head, renamed.body
    pattern_vars = set(renamed.variables())
    head_vars = pattern_head.var_set()
    internal = [v for v in dict.fromkeys(v for lit in pattern for v in lit.variables())
                if v not in head_vars]
    # variable -> set of body literal indices where it occurs
    occurs: dict = {}
    for i, lit in enumerate(body):
        for v in lit.var_set():
            occurs.setdefault(v, set()).add(i)

    matches = []
    seen = set()

    def rec(k: int, used: frozenset, s: dict):
        if k == len(pattern):
            # only pattern variables may be bound; a binding on a body
            # variable would silently rewrite literals outside this match
            if any(v not in pattern_vars for v in s):
                return
            # internal variables must be bound to distinct variables local
            # to the matched literals
            bound = [subst_term(v, s) for v in internal]
            if len(set(bound)) != len(bound):
                return
            for v, img in zip(internal, bound):
                if not isinstance(img, Var):
                    return
                if not occurs.get(img, set()) <= set(used):
                    return
            key = (used, subst_atom(pattern_head, s))
            if key not in seen:
                seen.add(key)
                matches.append(key)
            return
        lit = pattern[k]
        for i, cand in enumerate(body):
            if i in used:
                continue
            s2 = unify_atoms(lit, cand, dict(s))
            if s2 is None:
                continue
            # one-way: the candidate literal must be untouched
            if subst_atom(cand, s2) != cand:
                continue
            rec(k + 1, used | {i}, s2)

    rec(0, frozenset(), {})
    return matches


def _disjoint_subsets(matches: list, cap: Optional[int] = None) -> list:
    """All nonempty sets of pairwise index-disjoint matches, in a
    deterministic order."""
    out = []

    def rec(start: int, chosen: list, used: frozenset):
        if cap is not None and len(out) >= cap:
            return
        for i in range(start, len(matches)):
            idxs, head = matches[i]
            if idxs & used:
                continue
            out.append(chosen + [matches[i]])
            rec(i + 1, chosen + [matches[i]], used | idxs)
            if cap is not None and len(out) >= cap:
                return

    rec(0, [], frozenset())
    return out


def apply_match_set(clause: Clause, match_set: list) -> Clause:
    """Replace each match's literals with its instantiated head, inserted
    at the position of the first matched literal."""
    replacement_at = {}
    drop = set()
    for idxs, head in match_set:
        first = min(idxs)
        replacement_at[first] = head
        drop |= idxs
    body = []
    for i, lit in enumerate(clause.body):
        if i in replacement_at:
            body.append(replacement_at[i])
        elif i not in drop:
            body.append(lit)
    return Clause(clause.head, tuple(body))


def fold_clause(c: Clause, s: Clause) -> list:
    """Fold c with the support clause s: one result per maximal set of
    pairwise-disjoint matches of s's body in c's body. Empty when there
    is no match."""
    matches = find_body_matches(c.body, s.body, s.head)
    if not matches:
        return []
    subsets = _disjoint_subsets(matches)
    # keep maximal subsets only
    keys = [frozenset().union(*(m[0] for m in sub)) for sub in subsets]
    results = []
    for i, sub in enumerate(subsets):
        if any(j != i and keys[i] < keys[j] for j in range(len(subsets))):
            continue
        folded = apply_match_set(c, sub)
        if not any(variant_equal(folded, r) for r in results):
            results.append(folded)
    return results


# ---------------------------------------------------------------------------
# Syntactic equivalence

def multiset_variant_equal(cs1: list, cs2: list) -> bool:
    if len(cs1) != len(cs2):
        return False
    buckets: dict = {}
    for c in cs2:
        key = (_atom_skeleton(c.head), tuple(sorted(map(_atom_skeleton, c.body))))
        buckets.setdefault(key, []).append(c)
    for c in cs1:
        key = (_atom_skeleton(c.head), tuple(sorted(map(_atom_skeleton, c.body))))
        pool = buckets.get(key, [])
        for i, other in enumerate(pool):
            if variant_equal(c, other):
                pool.pop(i)
                break
        else:
            return False
    return True


def syntactic_equiv(p1: Program, p2: Program, cap: int = DEFAULT_UNFOLD_CAP) -> bool:
    """True iff unfold(p1) and unfold(p2) are the same multiset of clauses
    up to variable renaming and clause order."""
    t1 = set(p1.registry.by_role("task"))
    t2 = set(p2.registry.by_role("task"))
    if t1 != t2:
        return False
    u1 = unfold(p1, cap)
    u2 = unfold(p2, cap)
    return multiset_variant_equal(list(u1.clauses), list(u2.clauses))


# ---------------------------------------------------------------------------
# Bounded semantic oracle (tests only)

def restricted_consequences(p: Program, tasks: set, depth: int) -> set:
    """Ground atoms with a task predicate derivable bottom-up within
    `depth` rounds. Requires derived heads to come out ground."""
    if depth is None:
        raise TransformError("restricted_consequences needs a finite depth bound")
    facts: set = set()
    for _ in range(depth):
        new = set()
        for c in p.clauses:
            for s in _ground_body(c.body, facts, {}):
                head = subst_atom(c.head, s)
                if any(head_vars for head_vars in head.variables()):
                    raise TransformError(
                        f"derived non-ground atom {head}; program is not range-restricted"
                    )
                if head not in facts:
                    new.add(head)
        if not new:
            break
        facts |= new
    return {a for a in facts if a.pred in tasks}


def _ground_body(body: tuple, facts: set, s: dict):
    if not body:
        yield s
        return
    lit = body[0]
    for f in facts:
        s2 = unify_atoms(subst_atom(lit, s), f, dict(s))
        if s2 is not None:
            yield from _ground_body(body[1:], facts, s2)
