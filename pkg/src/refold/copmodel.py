"""Pseudo-Boolean encoding of support-clause selection, and decoding of
solver assignments back into programs.

Variables:
  SC(cand)              candidate support clause is selected
  FOLD(cl, lvl, n)      folding option n of clause cl is constructible
  LEVEL(cl, lvl)        clause cl takes its folding from level lvl
  PICK(cl, lvl, n)      folding option n is the one emitted for clause cl
  RED(group)            at least two foldings sharing this sub-body are
                        constructible

Constraints (all normalised to sum(coef * var) >= rhs):
  - exactly one LEVEL and exactly one PICK per clause
  - PICK implies its FOLD and its LEVEL
  - FOLD <-> conjunction of its required SC vars
  - SC(k) -> SC(dep) for every dependency
  - RED(g) <-> (sum of member FOLD vars > 1)

The objective charges size(option) on PICK, size(candidate) on SC, and 1
on RED, so the optimum value equals the emitted program's literal count
plus the redundancy penalties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .logic import Clause, Program, connected_subsets, variant_key
from .transform import UnfoldedProgram
from .candidates import LevelledSearchSpace

DEFAULT_RED_GROUP_CAP = 2000
DEFAULT_RED_SUBBODY_MAX = 3


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    """sum(coef * var) >= rhs over Boolean vars."""

    terms: tuple  # ((coef, var_index), ...)
    rhs: int
    label: str = ""

    def satisfied(self, values) -> bool:
        return sum(c for c, v in self.terms if values[v]) >= self.rhs


@dataclass
class CopModel:
    vars: list  # index -> tag tuple, e.g. ("SC", cid) or ("PICK", cl, lvl, n)
    constraints: list
    objective: dict  # var index -> nonnegative integer weight
    # decoding / oracle metadata
    sc_vars: dict = field(default_factory=dict)  # cand id -> var
    fold_vars: dict = field(default_factory=dict)  # (cl, lvl, n) -> var
    level_vars: dict = field(default_factory=dict)  # (cl, lvl) -> var
    pick_vars: dict = field(default_factory=dict)  # (cl, lvl, n) -> var
    red_vars: dict = field(default_factory=dict)  # group id -> var
    fold_required: dict = field(default_factory=dict)  # fold var -> tuple of sc vars
    sc_deps: dict = field(default_factory=dict)  # sc var -> tuple of sc vars
    red_members: dict = field(default_factory=dict)  # red var -> tuple of sc vars
    red_base: dict = field(default_factory=dict)  # red var -> constant member count
    clause_picks: dict = field(default_factory=dict)  # cl -> [(pick var, weight, lvl, n)]
    sc_cap: Optional[int] = None

    @property
    def num_vars(self) -> int:
        return len(self.vars)

    def core_var_count(self) -> int:
        return len(self.sc_vars) + len(self.fold_vars) + len(self.level_vars)


@dataclass
class Assignment:
    values: dict  # var index -> bool
    objective_value: int
    status: str  # optimal | feasible | infeasible | timeout-best


def check_assignment(model: CopModel, values) -> bool:
    """Independent evaluator: every constraint holds under `values`."""
    return all(c.satisfied(values) for c in model.constraints)


def objective_value(model: CopModel, values) -> int:
    return sum(w for v, w in model.objective.items() if values[v])


@dataclass
class EncodeOptions:
    enforce_predicate_cap: bool = False
    original_predicate_count: Optional[int] = None
    red_group_cap: int = DEFAULT_RED_GROUP_CAP
    red_subbody_max: int = DEFAULT_RED_SUBBODY_MAX
    max_variables: int = 200_000
    max_constraints: int = 500_000


def encode(
    space: LevelledSearchSpace,
    unfolded: UnfoldedProgram,
    opts: Optional[EncodeOptions] = None,
) -> CopModel:
    opts = opts or EncodeOptions()
    m = CopModel(vars=[], constraints=[], objective={})

    def new_var(tag) -> int:
        m.vars.append(tag)
        return len(m.vars) - 1

    def add(terms, rhs, label=""):
        m.constraints.append(LinearConstraint(tuple(terms), rhs, label))

    for cand in space.candidates:
        v = new_var(("SC", cand.id))
        m.sc_vars[cand.id] = v
        m.objective[v] = cand.size
    for cand in space.candidates:
        sv = m.sc_vars[cand.id]
        deps = tuple(m.sc_vars[d] for d in sorted(cand.dependencies))
        m.sc_deps[sv] = deps
        for dv in deps:
            add([(1, dv), (-1, sv)], 0, "sc-dep")

    for cl in sorted(space.foldings):
        levels = sorted(space.foldings[cl])
        lvl_vars = []
        picks_here = []
        for lvl in levels:
            lvar = new_var(("LEVEL", cl, lvl))
            m.level_vars[(cl, lvl)] = lvar
            lvl_vars.append(lvar)
            for n, opt in enumerate(space.foldings[cl][lvl]):
                fvar = new_var(("FOLD", cl, lvl, n))
                m.fold_vars[(cl, lvl, n)] = fvar
                req = tuple(m.sc_vars[cid] for cid in sorted(opt.required))
                m.fold_required[fvar] = req
                if req:
                    # f <-> AND(req)
                    for sv in req:
                        add([(1, sv), (-1, fvar)], 0, "fold-needs-sc")
                    add(
                        [(1, fvar)] + [(-1, sv) for sv in req],
                        1 - len(req),
                        "fold-forced",
                    )
                else:
                    add([(1, fvar)], 1, "raw-always")
                pvar = new_var(("PICK", cl, lvl, n))
                m.pick_vars[(cl, lvl, n)] = pvar
                m.objective[pvar] = opt.size
                add([(1, fvar), (-1, pvar)], 0, "pick-needs-fold")
                add([(1, lvar), (-1, pvar)], 0, "pick-needs-level")
                picks_here.append((pvar, opt.size, lvl, n))
        # exactly one level, exactly one pick
        add([(1, v) for v in lvl_vars], 1, "level-lo")
        add([(-1, v) for v in lvl_vars], -1, "level-hi")
        add([(1, p) for p, _, _, _ in picks_here], 1, "pick-lo")
        add([(-1, p) for p, _, _, _ in picks_here], -1, "pick-hi")
        m.clause_picks[cl] = picks_here

    _encode_redundancy(m, space, opts, new_var, add)

    if opts.enforce_predicate_cap:
        if opts.original_predicate_count is None:
            raise ModelError("predicate cap requested without the original count")
        base = len(
            {l.pred for c in unfolded.clauses for l in c.body}
            | {c.head.pred for c in unfolded.clauses}
        )
        cap = max(0, opts.original_predicate_count - base)
        m.sc_cap = cap
        if m.sc_vars:
            add([(-1, v) for v in m.sc_vars.values()], -cap, "pred-cap")

    if m.num_vars > opts.max_variables:
        raise ModelError(f"model has {m.num_vars} variables (cap {opts.max_variables})")
    if len(m.constraints) > opts.max_constraints:
        raise ModelError(
            f"model has {len(m.constraints)} constraints (cap {opts.max_constraints})"
        )
    return m


def _encode_redundancy(m: CopModel, space, opts, new_var, add):
    """One RED var per variant class of connected sub-bodies (size >= 2)
    occurring in two or more clauses, where the clauses counted are the
    input clauses (a constant contribution) and the selected candidates'
    definitions. The penalty is monotone in the selection -- adding a
    candidate can only introduce redundancy, never remove it -- which is
    what keeps the profitability prune loss-free. Classes shared among
    input clauses alone contribute a forced constant, kept so objective
    values stay comparable across different candidate spaces."""

    def subbody_keys(literals):
        if len(literals) < 2:
            return ()
        subs = connected_subsets(
            literals, 2, min(opts.red_subbody_max, len(literals))
        )
        seen = set()
        out = []
        for sub in subs:
            key = variant_key(sub)
            if key not in seen:
                seen.add(key)
                out.append((len(sub), key))
        return out

    classes: dict = {}  # key -> [size, set of raw clause indices, [sc vars]]
    for cl in sorted(space.foldings):
        raw = space.foldings[cl][0][0]
        for size, key in subbody_keys(raw.literals):
            entry = classes.setdefault(key, [size, set(), []])
            entry[1].add(cl)
    for cand in space.candidates:
        svar = m.sc_vars[cand.id]
        for size, key in subbody_keys(cand.clause.body):
            entry = classes.setdefault(key, [size, set(), []])
            entry[2].append(svar)
    groups = [
        (size, key, len(raw_cls), members)
        for key, (size, raw_cls, members) in classes.items()
        if len(raw_cls) + len(members) >= 2
    ]
    groups.sort(key=lambda g: (-g[0], g[1]))
    for gid, (size, key, base, members) in enumerate(groups[: opts.red_group_cap]):
        rvar = new_var(("RED", gid))
        m.red_vars[gid] = rvar
        m.red_members[rvar] = tuple(members)
        m.red_base[rvar] = base
        m.objective[rvar] = 1
        k = base + len(members)
        # r forced when two members occur: (k-1)*r - sum(sc) >= base - 1
        add([(k - 1, rvar)] + [(-1, f) for f in members], base - 1, "red-force")
        # r honest, only when two members occur: sum(sc) - 2r >= -base
        add([(1, f) for f in members] + [(-2, rvar)], -base, "red-honest")


def decode(
    model: CopModel,
    a: Assignment,
    space: LevelledSearchSpace,
    unfolded: UnfoldedProgram,
) -> Program:
    """Selected foldings (one per clause) plus selected candidates' clauses."""
    if a.status == "infeasible":
        raise ModelError("cannot decode an infeasible assignment")
    if not check_assignment(model, a.values):
        raise ModelError("assignment violates the model constraints (solver bug)")
    clauses = []
    for cl in sorted(space.foldings):
        chosen = None
        for pvar, _, lvl, n in model.clause_picks[cl]:
            if a.values[pvar]:
                chosen = space.foldings[cl][lvl][n]
                break
        if chosen is None:
            raise ModelError(f"no folding picked for clause {cl}")
        clauses.append(Clause(unfolded.clauses[cl].head, chosen.literals))
    selected = [
        space.by_id(cid) for cid, v in sorted(model.sc_vars.items()) if a.values[v]
    ]
    selected.sort(key=lambda c: (c.level, c.id))
    registry = unfolded.registry.copy()
    for cand in selected:
        registry.declare(cand.pred, cand.clause.head.arity, "support")
        clauses.append(cand.clause)
    return Program(tuple(clauses), registry)


def render_model(model: CopModel) -> str:
    """Line-oriented pseudo-Boolean dump (OPB-style) for external solvers."""
    lines = []
    obj = " ".join(
        f"+{w} x{v + 1}" for v, w in sorted(model.objective.items()) if w
    )
    lines.append(f"min: {obj} ;")
    for c in model.constraints:
        terms = " ".join(f"{coef:+d} x{v + 1}" for coef, v in c.terms)
        lines.append(f"{terms} >= {c.rhs} ;")
    return "\n".join(lines) + "\n"
