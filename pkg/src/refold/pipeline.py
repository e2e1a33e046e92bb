"""End-to-end refactoring: parse -> unfold -> search space -> encode ->
solve -> decode -> verify -> emit, with a full report."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .logic import Program, connected_subsets, variant_key
from .transform import (
    apply_match_set,
    find_body_matches,
    syntactic_equiv,
    unfold,
)
from .candidates import build_search_space, make_candidate_clause
from .copmodel import EncodeOptions, decode, encode, render_model
from .solver import SolveTrace, SolverBudget, solve


class RefactorError(Exception):
    pass


class VerificationError(RefactorError):
    pass


@dataclass
class RefactorConfig:
    min_body: int = 2
    max_body: int = 3
    max_levels: Optional[int] = None
    budget: SolverBudget = field(default_factory=SolverBudget)
    enforce_predicate_cap: bool = False
    fallback_on_no_gain: bool = True
    folding_cap: int = 500
    red_group_cap: int = 2000
    model_dump_path: Optional[str] = None
    # hypothesis-space statistic parameters (body length, clause count)
    hyp_body_len: int = 3
    hyp_clauses: int = 5

    def __post_init__(self):
        if not 1 <= self.min_body <= self.max_body:
            raise ValueError("need 1 <= min_body <= max_body")


@dataclass
class RefactorReport:
    original_literals: int = 0
    unfolded_literals: int = 0
    refactored_literals: int = 0
    original_predicates: int = 0
    refactored_predicates: int = 0
    invented_predicates: int = 0
    candidate_count: int = 0
    max_level: int = 0
    level_stats: list = field(default_factory=list)
    stop_reason: str = ""
    solver_status: str = ""
    objective_value: int = 0
    trace: Optional[SolveTrace] = None
    equivalence_verified: bool = False
    no_gain_fallback: bool = False
    hyp_log_size_before: float = 0.0
    hyp_log_size_after: float = 0.0

    def to_text(self) -> str:
        lines = ["refactoring report", "=" * 18]
        for key, val in self.to_records():
            lines.append(f"{key}: {val}")
        for st in self.level_stats:
            lines.append(
                f"level {st.level}: extracted={st.extracted} "
                f"after_singleton={st.after_singleton_prune} "
                f"after_usage={st.after_usage_prune} "
                f"foldings={st.folding_options} truncated={st.truncated_clauses}"
            )
        if self.trace is not None:
            lines.append("incumbents (elapsed_ms objective):")
            for t, obj in self.trace.history:
                lines.append(f"  {int(t * 1000)} {obj}")
        return "\n".join(lines) + "\n"

    def to_records(self) -> list:
        return [
            ("original_literals", self.original_literals),
            ("unfolded_literals", self.unfolded_literals),
            ("refactored_literals", self.refactored_literals),
            ("original_predicates", self.original_predicates),
            ("refactored_predicates", self.refactored_predicates),
            ("invented_predicates", self.invented_predicates),
            ("candidate_count", self.candidate_count),
            ("max_level", self.max_level),
            ("stop_reason", self.stop_reason),
            ("solver_status", self.solver_status),
            ("objective_value", self.objective_value),
            ("equivalence_verified", self.equivalence_verified),
            ("no_gain_fallback", self.no_gain_fallback),
            ("hyp_log_size_before", f"{self.hyp_log_size_before:.4f}"),
            ("hyp_log_size_after", f"{self.hyp_log_size_after:.4f}"),
        ]


def hypothesis_space_size(p_count: int, l: int, m: int) -> float:
    """Natural log of binomial(p_count**l, m), the enumeration-space bound
    for programs over p_count predicates with bodies up to l literals and
    up to m clauses."""
    if p_count < 1 or l < 1 or m < 1:
        raise ValueError("all arguments must be >= 1")
    n = p_count**l
    if m > n:
        return float("-inf")
    return sum(math.log(n - k) - math.log(k + 1) for k in range(m))


def refactor(p: Program, cfg: Optional[RefactorConfig] = None):
    """Returns (refactored Program, RefactorReport). The output is always
    machine-verified to be syntactically equivalent to the input."""
    cfg = cfg or RefactorConfig()
    report = RefactorReport()
    report.original_literals = p.size
    report.original_predicates = len(p.predicates())
    report.hyp_log_size_before = (
        hypothesis_space_size(max(1, report.original_predicates), cfg.hyp_body_len, cfg.hyp_clauses)
        if report.original_predicates
        else 0.0
    )
    if not p.clauses:
        report.refactored_literals = 0
        report.equivalence_verified = True
        report.hyp_log_size_after = report.hyp_log_size_before
        return p, report

    u = unfold(p)
    report.unfolded_literals = u.size
    space = build_search_space(
        u, cfg.min_body, cfg.max_body, cfg.max_levels, folding_cap=cfg.folding_cap
    )
    report.candidate_count = len(space.candidates)
    report.max_level = space.max_level
    report.level_stats = space.stats
    report.stop_reason = space.stop_reason

    opts = EncodeOptions(
        enforce_predicate_cap=cfg.enforce_predicate_cap,
        original_predicate_count=report.original_predicates,
        red_group_cap=cfg.red_group_cap,
    )
    model = encode(space, u, opts)
    if cfg.model_dump_path:
        with open(cfg.model_dump_path, "w", encoding="utf-8") as fh:
            fh.write(render_model(model))
    assignment, trace = solve(model, cfg.budget)
    report.solver_status = assignment.status
    report.objective_value = assignment.objective_value
    report.trace = trace

    out = decode(model, assignment, space, u)
    if not syntactic_equiv(p, out):
        raise VerificationError(
            "decoded program is not syntactically equivalent to the input"
        )
    report.equivalence_verified = True

    if out.size >= p.size and cfg.fallback_on_no_gain:
        report.no_gain_fallback = True
        report.refactored_literals = p.size
        report.refactored_predicates = report.original_predicates
        report.hyp_log_size_after = report.hyp_log_size_before
        return p, report

    report.refactored_literals = out.size
    report.refactored_predicates = len(out.predicates())
    report.invented_predicates = len(
        set(out.registry.by_role("support")) - set(p.registry.entries)
    )
    report.hyp_log_size_after = hypothesis_space_size(
        max(1, report.refactored_predicates), cfg.hyp_body_len, cfg.hyp_clauses
    )
    return out, report


# ---------------------------------------------------------------------------
# Greedy deduplication baseline

def _shared_subbody_classes(clauses: list, max_size: int) -> list:
    """Variant classes of connected sub-bodies with >= 2 disjoint
    occurrences program-wide. Returns (size, -occurrences, key, body)
    sorted for greedy folding."""
    classes: dict = {}
    for c in clauses:
        if len(c.body) < 2:
            continue
        for sub in connected_subsets(c.body, 2, min(max_size, len(c.body))):
            key = variant_key(sub)
            classes.setdefault(key, sub)
    ranked = []
    for key, sub in classes.items():
        occ = 0
        probe = make_candidate_clause(sub, "probe")
        for c in clauses:
            matches = find_body_matches(c.body, probe.body, probe.head)
            occ += _max_disjoint(matches)
        if occ >= 2:
            ranked.append((-len(sub), -occ, key, sub))
    ranked.sort()
    return ranked


def _max_disjoint(matches: list) -> int:
    best = 0

    def rec(start: int, used: frozenset, count: int):
        nonlocal best
        best = max(best, count)
        for i in range(start, len(matches)):
            idxs, _ = matches[i]
            if not idxs & used:
                rec(i + 1, used | idxs, count + 1)

    rec(0, frozenset(), 0)
    return best


def remove_redundancy_baseline(p: Program, max_subbody: int = 3) -> Program:
    """One support clause per repeated sub-body, greedily folded
    everywhere; no optimization."""
    u = unfold(p)
    clauses = list(u.clauses)
    registry = u.registry.copy()
    counter = 0
    while counter < 1000:
        ranked = _shared_subbody_classes(clauses, max_subbody)
        if not ranked:
            break
        _, _, _, sub = ranked[0]
        support = make_candidate_clause(sub, f"red_{counter}")
        counter += 1
        registry.declare(support.head.pred, support.head.arity, "support")
        new_clauses = []
        for c in clauses:
            matches = find_body_matches(c.body, support.body, support.head)
            chosen = _greedy_disjoint(matches)
            if chosen:
                new_clauses.append(apply_match_set(c, chosen))
            else:
                new_clauses.append(c)
        new_clauses.append(support)
        clauses = new_clauses
    return Program(tuple(clauses), registry)


def _greedy_disjoint(matches: list) -> list:
    chosen = []
    used: frozenset = frozenset()
    for idxs, head in sorted(matches, key=lambda m: sorted(m[0])):
        if not idxs & used:
            chosen.append((idxs, head))
            used |= idxs
    return chosen
