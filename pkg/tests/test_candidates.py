import pytest

from refold.candidates import (
    build_search_space,
    extract_candidates,
    has_singleton_variable,
    is_profitable,
    make_candidate_clause,
    prune_singletons,
    prune_unprofitable,
)
from refold.logic import Atom, Clause, Const, Var, parse_program, variant_equal
from refold.transform import find_body_matches, unfold


def body_of(src: str) -> tuple:
    return parse_program(src).clauses[0].body


SHARED_CHAIN = (
    "#primitive p/2.\n#primitive q/2.\n#primitive r/2.\n#primitive z/1.\n"
    "#task t1/2.\n#task t2/2.\n"
    "t1(A,D) :- p(A,B), q(B,C), r(C,D).\n"
    "t2(A,D) :- p(A,B), q(B,C), r(C,D), z(D)."
)


class TestExtraction:
    def test_shared_chain_counted_once_with_usage_two(self):
        prog = parse_program(SHARED_CHAIN)
        cands = extract_candidates(list(prog.clauses), i=3, j=3, level=1)
        chains = [c for c in cands if c.body_size == 3 and not any(
            l.pred == "z" for l in c.clause.body)]
        assert len(chains) == 1
        assert chains[0].usage == 2

    def test_head_vars_in_first_occurrence_order(self):
        body = body_of("#primitive p/2.\n#primitive q/2.\nh(X) :- q(B,C), p(A,B).")
        clause = make_candidate_clause(body, "inv_1_0")
        assert clause.head.args == (Var("B"), Var("C"), Var("A"))

    def test_no_variant_equal_survivors(self):
        prog = parse_program(
            "#primitive p/2.\n#task t/2.\n"
            "t(A,C) :- p(A,B), p(B,C).\n"
            "t(X,Z) :- p(X,Y), p(Y,Z)."
        )
        cands = extract_candidates(list(prog.clauses), i=2, j=2, level=1)
        for a in cands:
            for b in cands:
                if a.id != b.id:
                    assert not variant_equal(a.clause, b.clause)

    def test_disconnected_subsets_excluded(self):
        prog = parse_program(
            "#primitive p/2.\n#primitive q/2.\n#task t/4.\n"
            "t(A,B,C,D) :- p(A,B), q(C,D)."
        )
        cands = extract_candidates(list(prog.clauses), i=2, j=3, level=1)
        assert cands == []

    def test_invalid_size_window(self):
        with pytest.raises(ValueError):
            extract_candidates([], i=0, j=3, level=1)
        with pytest.raises(ValueError):
            extract_candidates([], i=3, j=2, level=1)

    def test_ids_are_contiguous_from_start(self):
        prog = parse_program(SHARED_CHAIN)
        cands = extract_candidates(list(prog.clauses), i=2, j=3, level=1, id_start=7)
        assert [c.id for c in cands] == list(range(7, 7 + len(cands)))


class TestPruning:
    def test_hidden_tail_variable_is_singleton(self):
        # a column-builder whose final state variable is dropped from the head
        body = body_of(
            "#primitive place/4.\nh(X) :- place(b,X,E,E1), place(b,X,E1,E2)."
        )
        clause = Clause(Atom("sup", (Var("X"), Var("E"))), body)
        assert has_singleton_variable(clause)

    def test_full_head_has_no_singletons(self):
        body = body_of(
            "#primitive place/4.\nh(X) :- place(b,X,E,E1), place(b,X,E1,E2)."
        )
        assert not has_singleton_variable(make_candidate_clause(body, "inv"))

    def test_constant_only_literal_counts_no_variables(self):
        clause = Clause(Atom("sup", ()), (Atom("p", (Const("a"),)),))
        assert not has_singleton_variable(clause)

    def test_profitability_threshold(self):
        # size 3 (2-literal body): saves usage*(size-1), costs usage + size
        assert is_profitable(3, 5)
        assert is_profitable(3, 4)
        assert not is_profitable(3, 3)
        assert not is_profitable(3, 2)
        assert not is_profitable(3, 0)
        # a 1-literal body can never pay for itself
        for usage in range(0, 50):
            assert not is_profitable(2, usage)
        # size 4, usage 2: 2*3=6 > 2+4=6 is false
        assert not is_profitable(4, 2)
        assert is_profitable(4, 3)

    def test_prune_functions_filter(self):
        prog = parse_program(SHARED_CHAIN)
        cands = extract_candidates(list(prog.clauses), i=2, j=3, level=1)
        assert prune_singletons(cands) == cands  # full heads: nothing to drop
        kept = prune_unprofitable(cands)
        assert all(is_profitable(c.size, c.usage) for c in kept)
        assert len(kept) < len(cands)


class TestSearchSpace:
    def test_reconstruction_invariant(self):
        # every folding option, re-expanded through its candidates'
        # definitions, is a variant of some option one level below
        prog = parse_program(
            "#primitive p/2.\n#primitive q/2.\n#primitive r/2.\n"
            "#task t1/2.\n#task t2/2.\n#task t3/2.\n"
            "t1(A,D) :- p(A,B), q(B,C), r(C,D).\n"
            "t2(A,D) :- p(A,B), q(B,C), r(C,D).\n"
            "t3(A,D) :- p(A,B), q(B,C), r(C,D)."
        )
        u = unfold(prog)
        space = build_search_space(u, i=2, j=3)
        by_pred = {c.pred: c.clause for c in space.candidates}
        for idx, per_level in space.foldings.items():
            for level, opts in per_level.items():
                if level == 0:
                    continue
                for opt in opts:
                    expanded = _expand(opt.literals, by_pred)
                    bases = per_level[level - 1]
                    assert any(
                        variant_equal(
                            Clause(Atom("h"), expanded), Clause(Atom("h"), b.literals)
                        )
                        for b in bases
                    )

    def test_required_ids_match_literal_predicates(self):
        prog = parse_program(SHARED_CHAIN)
        space = build_search_space(unfold(prog), i=2, j=3)
        id_of = {c.pred: c.id for c in space.candidates}
        for per_level in space.foldings.values():
            for opts in per_level.values():
                for opt in opts:
                    expected = frozenset(
                        id_of[l.pred] for l in opt.literals if l.pred in id_of
                    )
                    assert opt.required == expected

    def test_shared_chain_space(self):
        # three copies: a 3-literal body at usage 3 saves 3*3=9 > 3+4=7
        prog = parse_program(
            "#primitive p/2.\n#primitive q/2.\n#primitive r/2.\n"
            "#task t1/2.\n#task t2/2.\n#task t3/2.\n"
            "t1(A,D) :- p(A,B), q(B,C), r(C,D).\n"
            "t2(A,D) :- p(A,B), q(B,C), r(C,D).\n"
            "t3(A,D) :- p(A,B), q(B,C), r(C,D)."
        )
        space = build_search_space(unfold(prog), i=2, j=3)
        assert all(c.usage >= 2 for c in space.candidates)
        assert all(is_profitable(c.size, c.usage) for c in space.candidates)
        # the full shared 3-chain survives and folds both clauses
        chains = [
            c for c in space.candidates
            if c.body_size == 3 and {l.pred for l in c.clause.body} == {"p", "q", "r"}
        ]
        assert len(chains) == 1
        cid = chains[0].id
        for idx in space.foldings:
            assert any(
                cid in opt.required for opt in space.foldings[idx].get(1, [])
            )

    def test_level_two_composition(self):
        # four copies of a 4-literal chain: level 1 invents 2- and 3-chains,
        # level 2 can compose two invented predicates
        lines = ["#primitive p/2."] + [f"#task t{k}/2." for k in range(4)]
        lines += [
            f"t{k}(A,E) :- p(A,B), p(B,C), p(C,D), p(D,E)." for k in range(4)
        ]
        space = build_search_space(unfold(parse_program("\n".join(lines))), i=2, j=3)
        assert space.max_level >= 2
        lvl2 = [c for c in space.candidates if c.level == 2]
        assert lvl2
        lvl1_preds = {c.pred for c in space.candidates if c.level == 1}
        for c in lvl2:
            assert {l.pred for l in c.clause.body} <= lvl1_preds
            assert c.dependencies
            closure = space.candidate_closure(frozenset([c.id]))
            assert c.dependencies <= closure

    def test_no_candidates_stops_cleanly(self):
        prog = parse_program("#primitive p/2.\n#task t/2.\nt(A,B) :- p(A,B).")
        space = build_search_space(unfold(prog), i=2, j=3)
        assert space.candidates == []
        assert space.max_level == 0

    def test_prune_disabled_keeps_unprofitable(self):
        prog = parse_program(SHARED_CHAIN)
        pruned = build_search_space(unfold(prog), i=2, j=3, max_levels=1)
        raw = build_search_space(unfold(prog), i=2, j=3, max_levels=1, prune=False)
        assert len(raw.candidates) > len(pruned.candidates)

    def test_folding_cap_truncates(self):
        # many overlapping matches explode the disjoint-subset count
        body = ", ".join(f"p(X{k},X{k+1})" for k in range(10))
        lines = ["#primitive p/2.", "#task t1/2.", "#task t2/2."]
        lines.append(f"t1(X0,X10) :- {body}.")
        lines.append(f"t2(X0,X10) :- {body}.")
        space = build_search_space(
            unfold(parse_program("\n".join(lines))), i=2, j=3,
            max_levels=1, folding_cap=10, prune=False,
        )
        for per_level in space.foldings.values():
            for opts in per_level.values():
                assert len(opts) <= 10
        assert any(st.truncated_clauses for st in space.stats)


def _expand(literals: tuple, by_pred: dict) -> tuple:
    out = []
    for lit in literals:
        definition = by_pred.get(lit.pred)
        if definition is None:
            out.append(lit)
            continue
        matches = find_body_matches((lit,), (definition.head,), definition.head)
        # instantiate the definition body against this literal
        from refold.transform import rename_apart, subst_atom, unify_atoms

        d = rename_apart(definition)
        s = unify_atoms(d.head, lit, {})
        assert s is not None
        out.extend(_expand(tuple(subst_atom(b, s) for b in d.body), by_pred))
    return tuple(out)
