import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refold.logic import parse_program
from refold.pipeline import (
    RefactorConfig,
    hypothesis_space_size,
    refactor,
    remove_redundancy_baseline,
)
from refold.solver import SolverBudget
from refold.transform import syntactic_equiv

from tests.test_copmodel import chain_program


class TestRefactor:
    def test_shared_chain_shrinks(self):
        prog = chain_program(5)
        out, report = refactor(prog, RefactorConfig(budget=SolverBudget(wall_time=10)))
        assert syntactic_equiv(prog, out)
        assert out.size < prog.size
        assert report.equivalence_verified
        assert report.solver_status == "optimal"
        assert report.refactored_literals == out.size
        assert report.invented_predicates >= 1
        assert not report.no_gain_fallback

    def test_no_gain_returns_input(self):
        prog = parse_program("#primitive p/2.\n#task t/2.\nt(A,B) :- p(A,B).")
        out, report = refactor(prog)
        assert out is prog
        assert report.equivalence_verified
        assert report.refactored_literals == prog.size

    def test_empty_program(self):
        prog = parse_program("#primitive p/2.\n#task t/2.")
        out, report = refactor(prog)
        assert out.clauses == ()
        assert report.equivalence_verified

    def test_worked_example_compresses_on_repetition(
        self, pillar_program
    ):
        # three towers sharing the vertical 3-stack make inventing it pay off
        src = (
            "#primitive place/4.\n#primitive right/2.\n#primitive left/2.\n"
            "#task pillar/4.\n#task wall/3.\n#task post/3.\n"
            "pillar(X,Y,E,E5) :- place(hor,X,E,E1), right(X,Z), place(b,Z,E1,E2), "
            "place(b,Z,E2,E3), place(b,Z,E3,E4), left(Z,Y), place(hor,X,E4,E5).\n"
            "wall(X,E,E3) :- place(b,X,E,E1), place(b,X,E1,E2), place(b,X,E2,E3).\n"
            "post(X,E,E4) :- place(b,X,E,E1), place(b,X,E1,E2), place(b,X,E2,E3), "
            "place(hor,X,E3,E4)."
        )
        prog = parse_program(src)
        out, report = refactor(prog, RefactorConfig(budget=SolverBudget(wall_time=20)))
        assert syntactic_equiv(prog, out)
        assert out.size < prog.size
        invented = set(out.registry.by_role("support")) - set(prog.registry.entries)
        assert invented

    def test_report_counts_consistent(self):
        prog = chain_program(4)
        out, report = refactor(prog)
        assert report.original_literals == prog.size
        assert report.unfolded_literals == prog.size  # already primitive-only
        assert report.refactored_literals == out.size
        assert report.candidate_count > 0
        assert report.hyp_log_size_after == pytest.approx(
            hypothesis_space_size(report.refactored_predicates, 3, 5)
        )

    def test_records_and_text_render(self):
        prog = chain_program(3)
        _, report = refactor(prog)
        records = dict(report.to_records())
        assert records["original_literals"] == prog.size
        text = report.to_text()
        assert "original_literals" in text and "solver_status" in text


class TestBaseline:
    def test_equivalence_preserved(self):
        prog = chain_program(5)
        out = remove_redundancy_baseline(prog)
        assert syntactic_equiv(prog, out)
        assert out.size < prog.size

    def test_no_shared_structure_is_identity_sized(self):
        prog = parse_program(
            "#primitive p/2.\n#primitive q/2.\n#task t/2.\nt(A,B) :- p(A,B), q(B,A)."
        )
        out = remove_redundancy_baseline(prog)
        assert out.size == prog.size

    def test_optimal_refactoring_never_worse(self):
        for copies in (3, 4, 5, 6):
            prog = chain_program(copies)
            base = remove_redundancy_baseline(prog)
            opt, _ = refactor(prog, RefactorConfig(budget=SolverBudget(wall_time=10)))
            assert opt.size <= base.size


class TestHypothesisSpaceSize:
    def binomial_log(self, n: int, m: int) -> float:
        return math.log(math.comb(n, m))

    @pytest.mark.parametrize(
        "p,l,m", [(2, 2, 1), (3, 2, 4), (4, 3, 5), (10, 3, 5), (5, 1, 3)]
    )
    def test_matches_exact_binomial(self, p, l, m):
        assert hypothesis_space_size(p, l, m) == pytest.approx(
            self.binomial_log(p**l, m), rel=1e-12
        )

    def test_more_than_available_is_empty(self):
        assert hypothesis_space_size(2, 1, 3) == float("-inf")

    def test_invalid_arguments(self):
        for bad in [(0, 2, 2), (2, 0, 2), (2, 2, 0)]:
            with pytest.raises(ValueError):
                hypothesis_space_size(*bad)

    @settings(max_examples=60, deadline=None)
    @given(
        p=st.integers(2, 12), l=st.integers(1, 4), m=st.integers(1, 8)
    )
    def test_monotone_in_predicate_count(self, p, l, m):
        lo = hypothesis_space_size(p, l, m)
        hi = hypothesis_space_size(p + 1, l, m)
        if lo != float("-inf"):
            assert hi >= lo
