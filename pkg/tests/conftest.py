import pytest

from refold.logic import parse_program

PILLAR_SOURCE = """
#primitive place/4.
#primitive right/2.
#primitive left/2.
#task pillar/4.

pillar(X,Y,E,E5) :-
    place(hor,X,E,E1), right(X,Z), place(b,Z,E1,E2), place(b,Z,E2,E3),
    place(b,Z,E3,E4), left(Z,Y), place(hor,X,E4,E5).
"""

FOLDED_SOURCE = """
#primitive place/4.
#primitive right/2.
#primitive left/2.
#task pillar/4.

ver(X,E,E2) :- place(b,X,E,E0), place(b,X,E0,E1), place(b,X,E1,E2).
pillar(X,Y,E,E3) :-
    place(hor,X,E,E1), right(X,Z), ver(Z,E1,E2), left(Z,Y), place(hor,X,E2,E3).
"""


@pytest.fixture
def pillar_program():
    """The unfolded one-clause construction program."""
    return parse_program(PILLAR_SOURCE)


@pytest.fixture
def folded_program():
    """The same program written with the vertical-stack support clause."""
    return parse_program(FOLDED_SOURCE)
