"""Terms, atoms, clauses, programs and a parser/printer for definite
logic programs.

Variables start with an uppercase letter or underscore; everything else
is a constant or functor. Bodies are stored in order but compared as
multisets up to variable renaming (variant equality).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional


class LogicError(Exception):
    pass


class ParseError(LogicError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class ArityError(LogicError):
    pass


ROLES = ("primitive", "task", "support")


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise LogicError(f"compound term {self.functor} needs arguments")

    def __repr__(self):
        return f"{self.functor}({','.join(map(repr, self.args))})"


Term = Var | Const | Compound


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Compound):
        for a in t.args:
            yield from term_vars(a)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Var]:
        for a in self.args:
            yield from term_vars(a)

    def var_set(self) -> frozenset:
        return frozenset(self.variables())

    def __repr__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple = ()

    @property
    def size(self) -> int:
        return len(self.body) + 1

    def variables(self) -> Iterator[Var]:
        yield from self.head.variables()
        for lit in self.body:
            yield from lit.variables()

    def __repr__(self):
        return render_clause(self)


@dataclass
class PredicateRegistry:
    """Predicate symbol -> (arity, role). Roles: primitive, task, support."""

    entries: dict = field(default_factory=dict)

    def declare(self, pred: str, arity: int, role: str, allow_redeclare: bool = False):
        if role not in ROLES:
            raise LogicError(f"unknown role {role!r} for {pred}/{arity}")
        if pred in self.entries:
            old_arity, old_role = self.entries[pred]
            if old_arity != arity:
                raise ArityError(
                    f"{pred} declared with arity {arity} but already has arity {old_arity}"
                )
            if old_role != role and not allow_redeclare:
                raise LogicError(
                    f"{pred}/{arity} declared {role} but already declared {old_role}"
                )
            return
        self.entries[pred] = (arity, role)

    def role(self, pred: str) -> Optional[str]:
        e = self.entries.get(pred)
        return e[1] if e else None

    def arity(self, pred: str) -> Optional[int]:
        e = self.entries.get(pred)
        return e[0] if e else None

    def by_role(self, role: str) -> list:
        return [p for p, (_, r) in self.entries.items() if r == role]

    def copy(self) -> "PredicateRegistry":
        return PredicateRegistry(dict(self.entries))


@dataclass
class Program:
    clauses: tuple
    registry: PredicateRegistry

    @classmethod
    def empty(cls) -> "Program":
        return cls((), PredicateRegistry())

    @property
    def size(self) -> int:
        return sum(c.size for c in self.clauses)

    def predicates(self) -> list:
        """Distinct predicate symbols occurring in the clauses, in order."""
        seen = {}
        for c in self.clauses:
            seen.setdefault(c.head.pred, None)
            for lit in c.body:
                seen.setdefault(lit.pred, None)
        return list(seen)

    def clauses_for(self, pred: str) -> list:
        return [c for c in self.clauses if c.head.pred == pred]


# ---------------------------------------------------------------------------
# Parsing

_SYMS = {":-", "(", ")", ",", ".", "/"}


def _tokenize(text: str):
    toks = []
    line, col = 1, 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 0
            i += 1
            continue
        col += 1
        if ch in " \t\r":
            i += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith(":-", i):
            toks.append((":-", line, col))
            i += 2
            col += 1
            continue
        if ch in "().,/#":
            toks.append((ch, line, col))
            i += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append((text[i:j], line, col))
            col += j - i - 1
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    return toks


def is_variable_name(name: str) -> bool:
    return name[0].isupper() or name[0] == "_"


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else ("", 1, 1)
            raise ParseError("unexpected end of input", last[1], last[2])
        self.pos += 1
        return t

    def expect(self, sym: str):
        tok, line, col = self.next()
        if tok != sym:
            raise ParseError(f"expected {sym!r}, found {tok!r}", line, col)

    def parse_term(self) -> Term:
        tok, line, col = self.next()
        if tok in _SYMS or tok == "#":
            raise ParseError(f"expected a term, found {tok!r}", line, col)
        if self.peek() and self.peek()[0] == "(":
            if is_variable_name(tok):
                raise ParseError(f"variable {tok} cannot take arguments", line, col)
            self.expect("(")
            args = [self.parse_term()]
            while self.peek() and self.peek()[0] == ",":
                self.next()
                args.append(self.parse_term())
            self.expect(")")
            return Compound(tok, tuple(args))
        if is_variable_name(tok):
            return Var(tok)
        return Const(tok)

    def parse_atom(self) -> Atom:
        tok, line, col = self.next()
        if tok in _SYMS or tok == "#":
            raise ParseError(f"expected a predicate, found {tok!r}", line, col)
        if is_variable_name(tok):
            raise ParseError(f"predicate name {tok} must not be a variable", line, col)
        args = ()
        if self.peek() and self.peek()[0] == "(":
            self.expect("(")
            terms = [self.parse_term()]
            while self.peek() and self.peek()[0] == ",":
                self.next()
                terms.append(self.parse_term())
            self.expect(")")
            args = tuple(terms)
        return Atom(tok, args)

    def parse_directive(self):
        # already consumed '#'
        role_tok, line, col = self.next()
        if role_tok not in ROLES:
            raise ParseError(f"unknown directive #{role_tok}", line, col)
        name_tok, line, col = self.next()
        if is_variable_name(name_tok):
            raise ParseError("predicate name must not be a variable", line, col)
        self.expect("/")
        arity_tok, line, col = self.next()
        if not arity_tok.isdigit():
            raise ParseError(f"expected an arity, found {arity_tok!r}", line, col)
        self.expect(".")
        return role_tok, name_tok, int(arity_tok)


def parse_program(text: str) -> Program:
    """Parse knowledge-base source into a Program.

    Directives (`#primitive p/2.`, `#task t/1.`, `#support s/3.`) set
    predicate roles; predicates defined by clause heads but never
    declared default to role support.
    """
    parser = _Parser(text)
    registry = PredicateRegistry()
    clauses = []
    declared_somewhere = set()
    while parser.peek() is not None:
        tok, line, col = parser.peek()
        if tok == "#":
            parser.next()
            role, name, arity = parser.parse_directive()
            if name in declared_somewhere:
                raise ParseError(f"duplicate role declaration for {name}", line, col)
            declared_somewhere.add(name)
            registry.declare(name, arity, role)
            continue
        head = parser.parse_atom()
        body = []
        tok2 = parser.next()
        if tok2[0] == ":-":
            body.append(parser.parse_atom())
            while True:
                t = parser.next()
                if t[0] == ".":
                    break
                if t[0] != ",":
                    raise ParseError(f"expected ',' or '.', found {t[0]!r}", t[1], t[2])
                body.append(parser.parse_atom())
        elif tok2[0] != ".":
            raise ParseError(f"expected ':-' or '.', found {tok2[0]!r}", tok2[1], tok2[2])
        clauses.append(Clause(head, tuple(body)))

    # arity consistency and registry completion
    arities: dict = {}

    def note(atom: Atom):
        old = arities.get(atom.pred)
        if old is not None and old != atom.arity:
            raise ArityError(
                f"{atom.pred} used with arity {atom.arity} but also with arity {old}"
            )
        arities[atom.pred] = atom.arity

    for c in clauses:
        note(c.head)
        for lit in c.body:
            note(lit)
    for pred, arity in arities.items():
        declared = registry.arity(pred)
        if declared is not None and declared != arity:
            raise ArityError(
                f"{pred} declared with arity {declared} but used with arity {arity}"
            )
    defined = {c.head.pred for c in clauses}
    for pred, arity in arities.items():
        if registry.role(pred) is None:
            if pred in defined:
                registry.declare(pred, arity, "support")
            else:
                raise LogicError(
                    f"predicate {pred}/{arity} is used but neither declared nor defined"
                )
    return Program(tuple(clauses), registry)


# ---------------------------------------------------------------------------
# Printing

def _canonical_names() -> Iterator[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    for ch in letters:
        yield ch
    for k in itertools.count(1):
        for ch in letters:
            yield f"{ch}{k}"


def canonical_renaming(clause: Clause) -> dict:
    """Variable -> fresh Var named A, B, C, ... by first occurrence."""
    names = _canonical_names()
    mapping = {}
    for v in clause.variables():
        if v not in mapping:
            mapping[v] = Var(next(names))
    return mapping


def rename_term(t: Term, mapping: dict) -> Term:
    if isinstance(t, Var):
        return mapping.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(rename_term(a, mapping) for a in t.args))
    return t


def rename_atom(a: Atom, mapping: dict) -> Atom:
    return Atom(a.pred, tuple(rename_term(t, mapping) for t in a.args))


def rename_clause(c: Clause, mapping: dict) -> Clause:
    return Clause(rename_atom(c.head, mapping), tuple(rename_atom(l, mapping) for l in c.body))


def canonicalize_clause(c: Clause) -> Clause:
    return rename_clause(c, canonical_renaming(c))


def render_atom(a: Atom) -> str:
    return repr(a)


def render_clause(c: Clause) -> str:
    head = render_atom(c.head)
    if not c.body:
        return f"{head}."
    return f"{head} :- {', '.join(render_atom(l) for l in c.body)}."


def render_program(p: Program) -> str:
    """Deterministic textual form; parse(render(p)) is variant-equal to p."""
    lines = []
    for pred, (arity, role) in p.registry.entries.items():
        lines.append(f"#{role} {pred}/{arity}.")
    for c in p.clauses:
        lines.append(render_clause(canonicalize_clause(c)))
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Variant equality

def _match_terms(t1: Term, t2: Term, fwd: dict, bwd: dict) -> bool:
    if isinstance(t1, Var) and isinstance(t2, Var):
        if t1 in fwd:
            return fwd[t1] == t2
        if t2 in bwd:
            return False
        fwd[t1] = t2
        bwd[t2] = t1
        return True
    if isinstance(t1, Const) and isinstance(t2, Const):
        return t1.name == t2.name
    if isinstance(t1, Compound) and isinstance(t2, Compound):
        if t1.functor != t2.functor or len(t1.args) != len(t2.args):
            return False
        return all(_match_terms(a, b, fwd, bwd) for a, b in zip(t1.args, t2.args))
    return False


def _match_atoms(a1: Atom, a2: Atom, fwd: dict, bwd: dict) -> bool:
    if a1.pred != a2.pred or a1.arity != a2.arity:
        return False
    return all(_match_terms(t1, t2, fwd, bwd) for t1, t2 in zip(a1.args, a2.args))


def _atom_skeleton(a: Atom):
    def shape(t: Term):
        if isinstance(t, Var):
            return "V"
        if isinstance(t, Const):
            return ("c", t.name)
        return ("f", t.functor, tuple(shape(x) for x in t.args))

    return (a.pred, tuple(shape(t) for t in a.args))


def variant_equal(c1: Clause, c2: Clause) -> bool:
    """True iff some variable bijection maps c1 onto c2, treating bodies
    as multisets of literals."""
    if len(c1.body) != len(c2.body):
        return False
    if _atom_skeleton(c1.head) != _atom_skeleton(c2.head):
        return False
    sk1 = sorted(map(_atom_skeleton, c1.body))
    sk2 = sorted(map(_atom_skeleton, c2.body))
    if sk1 != sk2:
        return False

    body2 = list(c2.body)

    def extend(fwd, bwd, remaining, used):
        if not remaining:
            return True
        lit = remaining[0]
        for idx, other in enumerate(body2):
            if idx in used:
                continue
            fwd2, bwd2 = dict(fwd), dict(bwd)
            if _match_atoms(lit, other, fwd2, bwd2):
                if extend(fwd2, bwd2, remaining[1:], used | {idx}):
                    return True
        return False

    fwd: dict = {}
    bwd: dict = {}
    if not _match_atoms(c1.head, c2.head, fwd, bwd):
        return False
    return extend(fwd, bwd, list(c1.body), frozenset())


def variant_key(body: Iterable[Atom], head: Optional[Atom] = None) -> str:
    """Exact canonical key for variant equality of small bodies.

    Minimises the canonical rendering over all literal orderings, so two
    bodies get the same key iff they are variant-equal (as multisets).
    Exponential in the body length; intended for candidate-sized bodies.
    """
    lits = tuple(body)
    if len(lits) > 6:
        raise LogicError(f"variant_key limited to 6 literals, got {len(lits)}")
    best = None
    for perm in itertools.permutations(lits):
        clause = Clause(head if head is not None else Atom("k"), perm)
        s = render_clause(canonicalize_clause(clause))
        if best is None or s < best:
            best = s
    return best


# ---------------------------------------------------------------------------
# Connectivity

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def n_components(self) -> int:
        return len({self.find(i) for i in range(len(self.parent))})


def _literals_connected(lits: list) -> bool:
    if len(lits) <= 1:
        return True
    uf = _UnionFind(len(lits))
    var_owner: dict = {}
    for i, lit in enumerate(lits):
        for v in lit.var_set():
            if v in var_owner:
                uf.union(i, var_owner[v])
            else:
                var_owner[v] = i
    return uf.n_components() == 1


def connected(c: Clause) -> bool:
    """True iff the variable-sharing graph over the head plus all body
    literals forms a single component."""
    if not c.body:
        return True
    return _literals_connected([c.head, *c.body])


POWER_SET_CAP = 12


def connected_power_set(c: Clause, max_size: Optional[int] = None) -> list:
    """All nonempty connected subsets of c's body literals, as tuples in
    original body order. Connectivity is over body literals only.

    Bodies longer than POWER_SET_CAP require max_size (candidate bodies
    never need more than the configured size window anyway).
    """
    return connected_subsets(c.body, 1, max_size)


def connected_subsets(body: tuple, min_size: int, max_size: Optional[int]) -> list:
    n = len(body)
    if max_size is None:
        if n > POWER_SET_CAP:
            raise LogicError(
                f"body of {n} literals exceeds the full power-set cap "
                f"({POWER_SET_CAP}); pass a subset-size bound instead"
            )
        max_size = n
    out = []
    for size in range(max(1, min_size), min(n, max_size) + 1):
        for idxs in itertools.combinations(range(n), size):
            subset = [body[i] for i in idxs]
            if _literals_connected(subset):
                out.append(tuple(subset))
    return out


def first_occurrence_vars(lits: Iterable[Atom]) -> list:
    seen = {}
    for lit in lits:
        for v in lit.variables():
            seen.setdefault(v, None)
    return list(seen)
