"""Desk-scale synthesis benchmark: two executable domains (brick boards and
string edits), an iterative-deepening enumerative synthesizer with exact
node counting, and a lifelong loop that accumulates solved tasks as
background knowledge so refactored and unrefactored knowledge bases can be
compared under identical limits."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .logic import Atom, Clause, Program, Var

# ---------------------------------------------------------------------------
# Domain states and primitive semantics
#
# Every binary predicate is a partial state transformer (None = inapplicable)
# and every unary predicate is a test on the current state. Defined
# predicates execute by running their body literals in order, threading the
# state left to right; variable names are bookkeeping for the logic side and
# are ignored by the interpreter.


@dataclass(frozen=True)
class LegoWorld:
    """A row of brick stacks plus a cursor position."""

    heights: tuple
    cursor: int = 0

    def __post_init__(self):
        if not 0 <= self.cursor < len(self.heights):
            raise ValueError("cursor outside the board")

    @property
    def board_width(self) -> int:
        return len(self.heights)


def blank_board(width: int) -> LegoWorld:
    return LegoWorld(heights=(0,) * width, cursor=0)


def _lego_left(s: LegoWorld):
    return LegoWorld(s.heights, s.cursor - 1) if s.cursor > 0 else None


def _lego_right(s: LegoWorld):
    if s.cursor < s.board_width - 1:
        return LegoWorld(s.heights, s.cursor + 1)
    return None


def _lego_place(s: LegoWorld):
    h = list(s.heights)
    h[s.cursor] += 1
    return LegoWorld(tuple(h), s.cursor)


LEGO_TRANSFORMS = {
    "left": _lego_left,
    "right": _lego_right,
    "place_brick": _lego_place,
}

LEGO_TESTS = {
    "at_left": lambda s: s.cursor == 0,
    "at_right": lambda s: s.cursor == s.board_width - 1,
    "not_at_left": lambda s: s.cursor != 0,
    "not_at_right": lambda s: s.cursor != s.board_width - 1,
}


@dataclass(frozen=True)
class StringState:
    """One left-to-right pass over an input string: (input, read position,
    output buffer)."""

    text: str
    pos: int = 0
    out: str = ""


def _read(s: StringState) -> Optional[str]:
    return s.text[s.pos] if s.pos < len(s.text) else None


def _string_step(emit: Callable[[str], str]):
    def step(s: StringState):
        ch = _read(s)
        if ch is None:
            return None
        return StringState(s.text, s.pos + 1, s.out + emit(ch))

    return step


# `write` emits a fixed filler character without consuming input.
WRITE_CHAR = "."

STRING_TRANSFORMS = {
    "copy": _string_step(lambda ch: ch),
    "mk_uppercase": _string_step(str.upper),
    "mk_lowercase": _string_step(str.lower),
    "skip": _string_step(lambda ch: ""),
    "write": lambda s: StringState(s.text, s.pos, s.out + WRITE_CHAR),
}


def _string_test(check: Callable[[str], bool]):
    def test(s: StringState) -> bool:
        ch = _read(s)
        return ch is not None and check(ch)

    return test


STRING_TESTS = {
    "is_letter": _string_test(str.isalpha),
    "is_uppercase": _string_test(str.isupper),
    "is_space": _string_test(str.isspace),
    "is_number": _string_test(str.isdigit),
}


def lego_primitives() -> Program:
    """Primitive declarations for the brick-board domain."""
    p = Program.empty()
    for name in LEGO_TRANSFORMS:
        p.registry.declare(name, 2, "primitive")
    for name in LEGO_TESTS:
        p.registry.declare(name, 1, "primitive")
    return p


def string_primitives() -> Program:
    """Primitive declarations for the string-edit domain."""
    p = Program.empty()
    for name in STRING_TRANSFORMS:
        p.registry.declare(name, 2, "primitive")
    for name in STRING_TESTS:
        p.registry.declare(name, 1, "primitive")
    return p


_DOMAIN_TABLES = {
    "lego": (LEGO_TRANSFORMS, LEGO_TESTS),
    "string": (STRING_TRANSFORMS, STRING_TESTS),
}


# ---------------------------------------------------------------------------
# Tasks


@dataclass(frozen=True)
class SynthesisTask:
    name: str
    examples: tuple  # ((input state, output state), ...)
    kind: str  # "lego" | "string"

    def __post_init__(self):
        if not self.examples:
            raise ValueError("a task needs at least one example")
        if self.kind not in _DOMAIN_TABLES:
            raise ValueError(f"unknown task kind: {self.kind}")


def gen_lego_tasks(
    width: int,
    n: int,
    seed: int,
    max_height: int = 2,
    min_height: int = 0,
    prefix: str = "lego",
) -> list:
    """n tasks mapping the blank board to a uniformly sampled final state
    with stack heights in [min_height, max_height]."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if not 0 <= min_height <= max_height:
        raise ValueError("need 0 <= min_height <= max_height")
    rng = random.Random(seed)
    tasks = []
    for k in range(n):
        heights = tuple(rng.randint(min_height, max_height) for _ in range(width))
        goal = LegoWorld(heights, cursor=0)
        tasks.append(
            SynthesisTask(
                name=f"{prefix}_{k}",
                examples=((blank_board(width), goal),),
                kind="lego",
            )
        )
    return tasks


def gen_tower_tasks(
    width: int,
    n: int,
    seed: int,
    height: int = 3,
    prefix: str = "tower",
) -> list:
    """n tasks whose goals are full-height towers with at least one empty
    column: each column is either 0 or `height`, never all empty and never
    all full. These need deep build sequences while leaving room for
    viability pruning."""
    if width < 2:
        raise ValueError("width must be >= 2")
    if height < 1:
        raise ValueError("height must be >= 1")
    rng = random.Random(seed)
    tasks = []
    while len(tasks) < n:
        heights = tuple(rng.choice((0, height)) for _ in range(width))
        if 0 not in heights or sum(heights) < height:
            continue
        goal = LegoWorld(heights, cursor=0)
        tasks.append(
            SynthesisTask(
                name=f"{prefix}_{len(tasks)}",
                examples=((blank_board(width), goal),),
                kind="lego",
            )
        )
    return tasks


_WORD_POOL = (
    "alpha", "Bravo", "charlie", "DELTA", "echo 7", "Fox trot",
    "golf", "Hotel", "india 9", "JULIET", "kilo", "Lima",
)


def gen_string_tasks(n: int, seed: int, prefix: str = "str") -> list:
    """n tasks derived from short random edit sequences over sample words,
    two examples per task so single-example coincidences cannot solve
    them."""
    rng = random.Random(seed)
    ops = sorted(STRING_TRANSFORMS)
    tasks = []
    for k in range(n):
        words = rng.sample(_WORD_POOL, 2)
        length = min(len(w) for w in words)
        seq = [rng.choice(ops) for _ in range(rng.randint(1, min(4, length)))]
        examples = []
        for w in words:
            state = StringState(w)
            for op in seq:
                state = STRING_TRANSFORMS[op](state)
            examples.append((StringState(w), StringState(w, 0, state.out)))
        tasks.append(
            SynthesisTask(
                name=f"{prefix}_{k}",
                examples=tuple(
                    (inp, out) for inp, out in examples
                ),
                kind="string",
            )
        )
    return tasks


# ---------------------------------------------------------------------------
# Execution of knowledge-base programs


class ExecutionError(Exception):
    pass


def flatten_definitions(bk: Program) -> dict:
    """Every defined binary predicate as a flat primitive operation
    sequence. Defined bodies must be sequential chains of binary
    predicates, which holds for everything this harness produces."""
    defs: dict = {}
    for c in bk.clauses:
        defs.setdefault(c.head.pred, c)  # first definition wins
    flat: dict = {}

    def expand(pred: str, stack: tuple) -> tuple:
        if pred in flat:
            return flat[pred]
        if pred in stack:
            raise ExecutionError(f"recursive definition of {pred}")
        clause = defs.get(pred)
        if clause is None:
            raise ExecutionError(f"no definition for {pred}")
        seq: list = []
        for lit in clause.body:
            if bk.registry.role(lit.pred) == "primitive":
                seq.append(lit.pred)
            else:
                seq.extend(expand(lit.pred, stack + (pred,)))
        flat[pred] = tuple(seq)
        return flat[pred]

    for pred in defs:
        expand(pred, ())
    return flat


class Interpreter:
    """Executes operation sequences over one domain; defined predicates run
    as their flattened primitive sequences."""

    def __init__(self, bk: Program, kind: str):
        transforms, tests = _DOMAIN_TABLES[kind]
        self.kind = kind
        self.transforms = transforms
        self.tests = tests
        self.flat = flatten_definitions(bk)
        # vocabulary: learned definitions first, longest flattened
        # sequence first (prefer the biggest steps), then primitives in
        # canonical order
        prim = [p for p in sorted(transforms) if p in bk.registry.entries]
        seen = set(prim)
        defined = []
        for c in bk.clauses:
            if c.head.pred not in seen:
                seen.add(c.head.pred)
                defined.append(c.head.pred)
        defined.sort(key=lambda p: -len(self.flat[p]))
        self.vocabulary = defined + prim

    def cost(self, op: str) -> int:
        return len(self.flat[op]) if op in self.flat else 1

    def apply(self, op: str, state):
        if op in self.transforms:
            return self.transforms[op](state)
        if op in self.tests:
            return state if self.tests[op](state) else None
        for prim in self.flat[op]:
            state = self.apply(prim, state)
            if state is None:
                return None
        return state

    def run(self, ops, state):
        for op in ops:
            state = self.apply(op, state)
            if state is None:
                return None
        return state


def _lego_reached(state: LegoWorld, goal: LegoWorld) -> bool:
    return state.heights == goal.heights


def _lego_viable(state: LegoWorld, goal: LegoWorld) -> bool:
    # bricks are never removed
    return all(h <= g for h, g in zip(state.heights, goal.heights))


def _string_reached(state: StringState, goal: StringState) -> bool:
    return state.out == goal.out


def _string_viable(state: StringState, goal: StringState) -> bool:
    return goal.out.startswith(state.out)


_DOMAIN_CHECKS = {
    "lego": (_lego_reached, _lego_viable),
    "string": (_string_reached, _string_viable),
}


# ---------------------------------------------------------------------------
# Synthesizer


@dataclass(frozen=True)
class SynthesisLimits:
    max_depth: int = 10
    max_nodes: int = 100_000
    wall_time: float = 10.0


def _sequence_to_program(task: SynthesisTask, ops: list, bk: Program) -> Program:
    registry = bk.registry.copy()
    registry.declare(task.name, 2, "task")
    variables = [Var("A")] + [Var(f"V{k}") for k in range(1, len(ops))] + [Var("B")]
    if not ops:
        variables = [Var("A"), Var("A")]
    body = tuple(
        Atom(op, (variables[k], variables[k + 1])) for k, op in enumerate(ops)
    )
    head = Atom(task.name, (variables[0], variables[-1]))
    return Program((Clause(head, body),), registry)


def synthesize(task: SynthesisTask, bk: Program, limits: SynthesisLimits):
    """Shortest operation sequence (iterative deepening, deterministic
    order) mapping every example input to its output. Returns
    (solution Program or None, nodes expanded); a node is one candidate
    sequence prefix executed."""
    interp = Interpreter(bk, task.kind)
    reached, viable = _DOMAIN_CHECKS[task.kind]
    vocab = interp.vocabulary
    starts = [inp for inp, _ in task.examples]
    goals = [out for _, out in task.examples]
    deadline = time.monotonic() + limits.wall_time
    nodes = 0

    if all(reached(s, g) for s, g in zip(starts, goals)):
        return _sequence_to_program(task, [], bk), nodes

    for depth in range(1, limits.max_depth + 1):
        path: list = []
        # transposition table: example-state vector -> shallowest depth
        # reached this iteration; equal states at equal-or-greater depth
        # are duplicate candidates and are not re-tested
        seen: dict = {tuple(starts): 0}

        def dfs(states) -> Optional[list]:
            nonlocal nodes
            if len(path) == depth:
                return None
            for op in vocab:
                if nodes >= limits.max_nodes or time.monotonic() > deadline:
                    return None
                nxt = []
                ok = True
                for s, g in zip(states, goals):
                    s2 = interp.apply(op, s)
                    if s2 is None or not viable(s2, g):
                        ok = False
                        break
                    nxt.append(s2)
                if not ok:
                    continue
                key = tuple(nxt)
                prev = seen.get(key)
                if prev is not None and prev <= len(path) + 1:
                    continue
                seen[key] = len(path) + 1
                # one candidate program tested: the extended sequence is
                # executable on every example and gets checked against the
                # goals
                nodes += 1
                path.append(op)
                if all(reached(s, g) for s, g in zip(nxt, goals)):
                    return list(path)
                found = dfs(nxt)
                if found is not None:
                    return found
                path.pop()
            return None

        solution = dfs(starts)
        if solution is not None:
            return _sequence_to_program(task, solution, bk), nodes
        if nodes >= limits.max_nodes or time.monotonic() > deadline:
            break
    return None, nodes


# ---------------------------------------------------------------------------
# Lifelong accumulation and the benchmark driver


def accumulate_background(tasks: list, base: Program, limits: SynthesisLimits):
    """Solve tasks in order against the growing knowledge base; each
    solution is flattened to primitives and added as a reusable
    definition. Returns (knowledge base Program, solved task names)."""
    bk = Program(tuple(base.clauses), base.registry.copy())
    solved = []
    for task in tasks:
        solution, _ = synthesize(task, bk, limits)
        if solution is None:
            continue
        interp = Interpreter(bk, task.kind)
        clause = solution.clauses[0]
        seq: list = []
        for lit in clause.body:
            if lit.pred in interp.flat:
                seq.extend(interp.flat[lit.pred])
            else:
                seq.append(lit.pred)
        flat_prog = _sequence_to_program(task, seq, bk)
        registry = bk.registry.copy()
        registry.declare(task.name, 2, "task")
        bk = Program(bk.clauses + flat_prog.clauses, registry)
        solved.append(task.name)
    return bk, solved


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)  # dicts: task/condition/solved/nodes/seconds
    bk_stats: dict = field(default_factory=dict)  # label -> {literals, predicates}

    def aggregates(self) -> dict:
        agg: dict = {}
        for row in self.rows:
            a = agg.setdefault(
                row["condition"], {"tasks": 0, "solved": 0, "nodes": 0, "seconds": 0.0}
            )
            a["tasks"] += 1
            a["solved"] += int(row["solved"])
            a["nodes"] += row["nodes"]
            a["seconds"] += row["seconds"]
        return agg

    def render(self) -> str:
        lines = []
        for row in self.rows:
            lines.append(
                f"{row['condition']}\t{row['task']}\t"
                f"{int(row['solved'])}\t{row['nodes']}\t{row['seconds']:.3f}"
            )
        lines.append("")
        lines.append(f"{'condition':<16}{'solved':>8}{'nodes':>12}{'seconds':>10}")
        for label, a in sorted(self.aggregates().items()):
            lines.append(
                f"{label:<16}{a['solved']:>5}/{a['tasks']:<3}"
                f"{a['nodes']:>11}{a['seconds']:>10.2f}"
            )
        for label, st in sorted(self.bk_stats.items()):
            lines.append(
                f"bk[{label}]: literals={st['literals']} predicates={st['predicates']}"
            )
        return "\n".join(lines) + "\n"


def run_benchmark(conditions: list, tasks: list, limits: SynthesisLimits) -> BenchResult:
    """Runs synthesize for every task under every (label, knowledge base)
    condition with identical limits."""
    if not conditions:
        raise ValueError("at least one condition is required")
    result = BenchResult()
    for label, bk in conditions:
        result.bk_stats[label] = {
            "literals": bk.size,
            "predicates": len(bk.predicates()),
        }
        for task in tasks:
            t0 = time.monotonic()
            solution, nodes = synthesize(task, bk, limits)
            result.rows.append(
                {
                    "condition": label,
                    "task": task.name,
                    "solved": solution is not None,
                    "nodes": nodes,
                    "seconds": time.monotonic() - t0,
                }
            )
    return result
