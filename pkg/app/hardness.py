"""3-SAT to boolean-formula polymatrix games.

Player 0 has one strategy; opponent q in 1..V picks the truth value of
variable q-1 and pays player 0 exactly that bit, so the boolean-formula
aggregator evaluated on player 0's inputs is the CNF itself. Under uniform
opponents the expected utility of player 0 is (#satisfying assignments) / 2^V.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from app.errors import GameInputError, GameParseError, ResourceLimitError
from app.expectation import brute_expectation
from app.game_core import Aggregator, And, Not, Or, PolymatrixGame, ProductDistribution, Var, check_game, make_rng
from app.utils import resolve

logger = logging.getLogger("polymatrix_ce.hardness")

MAX_CLAUSE_WIDTH = 3


class Literal(NamedTuple):
    variable: int  # 0-based
    positive: bool

    @classmethod
    def from_dimacs(cls, lit):
        return cls(abs(lit) - 1, lit > 0)

    def to_dimacs(self):
        return self.variable + 1 if self.positive else -(self.variable + 1)


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(Literal(*lit) for lit in c) for c in self.clauses))

    def validate(self):
        if self.num_vars < 1:
            raise GameInputError(f"formula needs at least one variable, got {self.num_vars}")
        for k, clause in enumerate(self.clauses):
            if not 1 <= len(clause) <= MAX_CLAUSE_WIDTH:
                raise GameInputError(f"clause {k} has {len(clause)} literals, expected 1..{MAX_CLAUSE_WIDTH}")
            for lit in clause:
                if not 0 <= lit.variable < self.num_vars:
                    raise GameInputError(f"clause {k} reads variable {lit.variable + 1} of {self.num_vars}")
        return self

    def to_formula(self):
        """The CNF as a formula AST over input slots 0..V-1"""
        return And(tuple(
            Or(tuple(Var(lit.variable) if lit.positive else Not(Var(lit.variable)) for lit in clause))
            for clause in self.clauses
        ))


@dataclass(frozen=True)
class SatReduction:
    game: PolymatrixGame
    distribution: ProductDistribution
    player: int


@dataclass(frozen=True)
class SatDecision:
    satisfiable: bool
    expectation: float


def reduce_3sat(f):
    """Game, uniform distribution and designated player whose expectation counts models"""
    f.validate()
    n = f.num_vars + 1
    counts = (1,) + (2,) * f.num_vars
    payoffs = {}
    for p in range(n):
        for q in range(n):
            if p != q:
                payoffs[(p, q)] = np.zeros((counts[p], counts[q]))
    for q in range(1, n):
        payoffs[(0, q)] = np.array([[0.0, 1.0]])

    game = check_game(PolymatrixGame(n, counts, payoffs, Aggregator.boolean_formula(f.to_formula())))
    return SatReduction(game, ProductDistribution.uniform(counts), 0)


def decide_sat_via_expectation(f, *, max_variables=None):
    """Satisfiable iff the designated player's expected utility is strictly positive"""
    max_variables = resolve(max_variables, "sat_max_variables")
    if f.num_vars > max_variables:
        raise ResourceLimitError(f"{f.num_vars} variables exceed the limit of {max_variables}")
    reduction = reduce_3sat(f)
    expectation = brute_expectation(
        reduction.game, reduction.player, reduction.distribution, guard=reduction.game.profile_count
    )
    logger.info(f"Formula with {f.num_vars} variables, {len(f.clauses)} clauses: expectation {expectation}")
    return SatDecision(expectation > 0.0, expectation)


def random_3cnf(num_vars, num_clauses, seed):
    """Uniform random 3-CNF over distinct variables per clause (fewer if V < 3)"""
    if num_vars < 1:
        raise GameInputError(f"formula needs at least one variable, got {num_vars}")
    rng = make_rng(seed)
    width = min(MAX_CLAUSE_WIDTH, num_vars)
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(num_vars, size=width, replace=False)
        signs = rng.integers(0, 2, size=width)
        clauses.append(tuple(Literal(int(v), bool(s)) for v, s in zip(variables, signs)))
    return CnfFormula(num_vars, tuple(clauses))


def parse_dimacs(text):
    """Read a DIMACS CNF document ('p cnf V C' header, clauses terminated by 0)"""
    num_vars = None
    declared = None
    clauses = []
    current = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise GameParseError(f"line {line_no}", f"invalid problem line: {line}")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise GameParseError(f"line {line_no}", f"invalid problem line: {line}")
            continue
        if num_vars is None:
            raise GameParseError(f"line {line_no}", "clause before the 'p cnf' header")
        for token in line.split():
            try:
                lit = int(token)
            except ValueError:
                raise GameParseError(f"line {line_no}", f"invalid literal '{token}'")
            if lit == 0:
                if not current:
                    raise GameParseError(f"line {line_no}", "empty clause")
                clauses.append(tuple(current))
                current = []
                continue
            if abs(lit) > num_vars:
                raise GameParseError(f"line {line_no}", f"literal {lit} exceeds {num_vars} variables")
            current.append(Literal.from_dimacs(lit))

    if num_vars is None:
        raise GameParseError("line 1", "missing 'p cnf' header")
    if current:
        clauses.append(tuple(current))
    if declared != len(clauses):
        logger.warning(f"DIMACS header declares {declared} clauses, found {len(clauses)}")

    f = CnfFormula(num_vars, tuple(clauses))
    try:
        return f.validate()
    except GameInputError as e:
        raise GameParseError("$", str(e))


def to_dimacs(f):
    lines = [f"p cnf {f.num_vars} {len(f.clauses)}"]
    lines += [" ".join(str(lit.to_dimacs()) for lit in clause) + " 0" for clause in f.clauses]
    return "\n".join(lines) + "\n"
