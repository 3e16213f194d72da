"""Polymatrix game representation, utility evaluation, instance generation and file codecs.

A game holds one payoff matrix per ordered pair of players and a single
aggregator that folds a player's n-1 pairwise payoffs into one utility.
Opponent slots are ordered by increasing player index, skipping the player.
"""

import json
import math
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from app.errors import GameDomainError, GameInputError, GameParseError, ResourceLimitError
from app.utils import resolve

logger = logging.getLogger("polymatrix_ce.game")

# Rows per vectorized block when enumerating or sampling profiles
PROFILE_CHUNK = 1 << 16
PROBABILITY_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Boolean formula AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Not:
    arg: object


def formula_variables(node):
    """Set of input indices a formula reads"""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Not):
        return formula_variables(node.arg)
    found = set()
    for child in node.args:
        found |= formula_variables(child)
    return found


def evaluate_formula(node, inputs):
    """Evaluate a formula on a (rows, slots) boolean array, one result per row"""
    if isinstance(node, Var):
        return inputs[:, node.index]
    if isinstance(node, Not):
        return ~evaluate_formula(node.arg, inputs)
    if isinstance(node, And):
        result = np.ones(inputs.shape[0], dtype=bool)
        for child in node.args:
            result &= evaluate_formula(child, inputs)
        return result
    if isinstance(node, Or):
        result = np.zeros(inputs.shape[0], dtype=bool)
        for child in node.args:
            result |= evaluate_formula(child, inputs)
        return result
    raise GameInputError(f"Unknown formula node: {node!r}")


def formula_to_dict(node):
    if isinstance(node, Var):
        return {"var": node.index}
    if isinstance(node, Not):
        return {"op": "not", "args": [formula_to_dict(node.arg)]}
    op = "and" if isinstance(node, And) else "or"
    return {"op": op, "args": [formula_to_dict(child) for child in node.args]}


def formula_from_dict(doc, path="$.aggregator.formula"):
    if not isinstance(doc, dict):
        raise GameParseError(path, "formula node must be an object")
    if "var" in doc:
        index = doc["var"]
        if not _is_int(index):
            raise GameParseError(f"{path}.var", "variable index must be an integer")
        return Var(index)
    op = doc.get("op")
    args = doc.get("args")
    if op not in ("and", "or", "not"):
        raise GameParseError(f"{path}.op", f"unknown formula operator '{op}'")
    if not isinstance(args, list):
        raise GameParseError(f"{path}.args", "operator arguments must be a list")
    children = tuple(formula_from_dict(arg, f"{path}.args[{k}]") for k, arg in enumerate(args))
    if op == "not":
        if len(children) != 1:
            raise GameParseError(f"{path}.args", "'not' takes exactly one argument")
        return Not(children[0])
    return And(children) if op == "and" else Or(children)


# ---------------------------------------------------------------------------
# Aggregators
# ---------------------------------------------------------------------------

class AggregatorKind(str, Enum):
    SUM = "sum"
    MAX = "max"
    MIN = "min"
    SORTED_LINEAR = "sorted_linear"
    BOOLEAN_FORMULA = "boolean_formula"


@dataclass(frozen=True)
class Aggregator:
    """The function folding a player's pairwise payoffs into one utility"""
    kind: AggregatorKind
    coeffs: tuple = ()
    formula: object = None

    @classmethod
    def sorted_linear(cls, coeffs):
        return cls(AggregatorKind.SORTED_LINEAR, coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def boolean_formula(cls, formula):
        return cls(AggregatorKind.BOOLEAN_FORMULA, formula=formula)

    @property
    def tag(self):
        return self.kind.value

    @property
    def leading_terms(self):
        """K: one past the index of the last nonzero sorted-linear coefficient"""
        nonzero = [k for k, c in enumerate(self.coeffs) if c != 0.0]
        return nonzero[-1] + 1 if nonzero else 0

    def apply_rows(self, values):
        """Aggregate each row of a (rows, n-1) payoff array"""
        values = np.asarray(values, dtype=float)
        if self.kind is AggregatorKind.SUM:
            return values.sum(axis=1)
        if self.kind is AggregatorKind.MAX:
            return values.max(axis=1)
        if self.kind is AggregatorKind.MIN:
            return values.min(axis=1)
        if self.kind is AggregatorKind.SORTED_LINEAR:
            descending = np.sort(values, axis=1)[:, ::-1]
            return descending @ np.asarray(self.coeffs, dtype=float)
        binary = values == 1.0
        if not np.all(binary | (values == 0.0)):
            bad = values[~(binary | (values == 0.0))][0]
            raise GameDomainError(f"boolean_formula aggregator received non-binary payoff {bad}")
        return evaluate_formula(self.formula, binary).astype(float)

    def to_dict(self):
        doc = {"type": self.tag}
        if self.kind is AggregatorKind.SORTED_LINEAR:
            doc["coeffs"] = list(self.coeffs)
        if self.kind is AggregatorKind.BOOLEAN_FORMULA:
            doc["formula"] = formula_to_dict(self.formula)
        return doc


SUM = Aggregator(AggregatorKind.SUM)
MAX = Aggregator(AggregatorKind.MAX)
MIN = Aggregator(AggregatorKind.MIN)


def aggregator_from_tag(tag, coeffs=None, formula=None):
    """Build an aggregator from its file/CLI tag"""
    try:
        kind = AggregatorKind(tag)
    except ValueError:
        raise GameInputError(f"unknown aggregator tag '{tag}'")
    if kind is AggregatorKind.SORTED_LINEAR:
        if coeffs is None:
            raise GameInputError("sorted_linear aggregator needs coefficients")
        return Aggregator.sorted_linear(coeffs)
    if kind is AggregatorKind.BOOLEAN_FORMULA:
        if formula is None:
            raise GameInputError("boolean_formula aggregator needs a formula")
        return Aggregator.boolean_formula(formula)
    return Aggregator(kind)


# ---------------------------------------------------------------------------
# Game and distributions
# ---------------------------------------------------------------------------

def _frozen_array(values):
    # read-only float arrays that own their data are shared between games
    if (
        isinstance(values, np.ndarray) and values.dtype == np.float64
        and values.flags.owndata and not values.flags.writeable
    ):
        return values
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PolymatrixGame:
    n: int
    strategy_counts: tuple
    payoffs: dict
    aggregator: Aggregator = MAX

    def __post_init__(self):
        try:
            matrices = {(int(p), int(q)): _frozen_array(m) for (p, q), m in self.payoffs.items()}
        except (TypeError, ValueError) as e:
            raise GameInputError(f"payoff matrices must be rectangular numeric arrays: {e}")
        object.__setattr__(self, "strategy_counts", tuple(int(t) for t in self.strategy_counts))
        object.__setattr__(self, "payoffs", matrices)

    @property
    def m(self):
        return max(self.strategy_counts)

    @property
    def profile_count(self):
        return math.prod(self.strategy_counts)

    def opponents(self, p):
        return tuple(q for q in range(self.n) if q != p)

    def payoff(self, p, q):
        return self.payoffs[(p, q)]

    def __eq__(self, other):
        if not isinstance(other, PolymatrixGame):
            return NotImplemented
        return (
            self.n == other.n
            and self.strategy_counts == other.strategy_counts
            and self.aggregator == other.aggregator
            and self.payoffs.keys() == other.payoffs.keys()
            and all(np.array_equal(m, other.payoffs[key]) for key, m in self.payoffs.items())
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ProductDistribution:
    """One independent probability vector per player"""
    marginals: tuple

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(_frozen_array(m) for m in self.marginals))

    @classmethod
    def uniform(cls, strategy_counts):
        return cls(tuple(np.full(t, 1.0 / t) for t in strategy_counts))

    @classmethod
    def point_mass(cls, strategy_counts, profile):
        marginals = []
        for t, s in zip(strategy_counts, profile):
            row = np.zeros(t)
            row[s] = 1.0
            marginals.append(row)
        return cls(tuple(marginals))

    @property
    def strategy_counts(self):
        return tuple(len(m) for m in self.marginals)

    def probability(self, profile):
        return math.prod(float(m[s]) for m, s in zip(self.marginals, profile))

    def validate(self, strategy_counts=None):
        """Raise GameInputError unless every marginal is a probability vector of the right length"""
        if strategy_counts is not None and self.strategy_counts != tuple(strategy_counts):
            raise GameInputError(
                f"distribution shape {self.strategy_counts} does not match game shape {tuple(strategy_counts)}"
            )
        for p, m in enumerate(self.marginals):
            if len(m) == 0 or not np.all(np.isfinite(m)) or np.any(m < 0):
                raise GameInputError(f"marginal {p} must be finite and nonnegative")
            if abs(m.sum() - 1.0) > PROBABILITY_TOLERANCE:
                raise GameInputError(f"marginal {p} sums to {m.sum()!r}, not 1")
        return self

    def __eq__(self, other):
        if not isinstance(other, ProductDistribution):
            return NotImplemented
        return len(self.marginals) == len(other.marginals) and all(
            np.array_equal(a, b) for a, b in zip(self.marginals, other.marginals)
        )

    __hash__ = None


@dataclass(frozen=True)
class ExplicitDistribution:
    """Sparse map from strategy profile to probability"""
    atoms: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "atoms", {tuple(int(s) for s in profile): float(w) for profile, w in self.atoms.items()}
        )

    def validate(self, strategy_counts):
        total = 0.0
        for profile, w in self.atoms.items():
            check_profile(strategy_counts, profile)
            if not math.isfinite(w) or w < 0:
                raise GameInputError(f"probability of profile {profile} must be finite and nonnegative")
            total += w
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise GameInputError(f"explicit distribution sums to {total!r}, not 1")
        return self

    def __hash__(self):
        return hash(tuple(sorted(self.atoms.items())))


def check_player(game, p):
    if not _is_int(p) or not 0 <= p < game.n:
        raise GameInputError(f"player index {p!r} out of range 0..{game.n - 1}")


def check_profile(strategy_counts, profile):
    if len(profile) != len(strategy_counts):
        raise GameInputError(f"profile {tuple(profile)} has length {len(profile)}, expected {len(strategy_counts)}")
    for p, (s, t) in enumerate(zip(profile, strategy_counts)):
        if not _is_int(s) or not 0 <= s < t:
            raise GameInputError(f"strategy {s!r} of player {p} out of range 0..{t - 1}")


# ---------------------------------------------------------------------------
# Utility evaluation
# ---------------------------------------------------------------------------

def profile_utilities(game, p, profiles):
    """Utility of player p on each row of a (rows, n) integer profile array"""
    profiles = np.asarray(profiles, dtype=np.intp)
    own = profiles[:, p]
    values = np.empty((profiles.shape[0], game.n - 1))
    for k, q in enumerate(game.opponents(p)):
        values[:, k] = game.payoffs[(p, q)][own, profiles[:, q]]
    return game.aggregator.apply_rows(values)


def evaluate_utility(game, p, s):
    """Utility U(z, p, s) of player p at the pure profile s"""
    check_player(game, p)
    check_profile(game.strategy_counts, s)
    return float(profile_utilities(game, p, np.asarray([s]))[0])


def validate_game(game):
    """List every broken game invariant; an empty list means the game is well formed"""
    violations = []
    n = game.n
    if not _is_int(n) or n < 2:
        return [f"n must be an integer >= 2, got {n!r}"]
    counts = game.strategy_counts
    if len(counts) != n:
        return [f"strategy_counts has {len(counts)} entries, expected {n}"]
    for p, t in enumerate(counts):
        if t < 1:
            violations.append(f"player {p} has strategy count {t}, expected >= 1")
    if violations:
        return violations

    expected = {(p, q) for p in range(n) for q in range(n) if p != q}
    for key in sorted(expected - game.payoffs.keys()):
        violations.append(f"payoffs[{key[0]},{key[1]}] is missing")
    for key in sorted(game.payoffs.keys() - expected):
        violations.append(f"payoffs[{key[0]},{key[1]}] is not an ordered pair of distinct players")

    aggregator = game.aggregator
    boolean = aggregator.kind is AggregatorKind.BOOLEAN_FORMULA
    for (p, q) in sorted(expected & game.payoffs.keys()):
        matrix = game.payoffs[(p, q)]
        shape = (counts[p], counts[q])
        if matrix.ndim != 2 or matrix.shape != shape:
            violations.append(f"payoffs[{p},{q}] has shape {matrix.shape}, expected {shape}")
            continue
        bad = np.argwhere(~np.isfinite(matrix))
        if len(bad):
            i, j = bad[0]
            violations.append(f"payoffs[{p},{q}][{i}][{j}] is not finite ({len(bad)} such entries)")
            continue
        if boolean:
            bad = np.argwhere((matrix != 0.0) & (matrix != 1.0))
            if len(bad):
                i, j = bad[0]
                violations.append(
                    f"payoffs[{p},{q}][{i}][{j}] = {matrix[i, j]} is not 0 or 1 under a boolean_formula aggregator"
                    f" ({len(bad)} such entries)"
                )

    if aggregator.kind is AggregatorKind.SORTED_LINEAR:
        if len(aggregator.coeffs) != n - 1:
            violations.append(f"sorted_linear has {len(aggregator.coeffs)} coefficients, expected {n - 1}")
        if not all(math.isfinite(c) for c in aggregator.coeffs):
            violations.append("sorted_linear coefficients must be finite")
    if boolean:
        if aggregator.formula is None:
            violations.append("boolean_formula aggregator has no formula")
        else:
            out_of_range = sorted(k for k in formula_variables(aggregator.formula) if not 0 <= k <= n - 2)
            if out_of_range:
                violations.append(f"boolean_formula reads inputs {out_of_range} outside 0..{n - 2}")
    return violations


def check_game(game):
    """Raise GameInputError if the game breaks any invariant"""
    violations = validate_game(game)
    if violations:
        raise GameInputError("; ".join(violations))
    return game


# ---------------------------------------------------------------------------
# Instance generation and sampling
# ---------------------------------------------------------------------------

def make_rng(seed):
    """The toolkit's deterministic generator: PCG64 seeded with the given integer"""
    return np.random.Generator(np.random.PCG64(seed))


def random_game(n, strategy_counts, payoff_low, payoff_high, aggregator, seed):
    """Draw a game with independent uniform payoffs, reproducible from the seed"""
    if not _is_int(n) or n < 2:
        raise GameInputError(f"n must be an integer >= 2, got {n!r}")
    strategy_counts = tuple(strategy_counts)
    if len(strategy_counts) != n or not all(_is_int(t) and t >= 1 for t in strategy_counts):
        raise GameInputError(f"strategy_counts must hold {n} integers >= 1, got {strategy_counts}")
    if not (math.isfinite(payoff_low) and math.isfinite(payoff_high)) or payoff_low > payoff_high:
        raise GameInputError(f"payoff range [{payoff_low}, {payoff_high}] must be finite and ordered")

    rng = make_rng(seed)
    boolean = aggregator.kind is AggregatorKind.BOOLEAN_FORMULA
    payoffs = {}
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            shape = (strategy_counts[p], strategy_counts[q])
            if boolean:
                payoffs[(p, q)] = rng.integers(0, 2, size=shape).astype(float)
            else:
                payoffs[(p, q)] = rng.uniform(payoff_low, payoff_high, size=shape)

    game = check_game(PolymatrixGame(n, strategy_counts, payoffs, aggregator))
    logger.debug(f"Generated {aggregator.tag} game n={n} counts={strategy_counts} seed={seed}")
    return game


def random_product_distribution(strategy_counts, seed):
    """Flat-Dirichlet marginals (normalized exponentials), reproducible from the seed"""
    rng = make_rng(seed)
    marginals = []
    for t in strategy_counts:
        weights = rng.standard_exponential(t)
        marginals.append(weights / weights.sum())
    return ProductDistribution(tuple(marginals))


def monte_carlo_estimate(game, p, x, samples, seed):
    """Sample mean and standard error of player p's utility under x"""
    check_player(game, p)
    x.validate(game.strategy_counts)
    if not _is_int(samples) or samples < 1:
        raise GameInputError(f"samples must be a positive integer, got {samples!r}")

    rng = make_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = samples
    while remaining:
        size = min(remaining, PROFILE_CHUNK)
        profiles = np.empty((size, game.n), dtype=np.intp)
        for q, marginal in enumerate(x.marginals):
            profiles[:, q] = rng.choice(len(marginal), size=size, p=marginal / marginal.sum())
        utilities = profile_utilities(game, p, profiles)
        total += float(utilities.sum())
        total_sq += float(np.dot(utilities, utilities))
        remaining -= size

    mean = total / samples
    if samples == 1:
        return mean, 0.0
    variance = max(total_sq - samples * mean * mean, 0.0) / (samples - 1)
    return mean, math.sqrt(variance / samples)


def monte_carlo_expectation(game, p, x, samples, seed):
    """Mean utility of player p over `samples` profiles drawn from x"""
    return monte_carlo_estimate(game, p, x, samples, seed)[0]


# ---------------------------------------------------------------------------
# Enumeration and relabeling helpers
# ---------------------------------------------------------------------------

def iter_profile_blocks(strategy_counts, chunk=PROFILE_CHUNK):
    """Yield (rows, len(counts)) arrays covering every profile in row-major order"""
    total = math.prod(strategy_counts)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total))
        yield np.stack(np.unravel_index(flat, tuple(strategy_counts)), axis=1)


def expand_product(x, guard=None):
    """Materialize a product distribution as an explicit one (positive atoms only)"""
    guard = resolve(guard, "enumeration_guard")
    counts = x.strategy_counts
    if math.prod(counts) > guard:
        raise ResourceLimitError(f"{math.prod(counts)} profiles exceed the enumeration guard {guard}")
    atoms = {}
    for block in iter_profile_blocks(counts):
        weights = np.ones(len(block))
        for q, marginal in enumerate(x.marginals):
            weights *= marginal[block[:, q]]
        for row in np.flatnonzero(weights > 0):
            atoms[tuple(int(s) for s in block[row])] = float(weights[row])
    return ExplicitDistribution(atoms)


def transform_payoffs(game, fn):
    """Game with fn applied to every payoff matrix"""
    payoffs = {key: fn(np.array(matrix)) for key, matrix in game.payoffs.items()}
    return PolymatrixGame(game.n, game.strategy_counts, payoffs, game.aggregator)


def permute_players(game, perm):
    """Relabel player p as perm[p]; only for aggregators that ignore input order"""
    if game.aggregator.kind is AggregatorKind.BOOLEAN_FORMULA:
        raise GameInputError("boolean_formula games depend on opponent order and cannot be relabeled")
    if sorted(perm) != list(range(game.n)):
        raise GameInputError(f"{perm} is not a permutation of 0..{game.n - 1}")
    counts = [0] * game.n
    for p, t in enumerate(game.strategy_counts):
        counts[perm[p]] = t
    payoffs = {(perm[p], perm[q]): matrix for (p, q), matrix in game.payoffs.items()}
    return PolymatrixGame(game.n, counts, payoffs, game.aggregator)


# ---------------------------------------------------------------------------
# File codecs
# ---------------------------------------------------------------------------

def _is_int(value):
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool) and abs(int(value)) < 2**63


def _is_number(value):
    """A JSON number that converts to a finite float"""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return False
    try:
        return math.isfinite(float(value))
    except OverflowError:
        return False


def dump_document(doc):
    """Serialize a JSON document to UTF-8 bytes"""
    try:
        return (json.dumps(doc, allow_nan=False) + "\n").encode("utf-8")
    except ValueError as e:
        raise GameInputError(f"cannot encode non-finite values: {e}")


def load_document(data):
    """Parse UTF-8 JSON bytes (or text) into a document"""
    try:
        if isinstance(data, (bytes, bytearray)):
            data = data.decode("utf-8")
        return json.loads(data)
    except UnicodeDecodeError as e:
        raise GameParseError("$", f"document is not UTF-8: {e}")
    except json.JSONDecodeError as e:
        raise GameParseError("$", f"invalid JSON: {e}")
    except ValueError as e:
        # integer literals past the interpreter's digit limit
        raise GameParseError("$", f"unreadable number: {e}")


def require(doc, key, path, kind=None):
    """Fetch doc[key], raising a parse error that names path.key"""
    if not isinstance(doc, dict):
        raise GameParseError(path, "expected an object")
    if key not in doc:
        raise GameParseError(f"{path}.{key}", "missing field")
    value = doc[key]
    if kind == "int" and not _is_int(value):
        raise GameParseError(f"{path}.{key}", f"expected an integer, got {value!r}")
    if kind == "number" and not _is_number(value):
        raise GameParseError(f"{path}.{key}", f"expected a finite number, got {value!r}")
    if kind == "list" and not isinstance(value, list):
        raise GameParseError(f"{path}.{key}", "expected a list")
    if kind == "object" and not isinstance(value, dict):
        raise GameParseError(f"{path}.{key}", "expected an object")
    return value


def parse_vector(value, path, kind="number"):
    check = _is_int if kind == "int" else _is_number
    if not isinstance(value, list):
        raise GameParseError(path, "expected a list")
    for k, item in enumerate(value):
        if not check(item):
            raise GameParseError(f"{path}[{k}]", f"expected {'an integer' if kind == 'int' else 'a finite number'}, got {item!r}")
    return value


def parse_matrix(value, path):
    if not isinstance(value, list):
        raise GameParseError(path, "expected a list of rows")
    rows = [parse_vector(row, f"{path}[{i}]") for i, row in enumerate(value)]
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise GameParseError(path, f"rows have differing lengths {sorted(widths)}")
    return rows


def parse_marginals(doc, path):
    marginals = require(doc, "marginals", path, "list")
    return ProductDistribution(
        tuple(np.array(parse_vector(m, f"{path}.marginals[{p}]"), dtype=float) for p, m in enumerate(marginals))
    )


def encode_game(game):
    """Game file bytes"""
    doc = {
        "n": game.n,
        "strategy_counts": list(game.strategy_counts),
        "aggregator": game.aggregator.to_dict(),
        "payoffs": {f"{p},{q}": game.payoffs[(p, q)].tolist() for (p, q) in sorted(game.payoffs)},
    }
    return dump_document(doc)


def decode_game(data):
    """Parse and validate game file bytes"""
    doc = load_document(data)
    n = require(doc, "n", "$", "int")
    counts = parse_vector(require(doc, "strategy_counts", "$", "list"), "$.strategy_counts", kind="int")

    agg_doc = require(doc, "aggregator", "$", "object")
    tag = require(agg_doc, "type", "$.aggregator")
    try:
        kind = AggregatorKind(tag)
    except ValueError:
        raise GameParseError("$.aggregator.type", f"unknown aggregator tag '{tag}'")
    if kind is AggregatorKind.SORTED_LINEAR:
        aggregator = Aggregator.sorted_linear(
            parse_vector(require(agg_doc, "coeffs", "$.aggregator", "list"), "$.aggregator.coeffs")
        )
    elif kind is AggregatorKind.BOOLEAN_FORMULA:
        aggregator = Aggregator.boolean_formula(formula_from_dict(require(agg_doc, "formula", "$.aggregator")))
    else:
        aggregator = Aggregator(kind)

    payoff_doc = require(doc, "payoffs", "$", "object")
    payoffs = {}
    for key, value in payoff_doc.items():
        path = f'$.payoffs["{key}"]'
        try:
            p, q = (int(part) for part in key.split(","))
        except ValueError:
            raise GameParseError(path, "key must be 'p,q'")
        rows = parse_matrix(value, path)
        width = len(rows[0]) if rows else 0
        payoffs[(p, q)] = np.array(rows, dtype=float).reshape(len(rows), width)

    game = PolymatrixGame(n, counts, payoffs, aggregator)
    violations = validate_game(game)
    if violations:
        raise GameParseError("$", "; ".join(violations))
    return game


def encode_product(x):
    return dump_document({"marginals": [m.tolist() for m in x.marginals]})


def decode_product(data, strategy_counts=None):
    x = parse_marginals(load_document(data), "$")
    try:
        return x.validate(strategy_counts)
    except GameInputError as e:
        raise GameParseError("$.marginals", str(e))


def encode_explicit(d):
    atoms = [{"profile": list(profile), "prob": w} for profile, w in sorted(d.atoms.items())]
    return dump_document({"atoms": atoms})


def decode_explicit(data, strategy_counts=None):
    doc = load_document(data)
    atoms = {}
    for k, atom in enumerate(require(doc, "atoms", "$", "list")):
        path = f"$.atoms[{k}]"
        profile = tuple(parse_vector(require(atom, "profile", path, "list"), f"{path}.profile", kind="int"))
        prob = require(atom, "prob", path, "number")
        atoms[profile] = atoms.get(profile, 0.0) + float(prob)
    d = ExplicitDistribution(atoms)
    if strategy_counts is not None:
        try:
            d.validate(strategy_counts)
        except GameInputError as e:
            raise GameParseError("$.atoms", str(e))
    return d
