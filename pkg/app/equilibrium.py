"""Correlated-equilibrium constraints, verification and solvers.

A regret entry g(p, i, j) is the CE constraint value
    sum over s with s_p = i of x(s) * [U(p, (i, s_-p)) - U(p, (j, s_-p))]
and a distribution is a CE iff every entry is nonnegative. For a product
distribution the entry reduces to x_p(i) * (e_p[i] - e_p[j]) with e_p the
conditional action expectations, which is what lets the mixture solver stay
polynomial whenever expected utility is.
"""

import itertools
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from app.errors import ConvergenceError, GameInputError, GameParseError, NumericalError, ResourceLimitError
from app.expectation import conditional_action_expectations
from app.game_core import (
    AggregatorKind,
    ExplicitDistribution,
    ProductDistribution,
    decode_explicit,
    dump_document,
    expand_product,
    iter_profile_blocks,
    load_document,
    parse_marginals,
    profile_utilities,
    require,
)
from app.utils import get_setting, resolve

logger = logging.getLogger("polymatrix_ce.equilibrium")


def constraint_index(strategy_counts):
    """Every (p, i, j) with i != j, in the canonical row order"""
    return [(p, i, j) for p, t in enumerate(strategy_counts) for i in range(t) for j in range(t) if i != j]


class _PairTable:
    """Per-player t_p x t_p tables indexed by (p, i, j); the diagonal is unused"""

    def __init__(self, strategy_counts, tables):
        self.strategy_counts = tuple(strategy_counts)
        self.tables = tuple(np.array(table, dtype=float) for table in tables)
        for table in self.tables:
            np.fill_diagonal(table, 0.0)
            table.setflags(write=False)

    @classmethod
    def from_vector(cls, strategy_counts, vector):
        tables = [np.zeros((t, t)) for t in strategy_counts]
        index = constraint_index(strategy_counts)
        if len(vector) != len(index):
            raise GameInputError(f"expected {len(index)} entries, got {len(vector)}")
        for (p, i, j), value in zip(index, vector):
            tables[p][i, j] = value
        return cls(strategy_counts, tables)

    def vector(self):
        return np.array([self.tables[p][i, j] for p, i, j in constraint_index(self.strategy_counts)])

    def __getitem__(self, key):
        p, i, j = key
        return float(self.tables[p][i, j])


class RegretReport(_PairTable):
    """CE constraint values g(p, i, j) with the worst violation"""

    def entries(self):
        return [(p, i, j, float(self.tables[p][i, j])) for p, i, j in constraint_index(self.strategy_counts)]

    @property
    def witness(self):
        index = constraint_index(self.strategy_counts)
        if not index:
            return None
        return index[int(np.argmin(self.vector()))]

    @property
    def max_violation(self):
        vector = self.vector()
        if not len(vector):
            return 0.0
        return max(0.0, -float(vector.min()))


class DualWeights(_PairTable):
    """Nonnegative multipliers alpha_p(i, j) on the CE constraints"""

    def validate(self):
        for p, table in enumerate(self.tables):
            if not np.all(np.isfinite(table)) or np.any(table < 0):
                raise GameInputError(f"dual weights of player {p} must be finite and nonnegative")
        return self

    def pairing(self, report):
        """sum over (p, i, j) of alpha_p(i, j) * g(p, i, j)"""
        return float(sum(np.sum(a * g) for a, g in zip(self.tables, report.tables)))


@dataclass(frozen=True)
class MixtureDistribution:
    """Convex combination of product distributions: ((weight, ProductDistribution), ...)"""
    components: tuple

    def validate(self, strategy_counts):
        if not self.components:
            raise GameInputError("mixture has no components")
        total = 0.0
        for k, (weight, x) in enumerate(self.components):
            if not math.isfinite(weight) or weight < 0:
                raise GameInputError(f"component {k} has invalid weight {weight!r}")
            x.validate(strategy_counts)
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise GameInputError(f"mixture weights sum to {total!r}, not 1")
        return self

    @property
    def weights(self):
        return np.array([w for w, _ in self.components])


@dataclass(frozen=True)
class VerificationResult:
    report: RegretReport
    is_ce: bool
    eps: float


# ---------------------------------------------------------------------------
# Regrets
# ---------------------------------------------------------------------------

def regret_from_product(game, x, *, k_max=None, guard=None):
    """Regret table of a product distribution from conditional action expectations"""
    tables = []
    for p in range(game.n):
        e = conditional_action_expectations(game, p, x, k_max=k_max, guard=guard).values
        tables.append(x.marginals[p][:, None] * (e[:, None] - e[None, :]))
    return RegretReport(game.strategy_counts, tables)


def regret_from_explicit(game, d, *, guard=None):
    """Regret table of an explicit distribution by direct summation over its support"""
    guard = resolve(guard, "enumeration_guard")
    d.validate(game.strategy_counts)
    if len(d.atoms) > guard:
        raise ResourceLimitError(f"support of {len(d.atoms)} profiles exceeds the enumeration guard {guard}")

    profiles = np.array(list(d.atoms.keys()), dtype=np.intp).reshape(len(d.atoms), game.n)
    weights = np.array(list(d.atoms.values()))
    rows = np.arange(len(profiles))
    tables = []
    for p, t in enumerate(game.strategy_counts):
        utilities = _deviation_utilities(game, p, profiles)
        played = utilities[rows, profiles[:, p]]
        table = np.zeros((t, t))
        np.add.at(table, profiles[:, p], weights[:, None] * (played[:, None] - utilities))
        tables.append(table)
    return RegretReport(game.strategy_counts, tables)


def _deviation_utilities(game, p, profiles):
    """(rows, t_p) array: player p's utility when switching to each action j"""
    utilities = np.empty((len(profiles), game.strategy_counts[p]))
    deviated = profiles.copy()
    for j in range(game.strategy_counts[p]):
        deviated[:, p] = j
        utilities[:, j] = profile_utilities(game, p, deviated)
    return utilities


def regret_from_mixture(game, mixture, *, workers=None, k_max=None, guard=None):
    """Weighted sum of component regrets; the mixture is never expanded"""
    workers = resolve(workers, "regret_workers")
    xs = [x for _, x in mixture.components]

    def column(x):
        return regret_from_product(game, x, k_max=k_max, guard=guard)

    if workers > 1 and len(xs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(column, xs))
    else:
        reports = [column(x) for x in xs]

    tables = [np.zeros((t, t)) for t in game.strategy_counts]
    for (weight, _), report in zip(mixture.components, reports):
        for table, component in zip(tables, report.tables):
            table += weight * component
    return RegretReport(game.strategy_counts, tables)


def verify_ce(game, dist, eps=None, *, guard=None, workers=None):
    """Regret report plus whether every constraint holds within eps"""
    eps = resolve(eps, "default_eps")
    if not eps >= 0:
        raise GameInputError(f"eps must be >= 0, got {eps!r}")
    if isinstance(dist, ExplicitDistribution):
        report = regret_from_explicit(game, dist, guard=guard)
    elif isinstance(dist, MixtureDistribution):
        dist.validate(game.strategy_counts)
        report = regret_from_mixture(game, dist, workers=workers, guard=guard)
    elif isinstance(dist, ProductDistribution):
        report = regret_from_product(game, dist.validate(game.strategy_counts), guard=guard)
    else:
        raise GameInputError(f"cannot verify a {type(dist).__name__}")

    is_ce = report.max_violation <= eps
    logger.debug(f"Verified {type(dist).__name__}: max_violation={report.max_violation:.3e} eps={eps} is_ce={is_ce}")
    return VerificationResult(report, is_ce, eps)


def expand_mixture(mixture, *, guard=None):
    """Explicit distribution of a mixture (tiny games only)"""
    atoms = {}
    for weight, x in mixture.components:
        for profile, w in expand_product(x, guard=guard).atoms.items():
            atoms[profile] = atoms.get(profile, 0.0) + weight * w
    return ExplicitDistribution(atoms)


def mixture_from_explicit(d, strategy_counts):
    """An explicit distribution as a mixture of point-mass products"""
    return MixtureDistribution(tuple(
        (w, ProductDistribution.point_mass(strategy_counts, profile)) for profile, w in sorted(d.atoms.items())
    ))


# ---------------------------------------------------------------------------
# LP feasibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LPResult:
    """Max-margin simplex point, plus a Farkas certificate over the rows when infeasible"""
    feasible: bool
    point: np.ndarray = None
    certificate: np.ndarray = None
    margin: float = 0.0


def lp_feasibility(A, rhs=None, *, tolerance=None, max_rows=None, max_cols=None):
    """Find d >= 0, sum d = 1 with A d >= rhs, or rows y >= 0 proving none exists

    Solves the max-margin program max t s.t. A d - t >= rhs over the simplex.
    A nonnegative margin gives the point; otherwise the dual
    min over the row simplex of max_k (y^T A)_k - y^T rhs yields y with
    y^T A d < y^T rhs for every simplex point d.
    """
    tolerance = resolve(tolerance, "lp_tolerance")
    max_rows = resolve(max_rows, "lp_max_rows")
    max_cols = resolve(max_cols, "lp_max_cols")

    A = np.atleast_2d(np.asarray(A, dtype=float))
    r, c = A.shape
    rhs = np.zeros(r) if rhs is None else np.asarray(rhs, dtype=float).reshape(r)
    if c == 0:
        raise GameInputError("feasibility program needs at least one variable")
    if r > max_rows or c > max_cols:
        raise ResourceLimitError(f"{r} x {c} program exceeds the dense solver guard {max_rows} x {max_cols}")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise GameInputError("feasibility program entries must be finite")

    if r == 0:
        point = np.zeros(c)
        point[0] = 1.0
        return LPResult(True, point=point, margin=math.inf)

    primal = linprog(
        np.r_[np.zeros(c), -1.0],
        A_ub=np.hstack([-A, np.ones((r, 1))]),
        b_ub=-rhs,
        A_eq=np.r_[np.ones(c), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * c + [(None, None)],
        method="highs-ds",
    )
    if primal.status != 0:
        raise NumericalError(f"phase-1 program failed: {primal.message}")
    margin = float(primal.x[-1])
    point = np.clip(primal.x[:c], 0.0, None)
    point /= point.sum()

    if margin >= -tolerance:
        return LPResult(True, point=point, margin=margin)

    dual = linprog(
        np.r_[-rhs, 1.0],
        A_ub=np.hstack([A.T, -np.ones((c, 1))]),
        b_ub=np.zeros(c),
        A_eq=np.r_[np.ones(r), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * r + [(None, None)],
        method="highs-ds",
    )
    if dual.status != 0:
        raise NumericalError(f"certificate program failed: {dual.message}")
    certificate = np.clip(dual.x[:r], 0.0, None)
    logger.debug(f"Infeasible {r} x {c} program, margin {margin:.3e}")
    return LPResult(False, point=point, certificate=certificate / certificate.sum(), margin=margin)


# ---------------------------------------------------------------------------
# Stationary chains and separating product distributions
# ---------------------------------------------------------------------------

def _closed_class_distribution(rates):
    """GTH elimination on an irreducible rate matrix; subtraction-free, so pi stays nonnegative"""
    a = np.array(rates, dtype=float)
    t = len(a)
    for k in range(t - 1, 0, -1):
        leaving = a[k, :k].sum()
        if leaving <= 0.0:
            raise NumericalError(f"state {k} of a closed class has no path back")
        a[:k, k] /= leaving
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])

    pi = np.zeros(t)
    pi[0] = 1.0
    for k in range(1, t):
        pi[k] = pi[:k] @ a[:k, k]
    return pi / pi.sum()


def _check_rates(rates):
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 2 or rates.shape[0] != rates.shape[1] or rates.shape[0] == 0:
        raise GameInputError(f"rates must be a nonempty square matrix, got shape {rates.shape}")
    if not np.all(np.isfinite(rates)) or np.any(rates < 0):
        raise GameInputError("rates must be finite and nonnegative")
    if np.any(np.diag(rates) != 0):
        raise GameInputError("rates must have a zero diagonal")
    return rates


def stationary_extremes(rates, *, tolerance=None):
    """One stationary vector per closed class of the chain, as the rows of a matrix

    Every stationary vector of the chain is a convex combination of these rows.
    A state without outgoing rates is a closed class of its own.
    """
    tolerance = resolve(tolerance, "stationary_tolerance")
    rates = _check_rates(rates)
    t = len(rates)

    edges = rates > 0
    n_classes, labels = connected_components(csr_matrix(edges), directed=True, connection="strong")
    leaving = np.zeros(n_classes, dtype=bool)
    sources, targets = np.nonzero(edges)
    leaving[labels[sources[labels[sources] != labels[targets]]]] = True
    closed = [k for k in range(n_classes) if not leaving[k]]

    extremes = np.zeros((len(closed), t))
    for row, k in enumerate(closed):
        members = np.flatnonzero(labels == k)
        extremes[row, members] = _closed_class_distribution(rates[np.ix_(members, members)])

    generator = rates - np.diag(rates.sum(axis=1))
    residual = float(np.abs(extremes @ generator).max())
    if residual > tolerance * max(1.0, float(rates.max())) or extremes.min() < -tolerance:
        raise NumericalError(f"stationary residual {residual:.3e} exceeds tolerance {tolerance}")
    extremes = np.clip(extremes, 0.0, None)
    return extremes / extremes.sum(axis=1, keepdims=True)


def stationary_distribution(rates, *, tolerance=None):
    """Stationary vector of the chain moving i -> j at rate rates[i][j]

    Reducible chains get the equal-weight average over their closed classes;
    the all-zero chain is uniform.
    """
    return stationary_extremes(rates, tolerance=tolerance).mean(axis=0)


def product_from_dual(strategy_counts, alpha):
    """Product of per-player stationary marginals of the chains with rates alpha_p(i, j)

    Stationarity makes sum alpha * g vanish for the resulting distribution.
    """
    alpha.validate()
    return ProductDistribution(tuple(stationary_distribution(table) for table in alpha.tables))


def products_from_dual(strategy_counts, alpha, limit):
    """Up to limit product distributions that all pair to zero against alpha

    The first is product_from_dual(alpha). Any product whose marginals are each
    stationary for their own player's chain also pairs to zero, so the rest
    combine closed-class vectors: every combination when there are few enough,
    otherwise one player at a time with the others at their averages.
    """
    alpha.validate()
    extremes = [stationary_extremes(table) for table in alpha.tables]
    averages = tuple(rows.mean(axis=0) for rows in extremes)
    products = [ProductDistribution(averages)]

    combos = math.prod(len(rows) for rows in extremes)
    if combos == 1:
        return products
    if combos < limit:
        for combo in itertools.product(*extremes):
            products.append(ProductDistribution(tuple(combo)))
        return products[:limit]

    for p, rows in enumerate(extremes):
        if len(rows) < 2:
            continue
        for row in rows:
            if len(products) >= limit:
                return products
            products.append(ProductDistribution(averages[:p] + (row,) + averages[p + 1:]))
    return products


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def _all_profiles(strategy_counts):
    return np.vstack(list(iter_profile_blocks(strategy_counts)))


def solve_ce_explicit(game, *, guard=None, tolerance=None):
    """CE over all profiles from the explicit feasibility program (tiny games)"""
    guard = resolve(guard, "explicit_guard")
    tolerance = resolve(tolerance, "constraint_tolerance")
    if game.profile_count > guard:
        raise ResourceLimitError(f"{game.profile_count} profiles exceed the explicit guard {guard}")
    if not explicit_program_fits(game, guard):
        raise ResourceLimitError(
            f"{len(constraint_index(game.strategy_counts))} x {game.profile_count} explicit program exceeds "
            f"the dense solver guard {get_setting('lp_max_rows')} x {get_setting('lp_max_cols')}"
        )

    profiles = _all_profiles(game.strategy_counts)
    rows = []
    for p, t in enumerate(game.strategy_counts):
        utilities = _deviation_utilities(game, p, profiles)
        for i in range(t):
            recommended = profiles[:, p] == i
            for j in range(t):
                if j != i:
                    rows.append(np.where(recommended, utilities[:, i] - utilities[:, j], 0.0))
    A = np.array(rows).reshape(len(rows), len(profiles))

    result = lp_feasibility(A)
    if not result.feasible:
        raise NumericalError(f"explicit CE program reported infeasible (margin {result.margin:.3e})")

    point = np.where(result.point > 1e-15, result.point, 0.0)
    point /= point.sum()
    d = ExplicitDistribution({
        tuple(int(s) for s in profiles[k]): float(point[k]) for k in np.flatnonzero(point)
    })
    violation = regret_from_explicit(game, d).max_violation
    if violation > tolerance:
        raise NumericalError(f"explicit CE violates a constraint by {violation:.3e}")
    logger.info(f"Explicit CE over {len(profiles)} profiles, support {len(d.atoms)}, max_violation {violation:.3e}")
    return d


def _has_polynomial_path(game, k_max):
    kind = game.aggregator.kind
    if kind is AggregatorKind.SORTED_LINEAR:
        return game.aggregator.leading_terms <= k_max
    return kind is not AggregatorKind.BOOLEAN_FORMULA


def explicit_program_fits(game, guard=None):
    """Whether solve_ce_explicit can run: profile guard and the dense solver guard"""
    guard = resolve(guard, "explicit_guard")
    rows = len(constraint_index(game.strategy_counts))
    return (
        game.profile_count <= guard
        and rows <= get_setting("lp_max_rows")
        and game.profile_count <= get_setting("lp_max_cols")
    )


@dataclass(frozen=True)
class CutRound:
    """One infeasible round: the restricted margin, how far the certificate
    separates the existing columns, and its worst pairing against the new ones"""
    round: int
    margin: float
    separation: float
    pairing: float
    added: int


@dataclass
class MixtureTrace:
    """Route taken by solve_ce_mixture"""
    rounds: list = field(default_factory=list)
    accepted_round: int = None
    fallback: bool = False


def solve_ce_mixture(game, eps=None, max_rounds=None, *, k_max=None, explicit_guard=None,
                     identity_tolerance=None, cuts_per_round=None, workers=None, trace=None):
    """Mixture-of-products CE by cut generation against the infeasible dual

    Each round solves the restricted program over the current components. When
    it is infeasible the Farkas certificate alpha yields new components from the
    stationary vectors of its chains; each pairs to zero against alpha and so
    cuts it off. The restricted point is accepted as soon as it verifies at eps.
    Pass a MixtureTrace to see the rounds and whether the explicit fallback ran.
    """
    eps = resolve(eps, "default_eps")
    max_rounds = resolve(max_rounds, "mixture_max_rounds")
    k_max = resolve(k_max, "sorted_linear_k_max")
    explicit_guard = resolve(explicit_guard, "explicit_guard")
    identity_tolerance = resolve(identity_tolerance, "identity_tolerance")
    cuts_per_round = resolve(cuts_per_round, "mixture_cuts_per_round")
    trace = MixtureTrace() if trace is None else trace
    if not eps > 0:
        raise GameInputError(f"eps must be positive, got {eps!r}")
    if cuts_per_round < 1:
        raise GameInputError(f"cuts_per_round must be at least 1, got {cuts_per_round!r}")
    if not _has_polynomial_path(game, k_max):
        raise GameInputError(f"{game.aggregator.tag} games have no polynomial expectation path")

    counts = game.strategy_counts
    uniform = ProductDistribution.uniform(counts)
    if not constraint_index(counts):
        trace.accepted_round = 0
        return MixtureDistribution(((1.0, uniform),))

    components = [uniform]
    columns = [regret_from_product(game, uniform, k_max=k_max).vector()]
    rhs = np.full(len(columns[0]), -eps / 2)
    alpha = None
    bound = sum(t * t for t in counts) + 1

    for round_no in range(1, max_rounds + 1):
        A = np.column_stack(columns)
        result = lp_feasibility(A, rhs)
        # a margin of -eps/4 still leaves every restricted row above -3eps/4
        if result.feasible or result.margin >= -eps / 4:
            keep = np.flatnonzero(result.point > 1e-12)
            weights = result.point[keep] / result.point[keep].sum()
            mixture = MixtureDistribution(tuple((float(w), components[k]) for w, k in zip(weights, keep)))
            verification = verify_ce(game, mixture, eps, workers=workers)
            if verification.is_ce:
                if len(mixture.components) > bound:
                    logger.warning(f"Mixture uses {len(mixture.components)} components, above the expected {bound}")
                logger.info(
                    f"Mixture CE after {round_no} rounds: {len(mixture.components)} of {len(components)} components, "
                    f"max_violation {verification.report.max_violation:.3e}"
                )
                trace.accepted_round = round_no
                return mixture
            if result.feasible:
                raise NumericalError(
                    f"restricted program accepted a mixture violating eps by {verification.report.max_violation:.3e}"
                )

        # solver noise would otherwise add spurious transitions
        certificate = np.where(result.certificate > 1e-12, result.certificate, 0.0)
        alpha = DualWeights.from_vector(counts, certificate)
        separation = float(np.max(certificate @ A) - certificate @ rhs)
        cuts = products_from_dual(counts, alpha, cuts_per_round)
        new_columns = [regret_from_product(game, x, k_max=k_max).vector() for x in cuts]
        pairing = max(abs(float(certificate @ g)) for g in new_columns)
        if pairing > identity_tolerance:
            logger.warning(f"Round {round_no}: certificate pairs to {pairing:.3e} against its own cut")
        logger.debug(
            f"Round {round_no}: margin {result.margin:.3e}, separation {separation:.3e}, "
            f"adding {len(cuts)} components to {len(components)}"
        )
        trace.rounds.append(CutRound(round_no, result.margin, separation, pairing, len(cuts)))
        components.extend(cuts)
        columns.extend(new_columns)

    if explicit_program_fits(game, explicit_guard):
        logger.warning(f"No mixture CE within {max_rounds} rounds, falling back to the explicit program")
        trace.fallback = True
        return mixture_from_explicit(solve_ce_explicit(game, guard=explicit_guard), counts)
    raise ConvergenceError(
        f"no mixture CE within {max_rounds} rounds and the explicit program does not fit its guards",
        certificate=alpha,
    )


# ---------------------------------------------------------------------------
# File codecs
# ---------------------------------------------------------------------------

def encode_mixture(mixture):
    return dump_document({
        "components": [
            {"weight": w, "marginals": [m.tolist() for m in x.marginals]} for w, x in mixture.components
        ]
    })


def decode_mixture(data, strategy_counts=None):
    doc = load_document(data)
    components = []
    for k, component in enumerate(require(doc, "components", "$", "list")):
        path = f"$.components[{k}]"
        weight = require(component, "weight", path, "number")
        components.append((float(weight), parse_marginals(component, path)))
    mixture = MixtureDistribution(tuple(components))
    if strategy_counts is not None:
        try:
            mixture.validate(strategy_counts)
        except GameInputError as e:
            raise GameParseError("$.components", str(e))
    return mixture


def decode_distribution(data, strategy_counts):
    """Explicit, mixture or product distribution file, told apart by its top-level key"""
    doc = load_document(data)
    if isinstance(doc, dict) and "atoms" in doc:
        return decode_explicit(data, strategy_counts)
    if isinstance(doc, dict) and "components" in doc:
        return decode_mixture(data, strategy_counts)
    if isinstance(doc, dict) and "marginals" in doc:
        x = parse_marginals(doc, "$")
        try:
            return x.validate(strategy_counts)
        except GameInputError as e:
            raise GameParseError("$.marginals", str(e))
    raise GameParseError("$", "expected one of 'atoms', 'components' or 'marginals'")


def encode_report(report):
    witness = report.witness
    return dump_document({
        "entries": [{"p": p, "i": i, "j": j, "g": g} for p, i, j, g in report.entries()],
        "max_violation": report.max_violation,
        "witness": None if witness is None else dict(zip("pij", witness)),
    })


def decode_report(data, strategy_counts):
    doc = load_document(data)
    tables = [np.zeros((t, t)) for t in strategy_counts]
    for k, entry in enumerate(require(doc, "entries", "$", "list")):
        path = f"$.entries[{k}]"
        p, i, j = (require(entry, key, path, "int") for key in "pij")
        if not (0 <= p < len(strategy_counts) and 0 <= i < strategy_counts[p] and 0 <= j < strategy_counts[p]):
            raise GameParseError(path, f"index ({p}, {i}, {j}) outside the game shape")
        tables[p][i, j] = require(entry, "g", path, "number")
    return RegretReport(strategy_counts, tables)
