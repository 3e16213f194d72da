"""Expected utility of a player under a product distribution.

Sum uses linearity of expectation; Max runs the descending sweep over every
(opponent, action) payoff with a residual CDF per opponent; Min is the Max
sweep on negated payoffs; sorted-linear aggregators with few leading terms
enumerate the top-K tuples; everything else falls back to enumerating
opponent profiles.
"""

import heapq
import math
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from app.errors import GameInputError, ResourceLimitError
from app.game_core import AggregatorKind, check_player, iter_profile_blocks
from app.utils import resolve

logger = logging.getLogger("polymatrix_ce.expectation")

MARGINAL_TOLERANCE = 1e-9


class SweepEntry(NamedTuple):
    """One candidate payoff u_q(j) = U_pq(i, j) with its probability x_q(j)"""
    opponent: int
    action: int
    value: float
    probability: float

    @property
    def key(self):
        # Compared descending; player and action indices make every key distinct
        return (self.value, -self.opponent, -self.action)


@dataclass(frozen=True)
class SweepState:
    residuals: dict
    threshold: tuple


@dataclass(frozen=True)
class SweepTrace:
    """Processing order and the residual CDF c_q before every step of a sweep"""
    order: tuple
    opponents: tuple
    residuals: np.ndarray
    final_residuals: np.ndarray
    total: float

    def state(self, step):
        return SweepState(
            residuals=dict(zip(self.opponents, self.residuals[step].tolist())),
            threshold=self.order[step].key,
        )


@dataclass(frozen=True)
class ConditionalExpectations:
    """e[i]: expected utility of player p when p plays i and opponents draw from x"""
    player: int
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return float(self.values[i])


# ---------------------------------------------------------------------------
# Sweep core
# ---------------------------------------------------------------------------

def _sweep_core(values, slots, actions, probs, n_slots):
    """Sort entries by descending key and tabulate residuals and step weights

    Returns (order, residual_before, weights) where residual_before[t, k] is c_k
    just before step t and weights[t] = x_{q*}(j) * prod_{q != q*} c_q.
    """
    order = np.lexsort((actions, slots, -values))
    slot_seq = slots[order]
    prob_seq = probs[order]
    steps = np.arange(len(order))

    mass = np.zeros((len(order), n_slots))
    mass[steps, slot_seq] = prob_seq
    residual_before = 1.0 - (np.cumsum(mass, axis=0) - mass)

    others = residual_before.copy()
    others[steps, slot_seq] = 1.0
    weights = prob_seq * np.prod(others, axis=1)
    return order, residual_before, weights


def _entry_arrays(entries, marginals):
    for q, marginal in marginals.items():
        total = float(np.sum(marginal))
        if abs(total - 1.0) > MARGINAL_TOLERANCE:
            raise GameInputError(f"marginal of opponent {q} sums to {total!r}, not 1")
    opponents = tuple(sorted({e.opponent for e in entries} | set(marginals)))
    slot_of = {q: k for k, q in enumerate(opponents)}
    values = np.array([e.value for e in entries], dtype=float)
    slots = np.array([slot_of[e.opponent] for e in entries], dtype=np.intp)
    actions = np.array([e.action for e in entries], dtype=np.intp)
    probs = np.array([e.probability for e in entries], dtype=float)
    return opponents, values, slots, actions, probs


def sweep_trace(entries, marginals):
    """Run the descending sweep and keep every intermediate residual"""
    entries = list(entries)
    opponents, values, slots, actions, probs = _entry_arrays(entries, marginals)
    order, residual_before, weights = _sweep_core(values, slots, actions, probs, len(opponents))

    final = np.ones(len(opponents))
    np.subtract.at(final, slots, probs)
    return SweepTrace(
        order=tuple(entries[t] for t in order),
        opponents=opponents,
        residuals=residual_before,
        final_residuals=final,
        total=float(np.dot(values[order], weights)),
    )


def max_sweep(entries, marginals):
    """E[max_q u_q(s_q)] over independent opponents, one pass in descending key order"""
    entries = list(entries)
    opponents, values, slots, actions, probs = _entry_arrays(entries, marginals)
    order, _, weights = _sweep_core(values, slots, actions, probs, len(opponents))
    return float(np.dot(values[order], weights))


def max_sweep_by_heads(entries, marginals):
    """The same expectation, popping the largest head of per-opponent sorted lists"""
    lists = {}
    for e in entries:
        lists.setdefault(e.opponent, []).append(e)
    for q, marginal in marginals.items():
        if abs(float(np.sum(marginal)) - 1.0) > MARGINAL_TOLERANCE:
            raise GameInputError(f"marginal of opponent {q} sums to {float(np.sum(marginal))!r}, not 1")
        lists.setdefault(q, [])
    for q in lists:
        lists[q].sort(key=lambda e: e.key, reverse=True)

    residual = {q: 1.0 for q in lists}
    heads = [(-rows[0].value, q, rows[0].action, 0) for q, rows in lists.items() if rows]
    heapq.heapify(heads)
    total = 0.0
    while heads:
        _, q_star, _, position = heapq.heappop(heads)
        entry = lists[q_star][position]
        weight = entry.probability
        for q, c in residual.items():
            if q != q_star:
                weight *= c
        total += entry.value * weight
        residual[q_star] -= entry.probability
        if position + 1 < len(lists[q_star]):
            nxt = lists[q_star][position + 1]
            heapq.heappush(heads, (-nxt.value, q_star, nxt.action, position + 1))
    return total


def sweep_entries(game, p, i, x):
    """Every (opponent, action) entry seen by player p playing action i"""
    return [
        SweepEntry(q, j, float(game.payoffs[(p, q)][i, j]), float(x.marginals[q][j]))
        for q in game.opponents(p)
        for j in range(game.strategy_counts[q])
    ]


class _ActionLayout:
    """Flattened view of player p's payoff rows against all opponents"""

    def __init__(self, game, p, x):
        opponents = game.opponents(p)
        counts = [game.strategy_counts[q] for q in opponents]
        self.n_slots = len(opponents)
        self.rows = np.hstack([game.payoffs[(p, q)] for q in opponents])
        self.slots = np.repeat(np.arange(self.n_slots), counts)
        self.actions = np.concatenate([np.arange(t) for t in counts])
        self.probs = np.concatenate([x.marginals[q] for q in opponents])

    def sweep(self, i, sign=1.0):
        values = sign * self.rows[i]
        order, _, weights = _sweep_core(values, self.slots, self.actions, self.probs, self.n_slots)
        return sign * float(np.dot(values[order], weights))


# ---------------------------------------------------------------------------
# Sorted-linear top-K enumeration
# ---------------------------------------------------------------------------

def topk_expectation(game, p, i, x, coeffs=None, *, k_max=None):
    """Exact expectation of a sorted-linear aggregate with K leading terms, given p plays i"""
    k_max = resolve(k_max, "sorted_linear_k_max")
    coeffs = np.asarray(game.aggregator.coeffs if coeffs is None else coeffs, dtype=float)
    nonzero = np.flatnonzero(coeffs)
    K = int(nonzero[-1]) + 1 if len(nonzero) else 0
    if K > k_max:
        raise ResourceLimitError(f"sorted_linear with {K} leading terms exceeds K_max = {k_max}")
    if K > game.n - 1:
        raise GameInputError(f"{K} leading terms but only {game.n - 1} opponents")
    if K == 0:
        return 0.0

    layout = _ActionLayout(game, p, x)
    values = layout.rows[i]
    order, residual, _ = _sweep_core(values, layout.slots, layout.actions, layout.probs, layout.n_slots)
    v = values[order]
    slots = layout.slots[order]
    probs = layout.probs[order]
    steps = len(order)

    def extend(start, depth, chosen, prefix_value, prefix_prob):
        if depth == K - 1:
            candidates = np.arange(start, steps)
            candidates = candidates[~np.isin(slots[candidates], chosen)]
            if not len(candidates):
                return 0.0
            others = residual[candidates].copy()
            others[:, chosen] = 1.0
            others[np.arange(len(candidates)), slots[candidates]] = 1.0
            weights = prefix_prob * probs[candidates] * np.prod(others, axis=1)
            return float(np.dot(prefix_value + coeffs[depth] * v[candidates], weights))

        total = 0.0
        for pos in range(start, steps):
            if slots[pos] in chosen or probs[pos] == 0.0:
                continue
            total += extend(
                pos + 1,
                depth + 1,
                chosen + [int(slots[pos])],
                prefix_value + coeffs[depth] * v[pos],
                prefix_prob * probs[pos],
            )
        return total

    return extend(0, 0, [], 0.0, 1.0)


# ---------------------------------------------------------------------------
# Enumeration oracle
# ---------------------------------------------------------------------------

def _conditional_brute(game, p, x, guard):
    opponents = game.opponents(p)
    counts = tuple(game.strategy_counts[q] for q in opponents)
    if math.prod(counts) > guard:
        raise ResourceLimitError(
            f"{math.prod(counts)} opponent profiles exceed the enumeration guard {guard}"
        )
    t_p = game.strategy_counts[p]
    values = np.zeros(t_p)
    for block in iter_profile_blocks(counts):
        prob = np.ones(len(block))
        for k, q in enumerate(opponents):
            prob *= x.marginals[q][block[:, k]]
        for i in range(t_p):
            payoffs = np.empty((len(block), len(opponents)))
            for k, q in enumerate(opponents):
                payoffs[:, k] = game.payoffs[(p, q)][i, block[:, k]]
            values[i] += float(np.dot(prob, game.aggregator.apply_rows(payoffs)))
    return values


def brute_expectation(game, p, x, *, guard=None):
    """Sum over every profile of x(s) * U(z, p, s); the testing oracle for every aggregator"""
    guard = resolve(guard, "enumeration_guard")
    check_player(game, p)
    x.validate(game.strategy_counts)
    if game.profile_count > guard:
        raise ResourceLimitError(f"{game.profile_count} profiles exceed the enumeration guard {guard}")
    conditional = _conditional_brute(game, p, x, guard)
    return float(np.dot(x.marginals[p], conditional))


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def conditional_action_expectations(game, p, x, *, k_max=None, guard=None):
    """Expected utility of player p for each of p's actions, dispatched on the aggregator"""
    k_max = resolve(k_max, "sorted_linear_k_max")
    guard = resolve(guard, "enumeration_guard")
    check_player(game, p)
    x.validate(game.strategy_counts)

    kind = game.aggregator.kind
    t_p = game.strategy_counts[p]
    if kind is AggregatorKind.SUM:
        path = "linearity"
        values = np.zeros(t_p)
        for q in game.opponents(p):
            values += game.payoffs[(p, q)] @ x.marginals[q]
    elif kind in (AggregatorKind.MAX, AggregatorKind.MIN):
        path = "sweep"
        sign = 1.0 if kind is AggregatorKind.MAX else -1.0
        layout = _ActionLayout(game, p, x)
        values = np.array([layout.sweep(i, sign) for i in range(t_p)])
    elif kind is AggregatorKind.SORTED_LINEAR and game.aggregator.leading_terms <= k_max:
        path = f"top-{game.aggregator.leading_terms}"
        values = np.array([topk_expectation(game, p, i, x, k_max=k_max) for i in range(t_p)])
    else:
        path = "enumeration"
        try:
            values = _conditional_brute(game, p, x, guard)
        except ResourceLimitError as e:
            if kind is AggregatorKind.SORTED_LINEAR:
                raise ResourceLimitError(
                    f"sorted_linear with {game.aggregator.leading_terms} leading terms exceeds K_max = {k_max} "
                    f"and {e}"
                )
            raise

    logger.debug(f"Conditional expectations for player {p} via {path} ({game.aggregator.tag}, {t_p} actions)")
    return ConditionalExpectations(p, values)


def expected_utility(game, p, x, *, k_max=None, guard=None):
    """Player p's expected utility under the product distribution x"""
    conditional = conditional_action_expectations(game, p, x, k_max=k_max, guard=guard)
    return float(np.dot(x.marginals[p], conditional.values))


def expected_utilities(game, x, *, k_max=None, guard=None):
    """Every player's expected utility under x"""
    return np.array([expected_utility(game, p, x, k_max=k_max, guard=guard) for p in range(game.n)])
