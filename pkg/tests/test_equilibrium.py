import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.equilibrium import (
    DualWeights,
    MixtureDistribution,
    MixtureTrace,
    RegretReport,
    constraint_index,
    decode_distribution,
    decode_mixture,
    decode_report,
    encode_mixture,
    encode_report,
    expand_mixture,
    explicit_program_fits,
    lp_feasibility,
    mixture_from_explicit,
    product_from_dual,
    products_from_dual,
    regret_from_explicit,
    regret_from_mixture,
    regret_from_product,
    solve_ce_explicit,
    solve_ce_mixture,
    stationary_distribution,
    stationary_extremes,
    verify_ce,
)
from app.errors import ConvergenceError, GameInputError, GameParseError, ResourceLimitError
from app.game_core import (
    MAX,
    SUM,
    Aggregator,
    ExplicitDistribution,
    ProductDistribution,
    Var,
    encode_explicit,
    encode_product,
    expand_product,
    make_rng,
    random_game,
    random_product_distribution,
)

SEEDS = st.integers(0, 2**32 - 1)


def small_game(seed, aggregator=MAX, max_n=4, max_t=3):
    rng = make_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    counts = tuple(int(t) for t in rng.integers(2, max_t + 1, size=n))
    return random_game(n, counts, 0.0, 1.0, aggregator, seed)


def random_alpha(counts, seed):
    rng = make_rng(seed)
    tables = []
    for t in counts:
        table = rng.uniform(0.0, 1.0, size=(t, t))
        # some chains reducible
        table[rng.uniform(size=(t, t)) < 0.3] = 0.0
        tables.append(table)
    return DualWeights(counts, tables)


def test_constraint_index_size():
    index = constraint_index((2, 3, 1))
    assert len(index) == 2 * 1 + 3 * 2
    assert index[0] == (0, 0, 1)
    assert all(i != j for _, i, j in index)


def test_zero_marginal_gives_zero_row():
    game = random_game(3, (3, 2, 2), 0.0, 1.0, MAX, seed=1)
    x = ProductDistribution(([0.0, 0.4, 0.6], [0.5, 0.5], [0.2, 0.8]))
    report = regret_from_product(game, x)
    assert all(report[0, 0, j] == 0.0 for j in (1, 2))


def test_constant_payoffs_have_no_regret(constant_game):
    game = constant_game(3, (2, 3, 2), value=4.0)
    report = regret_from_explicit(game, expand_product(ProductDistribution.uniform(game.strategy_counts)))
    assert report.max_violation == 0.0
    np.testing.assert_allclose(report.vector(), 0.0, atol=1e-15)


def test_planted_deviation(planted):
    game, d, witness = planted
    report = regret_from_explicit(game, d)
    assert report[witness] == pytest.approx(-0.5, abs=1e-9)
    assert report.max_violation == pytest.approx(0.5, abs=1e-9)

    result = verify_ce(game, d, 1e-6)
    assert not result.is_ce
    assert result.report.witness == witness


def test_product_regret_matches_direct_summation():
    game = random_game(3, (2, 3, 2), -1.0, 1.0, MAX, seed=3)
    x = random_product_distribution(game.strategy_counts, seed=4)
    np.testing.assert_allclose(
        regret_from_product(game, x).vector(),
        regret_from_explicit(game, expand_product(x)).vector(),
        atol=1e-12,
    )


def test_mixture_regret_matches_expansion():
    for seed in range(20):
        game = small_game(seed, max_n=4, max_t=4)
        if game.profile_count > 256:
            continue
        rng = make_rng(seed)
        weights = rng.standard_exponential(3)
        weights /= weights.sum()
        mixture = MixtureDistribution(tuple(
            (float(w), random_product_distribution(game.strategy_counts, seed + 10 * k))
            for k, w in enumerate(weights)
        ))
        np.testing.assert_allclose(
            regret_from_mixture(game, mixture).vector(),
            regret_from_explicit(game, expand_mixture(mixture)).vector(),
            atol=1e-9,
        )


def test_parallel_mixture_regret_is_identical():
    game = random_game(3, (3, 3, 2), 0.0, 1.0, MAX, seed=8)
    mixture = MixtureDistribution(tuple(
        (0.25, random_product_distribution(game.strategy_counts, seed)) for seed in range(4)
    ))
    serial = regret_from_mixture(game, mixture, workers=1).vector()
    parallel = regret_from_mixture(game, mixture, workers=4).vector()
    np.testing.assert_array_equal(serial, parallel)


def test_verify_ce_rejects_bad_input(game_a):
    with pytest.raises(GameInputError):
        verify_ce(game_a, ProductDistribution.uniform(game_a.strategy_counts), eps=-1.0)
    with pytest.raises(GameInputError):
        verify_ce(game_a, MixtureDistribution(((0.5, ProductDistribution.uniform((2, 2, 2))),)))
    with pytest.raises(GameInputError):
        verify_ce(game_a, ExplicitDistribution({(0, 0, 0): 0.7}))


def test_single_strategy_players_have_no_constraints():
    report = RegretReport((1, 1), [np.zeros((1, 1)), np.zeros((1, 1))])
    assert report.witness is None
    assert report.max_violation == 0.0
    assert json.loads(encode_report(report))["witness"] is None


def test_report_codec(planted):
    game, d, witness = planted
    report = regret_from_explicit(game, d)
    doc = json.loads(encode_report(report))
    assert doc["witness"] == {"p": 0, "i": 0, "j": 1}
    assert doc["max_violation"] == pytest.approx(0.5)
    decoded = decode_report(encode_report(report), game.strategy_counts)
    np.testing.assert_array_equal(decoded.vector(), report.vector())
    with pytest.raises(GameParseError):
        decode_report(b'{"entries": [{"p": 0, "i": 0, "j": 5, "g": 1.0}]}', game.strategy_counts)


def test_distribution_file_autodetection():
    counts = (2, 2)
    x = ProductDistribution(([0.5, 0.5], [0.25, 0.75]))
    mixture = MixtureDistribution(((0.5, x), (0.5, ProductDistribution.uniform(counts))))
    assert isinstance(decode_distribution(encode_product(x), counts), ProductDistribution)
    assert isinstance(decode_distribution(encode_explicit(expand_product(x)), counts), ExplicitDistribution)
    decoded = decode_distribution(encode_mixture(mixture), counts)
    assert isinstance(decoded, MixtureDistribution)
    assert decoded.weights.tolist() == [0.5, 0.5]
    with pytest.raises(GameParseError):
        decode_distribution(b'{"profiles": []}', counts)
    with pytest.raises(GameParseError):
        decode_mixture(b'{"components": [{"weight": 0.4, "marginals": [[1.0], [1.0]]}]}', (1, 1))


# ---------------------------------------------------------------------------
# LP feasibility
# ---------------------------------------------------------------------------

def test_lp_feasible_point():
    A = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    result = lp_feasibility(A)
    assert result.feasible
    assert result.point.sum() == pytest.approx(1.0)
    assert np.all(result.point >= 0)
    assert np.all(A @ result.point >= -1e-9)


def test_lp_contradictory_rows_give_certificate():
    A = np.eye(2)
    rhs = np.array([0.6, 0.6])
    result = lp_feasibility(A, rhs)
    assert not result.feasible
    y = result.certificate
    assert np.all(y >= 0)
    assert y.sum() == pytest.approx(1.0)
    # y^T A d < y^T rhs at every vertex of the simplex, hence everywhere on it
    assert np.all(y @ A < y @ rhs)


def test_lp_size_guard():
    with pytest.raises(ResourceLimitError):
        lp_feasibility(np.zeros((5, 3)), max_rows=4)
    with pytest.raises(GameInputError):
        lp_feasibility(np.zeros((2, 0)))


# ---------------------------------------------------------------------------
# Stationary distributions
# ---------------------------------------------------------------------------

def test_zero_chain_is_uniform():
    np.testing.assert_allclose(stationary_distribution(np.zeros((3, 3))), [1 / 3, 1 / 3, 1 / 3])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_two_state_chain(a, b):
    if a + b < 1e-6:
        return
    pi = stationary_distribution(np.array([[0.0, a], [b, 0.0]]))
    np.testing.assert_allclose(pi, [b / (a + b), a / (a + b)], atol=1e-9)


def test_doubly_balanced_chain_is_uniform():
    rates = make_rng(0).uniform(size=(5, 5))
    rates = rates + rates.T
    np.fill_diagonal(rates, 0.0)
    np.testing.assert_allclose(stationary_distribution(rates), np.full(5, 0.2), atol=1e-12)


def test_reducible_chain_averages_closed_classes():
    rates = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 2.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    np.testing.assert_allclose(stationary_distribution(rates), [0.0, 0.5, 1 / 6, 1 / 3], atol=1e-12)

    extremes = sorted(stationary_extremes(rates).tolist())
    np.testing.assert_allclose(extremes, [[0.0, 0.0, 1 / 3, 2 / 3], [0.0, 1.0, 0.0, 0.0]], atol=1e-12)


def test_zero_chain_extremes_are_pure_states():
    extremes = stationary_extremes(np.zeros((3, 3)))
    np.testing.assert_allclose(extremes[np.argsort(extremes.argmax(axis=1))], np.eye(3))


def test_stationary_rejects_bad_rates():
    with pytest.raises(GameInputError):
        stationary_distribution(np.eye(2))
    with pytest.raises(GameInputError):
        stationary_distribution(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(GameInputError):
        stationary_distribution(np.zeros((2, 3)))


@pytest.mark.parametrize("t", [3, 10, 50])
def test_random_chain_residual(t):
    rates = make_rng(t).uniform(size=(t, t))
    np.fill_diagonal(rates, 0.0)
    pi = stationary_distribution(rates)
    generator = rates - np.diag(rates.sum(axis=1))
    assert np.abs(pi @ generator).max() <= 1e-9 * rates.max()
    assert pi.sum() == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(SEEDS)
def test_product_from_dual_pairs_to_zero(seed):
    game = small_game(seed)
    alpha = random_alpha(game.strategy_counts, seed + 1)
    x = product_from_dual(game.strategy_counts, alpha)
    assert abs(alpha.pairing(regret_from_product(game, x))) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(SEEDS, st.integers(1, 40))
def test_every_cut_pairs_to_zero(seed, limit):
    game = small_game(seed)
    alpha = random_alpha(game.strategy_counts, seed + 1)
    cuts = products_from_dual(game.strategy_counts, alpha, limit)
    assert 1 <= len(cuts) <= limit
    assert cuts[0] == product_from_dual(game.strategy_counts, alpha)
    for x in cuts:
        x.validate(game.strategy_counts)
        assert abs(alpha.pairing(regret_from_product(game, x))) <= 1e-8


def test_cuts_from_a_zero_chain_use_pure_strategies():
    counts = (2, 3)
    alpha = DualWeights(counts, [np.zeros((2, 2)), np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])])
    cuts = products_from_dual(counts, alpha, 32)
    # player 0: both pure strategies; player 1: {0, 1} and the absorbing state 2
    assert len(cuts) == 1 + 2 * 2
    marginals = {tuple(tuple(m) for m in x.marginals) for x in cuts[1:]}
    assert ((1.0, 0.0), (0.5, 0.5, 0.0)) in marginals
    assert ((0.0, 1.0), (0.0, 0.0, 1.0)) in marginals

    one_player_at_a_time = products_from_dual(counts, alpha, 4)
    assert len(one_player_at_a_time) == 4
    assert all(np.allclose(x.marginals[1], [0.25, 0.25, 0.5]) for x in one_player_at_a_time[1:3])


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def test_explicit_solver_verifies(game_a):
    d = solve_ce_explicit(game_a)
    assert sum(d.atoms.values()) == pytest.approx(1.0)
    assert verify_ce(game_a, d, 1e-6).is_ce


def test_explicit_solver_guard(game_a):
    with pytest.raises(ResourceLimitError):
        solve_ce_explicit(game_a, guard=4)


def test_random_three_player_max_game_explicit():
    game = random_game(3, (2, 2, 2), 0.0, 1.0, MAX, seed=17)
    assert verify_ce(game, solve_ce_explicit(game), 1e-6).is_ce


def test_constant_game_needs_one_round(constant_game):
    game = constant_game(3, (2, 3, 2))
    mixture = solve_ce_mixture(game, 1e-6)
    assert len(mixture.components) == 1
    assert mixture.components[0][1] == ProductDistribution.uniform(game.strategy_counts)


@settings(max_examples=30, deadline=None)
@given(SEEDS, st.sampled_from([MAX, SUM]))
def test_mixture_solver_closed_loop(seed, aggregator):
    game = small_game(seed, aggregator)
    mixture = solve_ce_mixture(game, 1e-6)
    mixture.validate(game.strategy_counts)
    result = verify_ce(game, mixture, 1e-6)
    assert result.is_ce
    assert np.all(result.report.vector() >= -1e-6)


def test_mixture_solver_rejects_formula_games():
    game = random_game(3, (2, 2, 2), 0.0, 1.0, Aggregator.boolean_formula(Var(0)), seed=0)
    with pytest.raises(GameInputError):
        solve_ce_mixture(game)
    with pytest.raises(GameInputError):
        solve_ce_mixture(small_game(1), eps=0.0)


def test_mixture_solver_falls_back_to_explicit():
    game = random_game(3, (3, 3, 3), 0.0, 1.0, MAX, seed=5)
    trace = MixtureTrace()
    mixture = solve_ce_mixture(game, 1e-6, max_rounds=0, trace=trace)
    assert trace.fallback
    assert trace.accepted_round is None
    assert verify_ce(game, mixture, 1e-6).is_ce
    assert all(max(m.max() for m in x.marginals) == 1.0 for _, x in mixture.components)


def test_mixture_solver_without_fallback_raises():
    game = random_game(3, (3, 3, 3), 0.0, 1.0, MAX, seed=5)
    with pytest.raises(ConvergenceError) as info:
        solve_ce_mixture(game, 1e-6, max_rounds=0, explicit_guard=1)
    assert info.value.certificate is None


def test_fallback_needs_the_explicit_program_to_fit_the_solver():
    # 27000 profiles pass the profile guard, 2610 rows do not fit the dense solver
    game = random_game(3, (30, 30, 30), 0.0, 1.0, MAX, seed=3)
    assert game.profile_count <= 100_000
    assert not explicit_program_fits(game)
    with pytest.raises(ConvergenceError):
        solve_ce_mixture(game, 1e-6, max_rounds=0)
    with pytest.raises(ResourceLimitError):
        solve_ce_explicit(game)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4, 5])
def test_each_round_cuts_off_its_certificate(seed, monkeypatch):
    from app import equilibrium

    calls = []
    original = equilibrium.lp_feasibility

    def recording(A, rhs=None, **kwargs):
        result = original(A, rhs, **kwargs)
        calls.append((np.array(A), np.array(rhs), result))
        return result

    monkeypatch.setattr(equilibrium, "lp_feasibility", recording)
    game = small_game(seed)
    trace = MixtureTrace()
    mixture = solve_ce_mixture(game, 1e-6, explicit_guard=0, trace=trace)
    assert verify_ce(game, mixture, 1e-6).is_ce
    assert len(calls) == len(trace.rounds) + 1
    assert trace.accepted_round == len(calls)

    for (A, rhs, result), (next_A, _, _), cut in zip(calls, calls[1:], trace.rounds):
        assert not result.feasible
        certificate = np.where(result.certificate > 1e-12, result.certificate, 0.0)
        new_columns = next_A[:, A.shape[1]:]
        assert new_columns.shape[1] == cut.added >= 1
        np.testing.assert_array_equal(next_A[:, :A.shape[1]], A)
        assert np.abs(certificate @ new_columns).max() <= 1e-8
        separation = float((certificate @ A).max() - certificate @ rhs)
        assert separation < 0
        assert separation == pytest.approx(result.margin, abs=1e-7)
        assert separation == pytest.approx(cut.separation)
        assert cut.pairing <= 1e-8


def test_point_mass_mixture_matches_explicit(planted):
    game, d, _ = planted
    mixture = mixture_from_explicit(d, game.strategy_counts)
    np.testing.assert_allclose(
        regret_from_mixture(game, mixture).vector(), regret_from_explicit(game, d).vector(), atol=1e-12
    )


@pytest.mark.slow
def test_closed_loop_acceptance_run():
    for seed in range(100):
        for aggregator in (MAX, SUM):
            game = small_game(seed, aggregator)
            trace = MixtureTrace()
            mixture = solve_ce_mixture(game, 1e-6, max_rounds=200, trace=trace)
            assert not trace.fallback, (seed, aggregator.tag)
            assert trace.accepted_round <= 200
            assert verify_ce(game, mixture, 1e-6).is_ce, seed
            assert verify_ce(game, solve_ce_explicit(game), 1e-6).is_ce, seed


@pytest.mark.slow
def test_zero_pairing_acceptance_run():
    for seed in range(200):
        game = small_game(seed, max_n=5, max_t=4)
        alpha = random_alpha(game.strategy_counts, seed)
        x = product_from_dual(game.strategy_counts, alpha)
        assert abs(alpha.pairing(regret_from_product(game, x))) <= 1e-8, seed
