"""Winner selection: thresholds, windows, selectors, stage bounds."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stagevote.ballot import Ballot, CandidateRoster
from stagevote.select import (
    BetaMode,
    EmptyPoolError,
    EmptyTableError,
    GammaMode,
    GammaRule,
    MissingNullColumnError,
    SelectionConfig,
    Selector,
    StageWindow,
    basic_winner,
    beta_gamma_winner,
    betagamma_report,
    min_stages,
    parse_gamma_spec,
    parse_selector,
    select_stage,
    stage_window,
)
from stagevote.tally import StageStats

from conftest import make_score_table, pipeline


class TestBasicWinner:
    def test_concrete_example(self, concrete_tables):
        _, _, table = concrete_tables
        decision = basic_winner(table, 0.5)
        assert decision.winner == "X"
        assert decision.stage == 2
        assert decision.score == 100
        assert decision.diagnostics["fallback"] is False

    def test_unanimity(self):
        table = make_score_table(["A", "B", "NULL"], [[100, 0, 0]])
        decision = basic_winner(table, 0.5)
        assert (decision.winner, decision.stage, decision.score) == ("A", 1, 100)

    def test_fallback_when_nothing_crosses(self):
        table = make_score_table(["A", "B", "NULL"], [[30, 20, 10], [45, 40, 15]])
        decision = basic_winner(table, 0.5)
        assert decision.winner == "A"
        assert decision.stage == 2
        assert decision.score == 45
        assert decision.diagnostics["fallback"] is True

    def test_ties_break_by_sorted_order(self):
        # B and A tie at the crossing stage; B leads on the later stage.
        table = make_score_table(["A", "B", "NULL"], [[60, 60, 0], [60, 80, 0]])
        assert basic_winner(table, 0.5).winner == "B"

    def test_empty_table_rejected(self):
        table = make_score_table(["A"], [])
        with pytest.raises(EmptyTableError):
            basic_winner(table, 0.5)


class TestStageWindow:
    def test_beta_crossing_excluded_by_default(self, beta_tables):
        _, _, table = beta_tables
        cfg = SelectionConfig(alpha=0.5, beta=0.3333)
        window = stage_window(table, cfg, "NULL")
        assert window.first_by_alpha == 2
        assert window.last_by_beta == 2
        assert window.pool == (2,)

    def test_stop_before_keeps_crossing_stage(self, beta_tables):
        _, _, table = beta_tables
        cfg = SelectionConfig(alpha=0.5, beta=0.3333,
                              beta_mode=BetaMode.STOP_BEFORE)
        window = stage_window(table, cfg, "NULL")
        assert window.last_by_beta == 3
        assert window.pool == (2, 3)

    def test_unconstrained_window_runs_to_last_stage(self):
        table = make_score_table(
            ["A", "B", "NULL"],
            [[40, 30, 0], [60, 50, 10], [80, 70, 20], [100, 100, 30]],
        )
        cfg = SelectionConfig(alpha=0.5)
        window = stage_window(table, cfg, "NULL")
        assert window.first_by_alpha == 2
        assert window.last_by_beta is None
        assert window.last_by_gamma is None
        assert window.pool == (2, 3, 4)

    def test_empty_pool_when_beta_cuts_first(self):
        table = make_score_table(
            ["A", "B", "NULL"], [[40, 0, 60], [100, 40, 60], [100, 100, 100]],
            n=10,
        )
        cfg = SelectionConfig(alpha=0.5, beta=0.3333)
        window = stage_window(table, cfg, "NULL")
        assert window.last_by_beta == 0
        assert window.first_by_alpha == 2
        assert window.pool == ()

    def test_gamma_crossing_stage_stays_usable(self):
        # The runaway stage is the stopping stage, not past it.
        table = make_score_table(
            ["A", "B", "NULL"], [[40, 30, 0], [75, 60, 0], [90, 80, 0]],
        )
        cfg = SelectionConfig(alpha=0.5, gamma=GammaRule.any_exceeds(0.6666))
        window = stage_window(table, cfg, "NULL")
        assert window.last_by_gamma == 2
        assert window.pool == (2,)

    def test_gamma_exclude_mode(self):
        table = make_score_table(
            ["A", "B", "NULL"], [[40, 30, 0], [60, 55, 0], [90, 80, 0]],
        )
        cfg = SelectionConfig(alpha=0.5, gamma=GammaRule.any_exceeds(0.6666),
                              gamma_mode=GammaMode.EXCLUDE_STAGE)
        window = stage_window(table, cfg, "NULL")
        assert window.last_by_gamma == 2
        assert window.pool == (2,)

    def test_alpha_stage_requires_null_not_above(self):
        # A crosses alpha on stage 2 but NULL scores strictly higher there.
        table = make_score_table(
            ["A", "B", "NULL"], [[30, 20, 40], [55, 30, 60], [80, 75, 60]],
        )
        window = stage_window(table, SelectionConfig(alpha=0.5, beta=0.9), "NULL")
        assert window.first_by_alpha == 3

    def test_missing_null_column(self):
        table = make_score_table(["A", "B"], [[60, 40]])
        with pytest.raises(MissingNullColumnError):
            stage_window(table, SelectionConfig(alpha=0.5), "NULL")


class TestGammaRule:
    def test_any_variant(self):
        rule = GammaRule.any_exceeds(0.8)
        assert not rule.fires([80.0, 10.0])  # strict: 80 does not exceed 80
        assert rule.fires([80.1, 10.0])

    def test_fraction_variant(self):
        rule = GammaRule.fraction_exceeds(0.9, 0.5)
        assert not rule.fires([95.0, 10.0, 10.0, 10.0])
        assert rule.fires([95.0, 95.0, 10.0, 10.0])

    def test_count_variant(self):
        rule = GammaRule.count_exceeds(0.95, 2)
        assert not rule.fires([96.0, 10.0, 10.0])
        assert rule.fires([96.0, 97.0, 10.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            GammaRule.any_exceeds(1.5)
        with pytest.raises(ValueError):
            GammaRule.fraction_exceeds(0.9, 0.0)
        with pytest.raises(ValueError):
            GammaRule.count_exceeds(0.9, 0)

    def test_parse_spec(self):
        assert parse_gamma_spec(None) == GammaRule.none()
        assert parse_gamma_spec("any:0.6666") == GammaRule.any_exceeds(0.6666)
        assert parse_gamma_spec("frac:0.5:0.9") == GammaRule.fraction_exceeds(0.9, 0.5)
        assert parse_gamma_spec("count:2:0.95") == GammaRule.count_exceeds(0.95, 2)
        assert parse_gamma_spec(0.8) == GammaRule.any_exceeds(0.8)
        with pytest.raises(ValueError):
            parse_gamma_spec("weird:1:2:3")


class TestSelectStage:
    def _window(self, pool):
        return StageWindow(first_by_alpha=pool[0], last_by_beta=None,
                           last_by_gamma=None, num_stages=max(pool),
                           pool=tuple(pool))

    def test_singleton_pool_all_selectors_agree(self):
        window = self._window([2])
        stats = StageStats(entropy=(0.5, 1.0), variance=(10.0, 20.0))
        for selector in Selector:
            assert select_stage(window, selector, stats) == 2

    def test_min_entropy_direct(self):
        window = self._window([2, 3])
        stats = StageStats(entropy=(None, 1.0, 2.0), variance=(0.0, 1.0, 4.0))
        assert select_stage(window, Selector.MIN_ENTROPY, stats) == 2
        assert select_stage(window, Selector.MAX_ENTROPY, stats) == 3
        assert select_stage(window, Selector.MIN_VARIANCE, stats) == 2
        assert select_stage(window, Selector.MAX_VARIANCE, stats) == 3

    def test_exact_ties_pick_earliest(self):
        window = self._window([1, 2, 3])
        stats = StageStats(entropy=(1.0, 1.0, 1.0), variance=(2.0, 2.0, 2.0))
        for selector in (Selector.MIN_ENTROPY, Selector.MAX_ENTROPY,
                         Selector.MIN_VARIANCE, Selector.MAX_VARIANCE,
                         Selector.MAX_STDDEV):
            assert select_stage(window, selector, stats) == 1

    def test_empty_pool(self):
        window = StageWindow(first_by_alpha=None, last_by_beta=0,
                             last_by_gamma=None, num_stages=3, pool=())
        stats = StageStats(entropy=(1.0,) * 3, variance=(1.0,) * 3)
        with pytest.raises(EmptyPoolError):
            select_stage(window, Selector.FIRST, stats)

    @given(st.lists(st.floats(min_value=0, max_value=5000), min_size=1,
                    max_size=8))
    def test_max_stddev_equals_max_variance(self, variances):
        pool = tuple(range(1, len(variances) + 1))
        window = self._window(list(pool))
        stats = StageStats(entropy=(1.0,) * len(variances),
                           variance=tuple(variances))
        assert (select_stage(window, Selector.MAX_STDDEV, stats)
                == select_stage(window, Selector.MAX_VARIANCE, stats))


class TestBetaGammaWinner:
    def test_discontent_profile_every_selector(self, beta_tables):
        _, _, table = beta_tables
        for selector in Selector:
            cfg = SelectionConfig(alpha=0.5, beta=0.3333, selector=selector)
            decision = beta_gamma_winner(table, cfg, "NULL")
            assert decision.winner == "A"
            assert decision.stage == 2
            assert decision.score == 65

    def test_alpha_stop_null_strictly_best_walks_back(self):
        table = make_score_table(
            ["A", "B", "C", "D", "NULL"],
            [[25, 25, 25, 25, 0], [65, 55, 40, 40, 0], [70, 60, 55, 55, 80]],
        )
        cfg = SelectionConfig(alpha=0.5, selector=Selector.LAST)
        decision = beta_gamma_winner(table, cfg, "NULL")
        assert decision.winner == "A"
        assert decision.stage == 2
        assert decision.score == 65
        assert decision.diagnostics["walked_back_from"] == 3

    def test_alpha_stop_null_not_best_decides_at_stop(self):
        table = make_score_table(
            ["A", "B", "C", "D", "NULL"],
            [[25, 25, 25, 25, 0], [65, 55, 40, 40, 0], [85, 60, 55, 55, 80]],
        )
        cfg = SelectionConfig(alpha=0.5, selector=Selector.LAST)
        decision = beta_gamma_winner(table, cfg, "NULL")
        assert decision.winner == "A"
        assert decision.stage == 3
        assert decision.score == 85

    def test_empty_window_elects_null(self):
        table = make_score_table(
            ["A", "B", "NULL"], [[40, 0, 60], [100, 40, 60], [100, 100, 100]],
            n=10,
        )
        cfg = SelectionConfig(alpha=0.5, beta=0.3333)
        decision = beta_gamma_winner(table, cfg, "NULL")
        assert decision.winner == "NULL"
        assert decision.stage is None
        assert decision.score is None
        assert decision.window.pool == ()

    def test_missing_null_column(self):
        table = make_score_table(["A", "B"], [[60, 40]])
        with pytest.raises(MissingNullColumnError):
            beta_gamma_winner(table, SelectionConfig(alpha=0.5), "NULL")

    def test_report_fields(self, beta_tables):
        _, _, table = beta_tables
        cfg = SelectionConfig(alpha=0.5, beta=0.3333)
        decision = beta_gamma_winner(table, cfg, "NULL")
        report = betagamma_report(decision, cfg, "NULL")
        assert report["winner"] == "A"
        assert report["firstStageByAlpha"] == 2
        assert report["lastStageByBeta"] == 2
        assert report["lastStageByGamma"] is None
        assert report["bestScoreStage"] == 2
        assert report["bestScoreByAlpha"] == 65.0
        assert report["alpha"] == 0.5
        assert report["beta"] == 0.3333


def _window_oracle(table, cfg, null_id):
    """Independent per-stage predicate scan (no early exits)."""
    rows = table.float_rows()
    nj = table.candidates.index(null_id)
    stages = range(1, table.num_stages + 1)
    bar_a = 100.0 * cfg.alpha

    alpha_ok = [
        i for i in stages
        if any(v > bar_a and rows[i - 1][nj] <= v
               for j, v in enumerate(rows[i - 1]) if j != nj)
    ]
    first = min(alpha_ok) if alpha_ok else None

    if cfg.beta is not None:
        crossed = [i for i in stages if rows[i - 1][nj] > 100.0 * cfg.beta]
        if not crossed:
            last_b = None
        elif cfg.beta_mode is BetaMode.STOP_BEFORE:
            last_b = min(crossed)
        else:
            last_b = min(crossed) - 1
    else:
        crossed = [i for i in stages if rows[i - 1][nj] > bar_a]
        last_b = min(crossed) if crossed else None

    if cfg.gamma.enabled:
        fired = [i for i in stages if cfg.gamma.fires(rows[i - 1])]
        if not fired:
            last_g = None
        elif cfg.gamma_mode is GammaMode.STOP_AT_STAGE:
            last_g = min(fired)
        else:
            last_g = min(fired) - 1
    else:
        last_g = None

    bounds = [b for b in (last_b, last_g) if b is not None]
    end = min(bounds + [table.num_stages])
    if first is None or first > end:
        pool = ()
    else:
        pool = tuple(range(first, end + 1))
    return first, last_b, last_g, pool


def _random_table(rng, k=None, stages=None, n=None):
    k = k or rng.randint(2, 5)
    names = tuple([f"K{i}" for i in range(k - 1)] + ["NULL"])
    roster = CandidateRoster(names, null_id="NULL")
    num_prefs = stages or rng.randint(1, k)
    n = n or rng.randint(1, 12)
    ballots = []
    for i in range(n):
        length = rng.randint(0, num_prefs)
        prefs = tuple(rng.sample(names, length))
        ballots.append(Ballot(f"v{i}", prefs))
    _, _, table = pipeline(roster, ballots, num_prefs)
    return table


def test_window_matches_brute_force_scan():
    rng = random.Random(20210905)
    selectors = list(Selector)
    for trial in range(300):
        table = _random_table(rng)
        cfg = SelectionConfig(
            alpha=rng.choice([0.2, 0.5, 0.66, 0.8]),
            beta=rng.choice([None, 0.2, 0.33, 0.6]),
            gamma=rng.choice([GammaRule.none(), GammaRule.any_exceeds(0.66),
                              GammaRule.fraction_exceeds(0.8, 0.5),
                              GammaRule.count_exceeds(0.7, 2)]),
            selector=rng.choice(selectors),
            beta_mode=rng.choice(list(BetaMode)),
            gamma_mode=rng.choice(list(GammaMode)),
        )
        window = stage_window(table, cfg, "NULL")
        expected = _window_oracle(table, cfg, "NULL")
        assert (window.first_by_alpha, window.last_by_beta,
                window.last_by_gamma, window.pool) == expected


def test_winner_threshold_soundness():
    rng = random.Random(994422)
    for trial in range(300):
        table = _random_table(rng)
        cfg = SelectionConfig(
            alpha=rng.choice([0.3, 0.5, 0.66]),
            beta=rng.choice([None, 0.33, 0.7]),
            gamma=rng.choice([GammaRule.none(), GammaRule.any_exceeds(0.8)]),
            selector=rng.choice(list(Selector)),
        )
        decision = beta_gamma_winner(table, cfg, "NULL")
        if decision.winner == "NULL" and decision.stage is None:
            assert decision.window.pool == ()
            continue
        assert decision.stage in decision.window.pool
        assert float(decision.score) > 100.0 * cfg.alpha


def test_scale_invariance():
    rng = random.Random(7)
    roster = CandidateRoster(("A", "B", "C", "NULL"), null_id="NULL")
    for trial in range(40):
        ballots = []
        for i in range(rng.randint(1, 8)):
            length = rng.randint(0, 3)
            ballots.append(Ballot(f"v{i}", tuple(rng.sample(roster.candidates, length))))
        cfg = SelectionConfig(alpha=0.5, beta=rng.choice([None, 0.33]),
                              selector=rng.choice(list(Selector)))
        _, _, small = pipeline(roster, ballots, 3)
        _, _, big = pipeline(roster, ballots * 5, 3)
        d1 = beta_gamma_winner(small, cfg, "NULL")
        d2 = beta_gamma_winner(big, cfg, "NULL")
        assert (d1.winner, d1.stage, d1.score) == (d2.winner, d2.stage, d2.score)


def test_basic_equals_windowed_first_when_null_not_strict_max():
    rng = random.Random(31337)
    cfg = SelectionConfig(alpha=0.5, selector=Selector.FIRST)
    checked = 0
    for trial in range(400):
        table = _random_table(rng)
        basic = basic_winner(table, 0.5)
        if basic.diagnostics["fallback"]:
            continue
        row = table.float_rows()[basic.stage - 1]
        nj = table.candidates.index("NULL")
        top = max(row)
        if row[nj] == top:  # NULL tied or strict max: semantics diverge
            continue
        windowed = beta_gamma_winner(table, cfg, "NULL")
        assert (windowed.winner, windowed.stage) == (basic.winner, basic.stage)
        checked += 1
    assert checked > 50


class TestMinStages:
    def test_worked_example(self):
        assert min_stages(100, 5, 0.5) == 3

    def test_tiny_alpha(self):
        assert min_stages(10, 2, 0.01) == 1

    def test_two_thirds_of_twenty(self):
        # smallest x with x > 13.2
        assert min_stages(1, 20, 0.66) == 14

    def test_exact_product_needs_next_integer(self):
        assert min_stages(50, 4, 0.5) == 3  # x > 2.0

    def test_validation(self):
        with pytest.raises(ValueError):
            min_stages(10, 0, 0.5)
        with pytest.raises(ValueError):
            min_stages(10, 5, 0.0)
        with pytest.raises(ValueError):
            min_stages(10, 5, 1.0)

    @given(st.integers(min_value=1, max_value=200),
           st.floats(min_value=1e-9, max_value=1 - 1e-9))
    @settings(max_examples=300)
    def test_least_integer_property(self, k, alpha):
        x = min_stages(1, k, alpha)
        assert x > alpha * k
        assert x - 1 <= alpha * k


class TestParsing:
    def test_parse_selector_aliases(self):
        assert parse_selector("min-entropy") is Selector.MIN_ENTROPY
        assert parse_selector("MaxStDev") is Selector.MAX_STDDEV
        assert parse_selector("first") is Selector.FIRST
        with pytest.raises(ValueError):
            parse_selector("median")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SelectionConfig(alpha=1.5)
        with pytest.raises(ValueError):
            SelectionConfig(alpha=0.5, beta=0.0)

    def test_labels(self):
        cfg = SelectionConfig(alpha=0.5, beta=0.33,
                              gamma=GammaRule.any_exceeds(0.66),
                              selector=Selector.MIN_ENTROPY)
        assert cfg.label() == "<α=0.50, β=0.33, γ=0.66, MinEntropy>"
        assert SelectionConfig(alpha=0.8).label() == "<α=0.80, β=____, γ=____, First>"
