import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from iteravg.strategies import (
    default_window_width,
    greedy_optimal_strategy,
    heat_exchanger_simulate,
    moving_window_strategy,
    naive_strategy,
)
from iteravg.tank_core import Average, Color, Pair, TankConfig, run_strategy, transferred_to_blue


def pre_average(n, k=None):
    strategy = naive_strategy(n, False) if k is None else moving_window_strategy(n, k, False)
    return run_strategy(TankConfig.full_empty(n, exact=True), strategy)


def test_naive_one():
    s = naive_strategy(1)
    assert list(s) == [Pair(0, 1), Average(((0,),)), Average(((1,),))]
    assert run_strategy(TankConfig.full_empty(1, exact=True), s).levels == (F(1, 2), F(1, 2))


def test_naive_two_counts():
    s = naive_strategy(2)
    assert len(s.pairs()) == 4 and len(s) == 6
    assert run_strategy(TankConfig.full_empty(2, exact=True), s).levels[:2] == (F(3, 8), F(3, 8))


def test_naive_zero_is_empty():
    assert len(naive_strategy(0)) == 0


def test_window_two_two_trace():
    assert pre_average(2, 2).levels == (F(1, 4), F(1), F(1, 2), F(1, 4))


def test_window_full_width_is_first_pass():
    n = 5
    assert moving_window_strategy(n, n, False).pairs() == naive_strategy(n, False).pairs()[:n]


def test_window_first_reds_bounded():
    levels = pre_average(4, 2).levels
    assert all(v <= F(1, 3) for v in levels[:3])
    assert levels[3] == 1


@pytest.mark.parametrize("k", [0, 5])
def test_window_bad_width(k):
    with pytest.raises(ValueError):
        moving_window_strategy(4, k)


@pytest.mark.parametrize("n,k", [(2, 2), (100, 10), (10_000, 100), (1, 1)])
def test_default_width(n, k):
    assert default_window_width(n) == k


def test_default_width_needs_tanks():
    with pytest.raises(ValueError):
        default_window_width(0)


def test_greedy_no_work_when_sorted():
    cfg = TankConfig([F(1, 2)] * 4, [Color.BLUE, Color.BLUE, Color.RED, Color.RED])
    assert len(greedy_optimal_strategy(cfg)) == 0
    # reds left of blues at equal level: ties already put blue first
    cfg = TankConfig.from_colored([F(1, 2)] * 2, [F(1, 2)] * 2)
    assert len(greedy_optimal_strategy(cfg)) == 0


def test_greedy_single_pair():
    cfg = TankConfig.from_colored([F(1)], [F(0)])
    s = greedy_optimal_strategy(cfg)
    assert list(s) == [Pair(0, 1)]
    assert transferred_to_blue(cfg, run_strategy(cfg, s)) == F(1, 2)


def test_greedy_matches_naive_two():
    cfg = TankConfig.full_empty(2, exact=True)
    assert transferred_to_blue(cfg, run_strategy(cfg, greedy_optimal_strategy(cfg))) == F(5, 4)


def test_greedy_rejects_bad_rule():
    cfg = TankConfig.full_empty(2, exact=True)
    with pytest.raises(ValueError):
        greedy_optimal_strategy(cfg, tiebreak="middle")
    with pytest.raises(ValueError):
        greedy_optimal_strategy(cfg, tiebreak=lambda eligible: -1)


def test_heat_exchanger_small():
    assert heat_exchanger_simulate(1).levels == (F(1, 2), F(1, 2))
    assert heat_exchanger_simulate(2).levels == pre_average(2).levels
    assert sorted(heat_exchanger_simulate(2).levels[:2]) == [F(1, 4), F(1, 2)]


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13])
def test_heat_exchanger_unlimited_matches_loops(n):
    assert heat_exchanger_simulate(n).levels == pre_average(n).levels


@pytest.mark.parametrize("n,k", [(4, 2), (8, 3), (16, 4)])
def test_heat_exchanger_capacity_beats_window(n, k):
    start = TankConfig.full_empty(n, exact=True)
    heat = transferred_to_blue(start, heat_exchanger_simulate(n, k))
    window = transferred_to_blue(start, pre_average(n, k))
    assert heat >= window


def test_heat_exchanger_mix_and_float():
    mixed = heat_exchanger_simulate(3, mix_outlets=True)
    assert len(set(mixed.levels[:3])) == 1
    assert heat_exchanger_simulate(3, exact=False).levels == pytest.approx([float(v) for v in pre_average(3).levels])


@pytest.mark.parametrize("cap", [0, 5])
def test_heat_exchanger_bad_capacity(cap):
    with pytest.raises(ValueError):
        heat_exchanger_simulate(4, cap)


# ---------------------------------------------------------------- greedy properties

levels = st.fractions(min_value=0, max_value=1, max_denominator=8)


@st.composite
def colored_config(draw, max_tanks=5):
    reds = draw(st.lists(levels, min_size=1, max_size=max_tanks - 1))
    blues = draw(st.lists(levels, min_size=1, max_size=max_tanks - len(reds)))
    return TankConfig.from_colored(reds, blues)


@settings(max_examples=200, deadline=None)
@given(colored_config(), st.integers(0, 2**32 - 1))
def test_tiebreak_invariance(cfg, seed):
    rng = random.Random(seed)
    base = transferred_to_blue(cfg, run_strategy(cfg, greedy_optimal_strategy(cfg)))
    for rule in ("rightmost", "random", lambda eligible: eligible[len(eligible) // 2]):
        s = greedy_optimal_strategy(cfg, tiebreak=rule, rng=rng)
        assert transferred_to_blue(cfg, run_strategy(cfg, s)) == base


@settings(max_examples=200, deadline=None)
@given(colored_config(max_tanks=7), st.sampled_from(["leftmost", "rightmost", "random"]))
def test_greedy_step_properties(cfg, rule):
    strategy = greedy_optimal_strategy(cfg, tiebreak=rule, rng=random.Random(1))
    levels = list(cfg.levels)
    seen = set()
    for step in strategy:
        red, blue = step.a, step.b
        # (i) red-blue with the red tank strictly higher
        assert cfg.colors[red] is Color.RED and cfg.colors[blue] is Color.BLUE
        assert levels[red] > levels[blue]
        # (ii) no pair repeats
        assert (red, blue) not in seen
        seen.add((red, blue))
        # (iii) nothing strictly between the two levels
        assert not any(levels[blue] < v < levels[red] for v in levels)
        levels[red] = levels[blue] = (levels[red] + levels[blue]) / 2
    assert len(strategy) <= len(cfg.reds) * len(cfg.blues)
