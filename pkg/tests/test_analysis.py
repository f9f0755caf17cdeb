import math
import random
from fractions import Fraction as F

import pytest

from iteravg import analysis
from iteravg.analysis import (
    FitResult,
    SweepRecord,
    brute_force_optimal,
    check_total_red_bound,
    conjecture_fit,
    lemma_bound,
    residual,
    residual_sweep,
    theorem_bound_check,
    total_red_bound,
    verify_lemma_bounds,
)
from iteravg.strategies import greedy_optimal_strategy
from iteravg.tank_core import TankConfig, run_strategy, transferred_to_blue
from iteravg.verify import random_rational_config


def test_lemma_bound_examples():
    assert lemma_bound(3, 3, 5) == F(5, 6)
    assert lemma_bound(3, 7, 5) == F(1, 6)
    assert lemma_bound(1, 1, 1) == F(1, 2)
    with pytest.raises(ValueError):
        lemma_bound(2, 1, 3)
    with pytest.raises(ValueError):
        lemma_bound(1, 4, 3)


@pytest.mark.parametrize("n,k", [(1, 1), (2, 2), (100, 10)])
def test_verify_lemma_bounds(n, k):
    report = verify_lemma_bounds(n, k)
    assert report.passed
    assert report.checked == (n - k + 1) * k


def test_lemma_trace_two_two():
    # red 1 meets blues 1, 2: (1/2, 1/2) then (1/4, 1/4), within 2/3 and 1/3
    report = verify_lemma_bounds(2, 2)
    assert report.passed and report.first_violation is None


def test_total_red_bound_examples():
    assert total_red_bound(4, 2) == 2
    n = 7
    assert total_red_bound(n, n) == F(1, n + 1) + n - 1
    assert total_red_bound(2, 2) == F(4, 3)
    report = check_total_red_bound(2, 2)
    assert report.passed and report.details["red_total"] == "5/4"
    with pytest.raises(ValueError):
        total_red_bound(3, 4)


def test_theorem_bound_small():
    assert theorem_bound_check(4, exact=True).passed
    report = theorem_bound_check(100)
    assert report.passed and report.details["max_red"] < 0.2


def test_residual_examples():
    assert residual(1, exact=True) == F(1, 2)
    assert residual(2, exact=True) == F(3, 8)
    assert residual(8, exact=True) == F(6435, 32768)  # C(16, 8) / 2**16
    recs = residual_sweep([1, 2])
    assert [r.residual_per_red for r in recs] == [0.5, 0.375]
    with pytest.raises(ValueError):
        residual(0)


def test_sweep_record_range():
    with pytest.raises(ValueError):
        SweepRecord(3, "naive", 1.5)


def test_fit_recovers_synthetic_model():
    a, b = 1 / math.sqrt(math.pi), -0.1
    recs = [SweepRecord(n, "synthetic", a * n**-0.5 + b * n**-1.5) for n in (10, 100, 1000, 10_000)]
    fit = conjecture_fit(recs)
    assert isinstance(fit, FitResult)
    assert abs(fit.a - a) < 1e-10 and abs(fit.b - b) < 1e-8
    assert fit.rms_error >= 0


def test_fit_needs_three_n():
    with pytest.raises(ValueError):
        conjecture_fit([SweepRecord(10, "naive", 0.17)])
    with pytest.raises(ValueError):
        conjecture_fit([SweepRecord(10, "naive", 0.17), SweepRecord(10, "naive", 0.17), SweepRecord(20, "naive", 0.1)])


def test_fit_on_simulation():
    fit = conjecture_fit(residual_sweep([100, 300, 1000]))
    assert 0.54 <= fit.a <= 0.59


def test_brute_force_examples():
    best, witness = brute_force_optimal(TankConfig.full_empty(2, exact=True), 6)
    assert best == F(5, 4)
    start = TankConfig.full_empty(2, exact=True)
    assert transferred_to_blue(start, run_strategy(start, witness)) == best
    assert brute_force_optimal(TankConfig.from_colored([F(1)], [F(0)]), 2)[0] == F(1, 2)
    best, witness = brute_force_optimal(TankConfig.from_colored([F(0)], [F(1)]), 4)
    assert best == 0 and len(witness) == 0


def test_brute_force_limits():
    with pytest.raises(ValueError):
        brute_force_optimal(TankConfig.full_empty(4, exact=True), 3)
    with pytest.raises(ValueError):
        brute_force_optimal(TankConfig.full_empty(1, exact=True), analysis.BRUTE_FORCE_MAX_LEN + 1)


def test_greedy_matches_brute_force_three_tanks():
    rng = random.Random(11)
    for _ in range(30):
        cfg = random_rational_config(rng.randint(1, 2), 1 if rng.random() < 0.5 else 2, rng)
        if len(cfg) > 3:
            continue
        greedy = transferred_to_blue(cfg, run_strategy(cfg, greedy_optimal_strategy(cfg)))
        assert greedy == brute_force_optimal(cfg, 6)[0]
