"""Property suites behind ``iteravg verify``.

Each suite returns a JSON-serialisable report ``{"suite", "passed", "checks"}``
where every check carries its own ``passed`` flag.  Sizes are kept small so
that ``--suite all`` finishes in seconds; the heavier runs live in the test
suite.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from . import analysis, averaging_dynamics as dyn, majorization as maj, strategies
from .tank_core import (
    Average,
    Pair,
    Strategy,
    TankConfig,
    apply_matrix,
    is_doubly_stochastic,
    run_strategy,
    strategy_matrix,
    transferred_to_blue,
)

SUITES = ("bounds", "optimality", "matrix", "majorization", "dynamics")


def random_rational_config(n_red: int, n_blue: int, rng: random.Random, denominator: int = 8) -> TankConfig:
    def level():
        return Fraction(rng.randint(0, denominator), denominator)

    return TankConfig.from_colored([level() for _ in range(n_red)], [level() for _ in range(n_blue)])


def random_strategy(n_tanks: int, n_steps: int, rng: random.Random) -> Strategy:
    """Random mix of pair steps and block averages on ``n_tanks`` tanks."""
    steps = []
    for _ in range(n_steps):
        if n_tanks >= 2 and rng.random() < 0.7:
            a, b = rng.sample(range(n_tanks), 2)
            steps.append(Pair(a, b))
        else:
            tanks = list(range(n_tanks))
            rng.shuffle(tanks)
            cut = sorted(rng.sample(range(n_tanks + 1), min(n_tanks + 1, rng.randint(1, 3))))
            blocks = [tuple(tanks[i:j]) for i, j in zip(cut, cut[1:]) if j > i]
            steps.append(Average(tuple(blocks)))
    return Strategy(n_tanks, steps)


def _check(name: str, passed: bool, **details) -> dict:
    return {"name": name, "passed": bool(passed), **details}


def suite_bounds(seed: int = 0) -> list[dict]:
    checks = []
    for n, k in [(2, 2), (100, 10)]:
        checks.append(_check(f"lemma n={n} k={k}", analysis.verify_lemma_bounds(n, k).passed))
        rep = analysis.check_total_red_bound(n, k)
        checks.append(_check(f"total red n={n} k={k}", rep.passed, **rep.details))
    for n in [4, 16, 100]:
        rep = analysis.theorem_bound_check(n)
        checks.append(_check(f"theorem n={n}", rep.passed, max_red=rep.details["max_red"]))
    return checks


def suite_optimality(seed: int = 0, configs: int = 20) -> list[dict]:
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(configs):
        config = random_rational_config(2, 2, rng)
        greedy = transferred_to_blue(config, run_strategy(config, strategies.greedy_optimal_strategy(config)))
        best, _ = analysis.brute_force_optimal(config, 6)
        mismatches += greedy != best
    checks = [_check("greedy equals exhaustive optimum (2+2 tanks)", mismatches == 0, configs=configs)]
    for n in range(1, 5):
        start = TankConfig.full_empty(n, exact=True)
        naive = transferred_to_blue(start, run_strategy(start, strategies.naive_strategy(n)))
        greedy = transferred_to_blue(start, run_strategy(start, strategies.greedy_optimal_strategy(start)))
        checks.append(_check(f"greedy equals naive n={n}", naive == greedy, transfer=str(naive)))
    return checks


def suite_matrix(seed: int = 0, count: int = 20) -> list[dict]:
    rng = random.Random(seed)
    faithful = stochastic = True
    for _ in range(count):
        n = rng.randint(2, 8)
        strategy = random_strategy(n, rng.randint(0, 20), rng)
        d = strategy_matrix(strategy)
        x = [Fraction(rng.randint(-8, 8), rng.randint(1, 8)) for _ in range(n)]
        config = TankConfig(x, ["red"] * n)
        faithful &= apply_matrix(d, x) == run_strategy(config, strategy).levels
        stochastic &= is_doubly_stochastic(d)
    return [
        _check("matrix reproduces run_strategy", faithful, strategies=count),
        _check("compiled matrices doubly stochastic", stochastic, strategies=count),
    ]


def suite_majorization(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    ok = True
    for n in range(2, 6):
        x = rng.random(n)
        cloud = maj.sample_reachable(x, depth=6, samples=200, rng=rng)
        ok &= bool(maj.majorized_mask(x, cloud.points).all())
    py_rng = random.Random(seed)
    chain = True
    for _ in range(200):
        x = [Fraction(py_rng.randint(-5, 5), py_rng.randint(1, 4)) for _ in range(4)]
        i, j = py_rng.sample(range(4), 2)
        if x[i] > x[j]:
            i, j = j, i
        y = maj.apply_robin_hood(x, maj.RobinHoodOp(i, j, Fraction(py_rng.randint(0, 8), 16)))
        chain &= x[i] <= y[i] <= y[j] <= x[j] and sum(x) == sum(y)
    products = maj.monoid_sample(3, 8, 200, rng)
    diag = all(np.all(np.diag(p) > 0) for p in products)
    return [
        _check("reachable points are majorized", ok),
        _check("Robin Hood chain exact", chain),
        _check("monoid products have positive diagonal", diag, samples=len(products)),
    ]


def suite_dynamics(seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    for n in (2, 4):
        worst = 0.0
        steps_ok = True
        for _ in range(3):
            f = dyn.FiniteFunction(rng.random(n))
            perm = dyn.Permutation(rng.permutation(n))
            plan, result = dyn.approximate_permutation(f, perm, 0.1)
            worst = max(worst, dyn.sup_error(result, f.compose(perm)))
            steps_ok &= dyn.check_plan_steps(plan, rng.random(n), rng.random(n)).ok()
        checks.append(_check(f"permutation error N={n}", worst < 0.1, max_error=worst, eps=0.1))
        checks.append(_check(f"steps contractive and mean preserving N={n}", steps_ok))
    return checks


def run_suite(name: str, seed: int = 0) -> dict:
    if name == "all":
        reports = [run_suite(s, seed) for s in SUITES]
        return {"suite": "all", "passed": all(r["passed"] for r in reports), "suites": reports}
    runner = {
        "bounds": suite_bounds,
        "optimality": suite_optimality,
        "matrix": suite_matrix,
        "majorization": suite_majorization,
        "dynamics": suite_dynamics,
    }.get(name)
    if runner is None:
        raise ValueError(f"unknown suite {name!r}")
    checks = runner(seed)
    return {"suite": name, "seed": seed, "passed": all(c["passed"] for c in checks), "checks": checks}
