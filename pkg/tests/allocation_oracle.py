"""Randomized cross-check for the automation-level calculator.

The oracle recomputes the human-weight share with exact fractions and does
its own half-up rounding at four decimals, entirely independently of the
implementation's Decimal pipeline.  Each random case also checks a bundle of
algebraic invariants (bounds, permutation and scaling invariance, merge
invariance, monotonicity under reassignment).
"""

import random
from decimal import Decimal
from fractions import Fraction

from soa_hitlcps.allocation import (
    Assignee,
    Category,
    CategoryWeights,
    TaskSpec,
    loa,
    loa_weighted,
)

CATEGORIES = tuple(Category)
ASSIGNEES = tuple(Assignee)


def random_tasks(rng, max_tasks=8):
    count = rng.randint(1, max_tasks)
    tasks = []
    for index in range(count):
        if rng.random() < 0.7:
            weight = Decimal(rng.randint(1, 9))
        else:
            weight = Decimal(rng.randint(1, 400)) / Decimal(100)
        tasks.append(TaskSpec(
            id=f"t{index}",
            category=rng.choice(CATEGORIES),
            weight=weight,
            assignee=rng.choice(ASSIGNEES),
        ))
    return tasks


def oracle_value(pairs) -> Decimal:
    """Exact 1 - human share, rounded half-up to 4 decimals via integers."""
    total = Fraction(0)
    human = Fraction(0)
    for weight, assignee in pairs:
        value = Fraction(weight)
        total += value
        if assignee == Assignee.HUMAN:
            human += value
    exact = 1 - human / total
    scaled = exact * 10**4
    floor = scaled.numerator // scaled.denominator
    remainder = scaled - floor
    rounded = floor + (1 if remainder >= Fraction(1, 2) else 0)
    return Decimal(rounded) / Decimal(10**4)


def _substituted(tasks, weights):
    return [(weights.weight_for(t.category), t.assignee) for t in tasks]


def run_randomized_cases(n_cases: int, seed: int) -> int:
    rng = random.Random(seed)
    weights = CategoryWeights()
    for case in range(n_cases):
        tasks = random_tasks(rng)
        value = loa(tasks)
        expected = oracle_value((t.weight, t.assignee) for t in tasks)
        assert value == expected, f"case {case}: {value} != oracle {expected}"
        assert Decimal("0") <= value <= Decimal("1")

        shuffled = tasks[:]
        rng.shuffle(shuffled)
        assert loa(shuffled) == value

        factor = rng.randint(2, 9)
        scaled = [TaskSpec(t.id, t.category, t.weight * factor, t.assignee) for t in tasks]
        assert loa(scaled) == value

        if len(tasks) >= 2 and tasks[0].assignee == tasks[1].assignee:
            merged = [TaskSpec("m", tasks[0].category,
                               tasks[0].weight + tasks[1].weight, tasks[0].assignee)]
            merged.extend(tasks[2:])
            assert loa(merged) == value

        human_positions = [i for i, t in enumerate(tasks) if t.assignee == Assignee.HUMAN]
        if human_positions:
            flip = rng.choice(human_positions)
            flipped = tasks[:]
            flipped[flip] = TaskSpec(tasks[flip].id, tasks[flip].category,
                                     tasks[flip].weight, Assignee.MACHINE)
            assert loa(flipped) >= value

        weighted = loa_weighted(tasks, weights)
        assert weighted == oracle_value(_substituted(tasks, weights))
    return n_cases
