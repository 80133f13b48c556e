"""Diurnal wake checks, weekly action quotas and per-step activation order."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Activity

STEPS_PER_WEEK = 336
STEPS_PER_DAY = 48

# Target for the default table: expected awake half-hours per week after damping.
DEFAULT_AWAKE_PER_WEEK = 153.45

# (hour, relative activity) anchors of the weekday curve; interpolated linearly
# and wrapped across midnight.
_DAY_ANCHORS = (
    (0.0, 0.55), (2.0, 0.12), (5.0, 0.12), (8.0, 0.50), (10.0, 0.60),
    (12.0, 0.78), (14.0, 0.78), (16.0, 0.62), (19.0, 0.90), (22.0, 0.90),
)
_WEEKEND_SCALE = 1.1


def _day_curve() -> np.ndarray:
    hours = np.arange(STEPS_PER_DAY) / 2.0
    xs = np.array([h for h, _ in _DAY_ANCHORS] + [24.0])
    ys = np.array([v for _, v in _DAY_ANCHORS] + [_DAY_ANCHORS[0][1]])
    return np.interp(hours, xs, ys)


def default_activity_table(damping: float = 0.9) -> "ActivityTable":
    """Double-peaked weekly table (midday and evening peaks, night trough).

    The curve is rescaled so that the expected number of awake periods per
    week, sum(p) * damping, equals ``DEFAULT_AWAKE_PER_WEEK``.
    """
    day = _day_curve()
    week = np.concatenate([day * (_WEEKEND_SCALE if d >= 5 else 1.0) for d in range(7)])
    week *= DEFAULT_AWAKE_PER_WEEK / (damping * week.sum())
    if week.max() > 1.0:
        raise AssertionError("default table exceeds probability 1")
    return ActivityTable(week.tolist(), damping)


@dataclass
class ActivityTable:
    """336 wake probabilities, Monday 00:00 first, one per half hour."""

    probabilities: list[float]
    damping: float = 0.9

    def __post_init__(self):
        if len(self.probabilities) != STEPS_PER_WEEK:
            raise ValueError(f"activity table needs {STEPS_PER_WEEK} entries, got {len(self.probabilities)}")
        if any(not 0.0 <= p <= 1.0 for p in self.probabilities):
            raise ValueError("activity probabilities must lie in [0, 1]")
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        self._effective = [p * self.damping for p in self.probabilities]

    def wake_probability(self, step_index: int) -> float:
        return self._effective[step_index % STEPS_PER_WEEK]

    def expected_awake_per_week(self) -> float:
        return float(sum(self._effective))

    @classmethod
    def from_csv(cls, path, damping: float = 0.9) -> "ActivityTable":
        with Path(path).open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and r[0].strip()]
        try:
            values = [float(r[0]) for r in rows]
        except ValueError:
            # tolerate one header row
            values = [float(r[0]) for r in rows[1:]]
        return cls(values, damping)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            for p in self.probabilities:
                w.writerow([repr(p)])


def wake_check(agent, step_index: int, table: ActivityTable, rng) -> bool:
    return rng.random() < table.wake_probability(step_index)


@dataclass
class QuotaPolicy:
    weekly_max: dict = field(default_factory=lambda: {
        Activity.HIGH: 134, Activity.MEDIUM: 66, Activity.LOW: 6})
    overflow_prob: float = 0.01

    def __post_init__(self):
        self.weekly_max = {Activity(k): int(v) for k, v in self.weekly_max.items()}
        if any(v <= 0 for v in self.weekly_max.values()):
            raise ValueError("weekly maxima must be positive")
        if not 0.0 <= self.overflow_prob <= 1.0:
            raise ValueError("overflow_prob must lie in [0, 1]")

    def limit(self, activity) -> int:
        return self.weekly_max[Activity(activity)]


def may_act(agent, quota: QuotaPolicy, rng) -> bool:
    if agent.actions_used < quota.weekly_max[agent.activity]:
        return True
    return rng.random() < quota.overflow_prob


def is_week_boundary(step_index: int) -> bool:
    return step_index % STEPS_PER_WEEK == 0


def reset_week(agents) -> None:
    for a in agents:
        a.actions_used = 0


def activation_order(agent_ids, rng: np.random.Generator) -> list:
    ids = list(agent_ids)
    return [ids[i] for i in rng.permutation(len(ids))]
