"""Anomaly event placement.

The schedule decides, purely from ``(anomaly policy, n_timestamps,
seed)``, which timestamps are anomalous.  Placement is rejection
sampling with a deterministic proposal counter: proposal ``i`` draws
its duration and start position at counter address ``i`` on dedicated
streams, so the schedule is reproducible and independent of how the
later generation phase is parallelized.

Placement depends on ``n_timestamps``, so schedules for different
dataset lengths are not prefix-stable; grow-the-dataset stability is a
property of variable-value draws only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import prng
from .config import (
    MODE_EVENT_COUNT,
    MODE_FREQUENCY,
    MODE_POINT_COUNT,
    AnomalySpec,
)

PROPOSALS_PER_TARGET = 1000


class ScheduleInfeasibleError(Exception):
    """Placement could not reach its target within the proposal cap."""


@dataclass(frozen=True)
class AnomalyEvent:
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass
class AnomalySchedule:
    n_timestamps: int
    events: tuple[AnomalyEvent, ...]
    labels: np.ndarray  # uint8 per-timestamp class track


def _point_budget(anomaly: AnomalySpec, n_timestamps: int) -> int:
    if anomaly.mode == MODE_FREQUENCY:
        return int(anomaly.f * n_timestamps + 0.5)
    return anomaly.k


def build_schedule(anomaly: AnomalySpec, n_timestamps: int, seed: int) -> AnomalySchedule:
    """Place anomaly events deterministically from the seed.

    Frequency and point-count modes place events until the anomalous
    point budget (round(f * n) or k) is met exactly, truncating the
    final event when it would overshoot.  Event-count mode places
    exactly ``e`` events with no point budget.  Raises
    ScheduleInfeasibleError after 1000 proposals per unit of target.
    """
    d_min, d_max = anomaly.duration_range
    dur_stream = prng.pack_stream(prng.PURPOSE_DURATION, prng.ANOMALOUS, 0)
    start_stream = prng.pack_stream(prng.PURPOSE_SCHEDULE, prng.ANOMALOUS, 0)
    covered = np.zeros(n_timestamps, dtype=bool)
    events: list[AnomalyEvent] = []

    if anomaly.mode == MODE_EVENT_COUNT:
        target_events, budget = anomaly.e, None
        cap = PROPOSALS_PER_TARGET * max(1, anomaly.e)
    else:
        target_events, budget = None, _point_budget(anomaly, n_timestamps)
        cap = PROPOSALS_PER_TARGET * max(1, budget)

    total = 0
    for proposal in range(cap):
        if budget is not None and total >= budget:
            break
        if target_events is not None and len(events) >= target_events:
            break
        length = int(prng.draw_range(seed, dur_stream, proposal, d_min, d_max, discrete=True))
        length = min(length, n_timestamps)
        start = int(prng.draw_range(seed, start_stream, proposal, 0,
                                    n_timestamps - length, discrete=True))
        segment = covered[start:start + length]
        if not anomaly.allow_overlap and segment.any():
            continue
        if budget is not None:
            fresh = int(length - segment.sum())
            if fresh == 0:
                continue
            if total + fresh > budget:
                length = _truncate_to_budget(segment, budget - total)
                segment = covered[start:start + length]
                fresh = budget - total
        events.append(AnomalyEvent(start=start, length=length))
        covered[start:start + length] = True
        total += fresh if budget is not None else 0

    if budget is not None and total < budget:
        raise ScheduleInfeasibleError(
            f"placed {total} of {budget} anomalous points after {cap} proposals; "
            f"anomaly placement is unsatisfiable for this spec"
        )
    if target_events is not None and len(events) < target_events:
        raise ScheduleInfeasibleError(
            f"placed {len(events)} of {target_events} events after {cap} proposals; "
            f"anomaly placement is unsatisfiable for this spec"
        )

    events.sort(key=lambda ev: (ev.start, ev.length))
    labels = np.zeros(n_timestamps, dtype=np.uint8)
    for ev in events:
        labels[ev.start:ev.end] = 1
    return AnomalySchedule(n_timestamps=n_timestamps, events=tuple(events), labels=labels)


def _truncate_to_budget(segment: np.ndarray, needed: int) -> int:
    """Shortest event length whose uncovered positions number `needed`."""
    fresh_positions = np.flatnonzero(~segment)
    return int(fresh_positions[needed - 1]) + 1


def label_at(schedule: AnomalySchedule, t: int) -> int:
    """Class of timestamp t: 0 normal, 1 anomalous."""
    if not 0 <= t < schedule.n_timestamps:
        raise IndexError(f"timestamp {t} out of range [0, {schedule.n_timestamps})")
    return int(schedule.labels[t])


def schedule_stats(schedule: AnomalySchedule) -> dict:
    """Aggregate statistics over the event list, JSON-ready."""
    lengths = [ev.length for ev in schedule.events]
    points = int(schedule.labels.sum())
    n = schedule.n_timestamps
    return {
        "event_count": len(schedule.events),
        "anomalous_points": points,
        "anomalous_fraction": points / n if n else 0.0,
        "min_len": min(lengths) if lengths else 0,
        "max_len": max(lengths) if lengths else 0,
        "mean_len": (sum(lengths) / len(lengths)) if lengths else 0.0,
    }
