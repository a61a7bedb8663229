"""Threshold triggers with hysteresis and debounce.

``trigger_eval`` is a pure function of (spec, state, value, now): replaying a
value trace always yields the same event sequence.  Comparison is strict, so
a value sitting exactly at the threshold never fires.  After a fire the
trigger disarms; it re-arms only once the value retreats past the threshold
by ``rearm_band`` on the opposite side.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum


class Comparator(str, Enum):
    BELOW = "below"
    ABOVE = "above"


@dataclass(frozen=True)
class TriggerSpec:
    source: str
    comparator: Comparator
    threshold: float
    event_name: str
    rearm_band: float = 0.05
    min_interval_s: float = 10.0

    def __post_init__(self):
        if not self.event_name:
            raise ValueError("event_name must be non-empty")
        if self.rearm_band < 0 or self.min_interval_s < 0:
            raise ValueError("rearm_band and min_interval_s must be >= 0")


@dataclass(frozen=True)
class TriggerState:
    armed: bool = True
    last_fired_at: float | None = None


@dataclass(frozen=True)
class TriggerEvent:
    event_name: str
    value: float
    fired_at: float


def trigger_eval(spec: TriggerSpec, state: TriggerState, value: float,
                 now: float) -> tuple[TriggerState, TriggerEvent | None]:
    if spec.comparator is Comparator.BELOW:
        satisfied = value < spec.threshold
        retreated = value > spec.threshold + spec.rearm_band
    else:
        satisfied = value > spec.threshold
        retreated = value < spec.threshold - spec.rearm_band
    if not state.armed:
        if retreated:
            return replace(state, armed=True), None
        return state, None
    if not satisfied:
        return state, None
    if state.last_fired_at is not None and now - state.last_fired_at < spec.min_interval_s:
        return state, None
    new_state = TriggerState(armed=False, last_fired_at=now)
    return new_state, TriggerEvent(event_name=spec.event_name, value=value, fired_at=now)
