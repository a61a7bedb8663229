"""IFTTT-style webhook delivery.

A webhook call is an HTTP POST to a templated URL with a JSON body of up to
three string parameters.  ``WebhookQueue`` decouples dispatch from the engine
tick: enqueueing never blocks, the queue is bounded (oldest dropped with a
counter), and a worker thread retries failed deliveries with backoff before
giving up.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass, field

import requests

from ..errors import DeliveryFailed, TooManyValues

DEFAULT_TEMPLATE = "https://maker.ifttt.com/trigger/{event}/with/key/{key}"
MAX_VALUES = 3
QUEUE_BOUND = 1024


@dataclass(frozen=True)
class DeliveryResult:
    status: int
    rtt_ms: float
    attempts: int


def _body(values: list[str]) -> dict[str, str]:
    if len(values) > MAX_VALUES:
        raise TooManyValues(f"webhook takes at most {MAX_VALUES} values, got {len(values)}")
    return {f"value{i + 1}": v for i, v in enumerate(values)}


def webhook_fire(endpoint_template: str, event_name: str, key: str,
                 values: list[str] | None = None, timeout_s: float = 5.0,
                 retries: int = 2, backoff_s: tuple[float, ...] = (1.0, 4.0)) -> DeliveryResult:
    """POST the event; retry on failure, raise DeliveryFailed when exhausted."""
    body = _body(values or [])
    url = endpoint_template.format(event=event_name, key=key)
    last_status = None
    for attempt in range(retries + 1):
        start = time.monotonic()
        try:
            resp = requests.post(url, json=body, timeout=timeout_s)
            rtt_ms = (time.monotonic() - start) * 1000.0
            if resp.status_code < 400:
                return DeliveryResult(status=resp.status_code, rtt_ms=rtt_ms,
                                      attempts=attempt + 1)
            last_status = resp.status_code
        except requests.RequestException:
            last_status = None
        if attempt < retries:
            time.sleep(backoff_s[min(attempt, len(backoff_s) - 1)])
    raise DeliveryFailed(f"webhook {event_name} failed after {retries + 1} attempts",
                         status=last_status)


class WebhookQueue:
    """Bounded async dispatcher; slow HTTP never blocks the caller."""

    def __init__(self, endpoint_template: str = DEFAULT_TEMPLATE, key: str = "",
                 retries: int = 2, backoff_s: tuple[float, ...] = (1.0, 4.0),
                 timeout_s: float = 5.0):
        self.endpoint_template = endpoint_template
        self.key = key
        self.retries = retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.dropped = 0
        self.failed = 0
        self.delivered = 0
        self.results: list[DeliveryResult] = []
        self._q: queue.Queue = queue.Queue(maxsize=QUEUE_BOUND)
        self._stop = threading.Event()
        self._worker = threading.Thread(target=self._drain, daemon=True)
        self._worker.start()

    def enqueue(self, event_name: str, values: list[str] | None = None) -> None:
        _body(values or [])  # validate value count before queueing
        item = (event_name, list(values or []))
        while True:
            try:
                self._q.put_nowait(item)
                return
            except queue.Full:
                try:
                    self._q.get_nowait()
                    self.dropped += 1
                except queue.Empty:
                    pass

    def _drain(self) -> None:
        while not self._stop.is_set() or not self._q.empty():
            try:
                event_name, values = self._q.get(timeout=0.05)
            except queue.Empty:
                continue
            try:
                result = webhook_fire(self.endpoint_template, event_name, self.key,
                                      values, timeout_s=self.timeout_s,
                                      retries=self.retries, backoff_s=self.backoff_s)
                self.delivered += 1
                self.results.append(result)
            except DeliveryFailed:
                self.failed += 1
            finally:
                self._q.task_done()

    def close(self, timeout_s: float = 10.0) -> None:
        self._stop.set()
        self._worker.join(timeout=timeout_s)
