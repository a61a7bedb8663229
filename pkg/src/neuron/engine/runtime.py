"""Timer-driven graph execution with skip-not-queue backpressure.

One thread executes the whole graph per tick.  If a tick overruns its
interval, the boundaries that passed during execution are skipped and
counted, never queued, so a slow node can degrade the update rate but can
never freeze the pipeline.  All engine mutations (threshold overrides,
calibration taps) go through a command queue drained between ticks.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from ..errors import NeuronError
from ..wire import WirePacket
from .graph import GraphSpec, NodeSpec, NODE_SIGNATURES, _strip_port, topo_order
from .nodes import Node, TickContext, TriggerNode, UdpInNode, build_node


class SystemClock:
    def now(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class FakeClock:
    """Deterministic clock: time moves only when someone sleeps."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self._now += seconds


@dataclass
class TickReport:
    tick_index: int
    started_at_s: float
    skipped: bool = False
    durations_us: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)  # node -> (perf_start, perf_end)
    drop_count: int = 0
    errors: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    readings: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "tick": self.tick_index, "started_at_s": self.started_at_s,
            "skipped": self.skipped, "durations_us": self.durations_us,
            "drop_count": self.drop_count, "errors": self.errors,
            "events": [e.event_name for e in self.events],
            "readings": self.readings,
        }, sort_keys=True)


class Engine:
    """Builds the node graph and runs it on a timer."""

    def __init__(self, graph: GraphSpec, clock=None,
                 replays: dict[str, Iterator[WirePacket]] | None = None,
                 epoch_base_ms: int | None = None):
        self.graph = graph
        self.clock = clock or SystemClock()
        self.order = topo_order(graph)
        self.nodes: dict[str, Node] = {s.id: build_node(s, replays) for s in graph.nodes}
        self.epoch_base_ms = (int(time.time() * 1000) if epoch_base_ms is None
                              else int(epoch_base_ms))
        self.outputs: dict[str, object] = {nid: None for nid in self.order}
        self.events: list[dict] = []
        self.reports: list[TickReport] = []
        self.ticks_fired = 0
        self.ticks_skipped = 0
        self._commands: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._running = threading.Event()
        self._event_seq = 0

    # -- control plane ---------------------------------------------------

    def submit(self, command: Callable[[], None]) -> None:
        """Run a mutation between ticks (atomic with respect to the graph)."""
        self._commands.put(command)

    def set_threshold(self, node_id: str, value: float) -> None:
        node = self.nodes.get(node_id)
        if not isinstance(node, TriggerNode):
            raise NeuronError(f"{node_id!r} is not a trigger node")
        self.submit(lambda: node.set_threshold(value))

    def stop(self) -> None:
        self._stop.set()

    @property
    def running(self) -> bool:
        return self._running.is_set()

    def trigger_nodes(self) -> dict[str, TriggerNode]:
        return {nid: n for nid, n in self.nodes.items() if isinstance(n, TriggerNode)}

    # -- execution ---------------------------------------------------------

    def _drain_commands(self) -> None:
        while True:
            try:
                command = self._commands.get_nowait()
            except queue.Empty:
                return
            command()

    def _drops_since(self, last: dict[str, int]) -> int:
        total = 0
        for nid, node in self.nodes.items():
            if isinstance(node, UdpInNode) and node._receiver is not None:
                current = node._receiver.dropped_total
                total += current - last.get(nid, 0)
                last[nid] = current
        return total

    def execute_tick(self, tick_index: int, now_s: float) -> TickReport:
        ctx = TickContext(tick_index, now_s,
                          self.epoch_base_ms + int(round(now_s * 1000)))
        report = TickReport(tick_index=tick_index, started_at_s=now_s)
        # event edges carry one-shot payloads; they never hold a past value
        for spec in self.graph.nodes:
            if NODE_SIGNATURES[spec.kind][1] == "event":
                self.outputs[spec.id] = None
        for nid in self.order:
            node = self.nodes[nid]
            inputs = {}
            runnable = True
            for port, upstream_ref in node.spec.inputs.items():
                value = self.outputs[_strip_port(upstream_ref)]
                if value is None:
                    runnable = False
                    break
                inputs[port] = value
            if not runnable:
                continue
            start = time.perf_counter()
            try:
                value = node.execute(inputs, ctx)
            except Exception as e:  # a failing node must not take down the tick
                report.errors[nid] = f"{type(e).__name__}: {e}"
                value = None
            end = time.perf_counter()
            report.durations_us[nid] = (end - start) * 1e6
            report.intervals[nid] = (start, end)
            if value is not None:
                self.outputs[nid] = value
        report.events = list(ctx.events)
        report.readings = dict(ctx.readings)
        for event in ctx.events:
            self._event_seq += 1
            self.events.append({"id": self._event_seq, "event": event.event_name,
                                "value": event.value, "at_s": event.fired_at,
                                "tick": tick_index})
        return report

    def run(self, on_tick: Callable[[TickReport], None] | None = None,
            telemetry_path: str | None = None) -> list[TickReport]:
        tick_s = self.graph.tick_ms / 1000.0
        n_boundaries = (None if self.graph.run_seconds is None
                        else int(round(self.graph.run_seconds / tick_s)))
        telemetry = open(telemetry_path, "a", encoding="utf-8") if telemetry_path else None
        drop_baseline: dict[str, int] = {}
        self._running.set()
        try:
            t0 = self.clock.now()
            k = 0
            while not self._stop.is_set() and (n_boundaries is None or k < n_boundaries):
                scheduled = t0 + k * tick_s
                delay = scheduled - self.clock.now()
                if delay > 0:
                    self.clock.sleep(delay)
                self._drain_commands()
                started = self.clock.now() - t0
                report = self.execute_tick(k, started)
                report.drop_count = self._drops_since(drop_baseline)
                self.reports.append(report)
                self.ticks_fired += 1
                if on_tick:
                    on_tick(report)
                if telemetry:
                    telemetry.write(report.to_json() + "\n")
                elapsed = self.clock.now() - t0
                next_k = int(elapsed / tick_s) + 1
                for missed in range(k + 1, next_k):
                    if n_boundaries is not None and missed >= n_boundaries:
                        break
                    skip = TickReport(tick_index=missed, started_at_s=missed * tick_s,
                                      skipped=True)
                    self.reports.append(skip)
                    self.ticks_skipped += 1
                    if on_tick:
                        on_tick(skip)
                    if telemetry:
                        telemetry.write(skip.to_json() + "\n")
                k = max(k + 1, next_k)
        finally:
            self._running.clear()
            if telemetry:
                telemetry.close()
            for node in self.nodes.values():
                node.close()
        return self.reports


def bench(node_kind: str, params: dict, packets: list[WirePacket],
          repetitions: int, warmup: int = 10) -> tuple[float, float]:
    """Wall-clock per-execution (mean us, std us) for one node kind.

    The pseudo-kind "parse" measures datagram decoding instead of a node.
    """
    if repetitions < 30:
        raise ValueError("repetitions must be >= 30")
    if not packets:
        raise ValueError("bench needs at least one input packet")
    from ..datatree import DataTree
    from ..sinks.triggers import TriggerEvent
    from ..wire import encode_packet, parse_packet

    if node_kind == "parse":
        datagrams = [encode_packet(p) for p in packets]
        runs = [(lambda d=d: parse_packet(d)) for d in datagrams]
    else:
        ports, _, _ = NODE_SIGNATURES[node_kind]
        spec = NodeSpec(id="bench", kind=node_kind, params=params,
                        inputs={p: "src" for p in ports if p != "*"})
        node = build_node(NodeSpec(id="bench", kind=node_kind, params=params))
        ctx = TickContext(0, 0.0, 0)

        def make_inputs(packet: WirePacket, i: int) -> dict:
            inputs = {}
            for port, accepted in ports.items():
                if port == "*":
                    continue
                if "packet" in accepted:
                    inputs[port] = packet
                elif "tree" in accepted:
                    inputs[port] = DataTree.from_matrix(packet.matrix())
                elif "event" in accepted:
                    inputs[port] = TriggerEvent("bench", 0.5, float(i))
                else:
                    inputs[port] = 0.25 + 0.5 * ((i % 7) / 7.0)
            return inputs

        runs = [(lambda p=p, i=i: node.execute(make_inputs(p, i), ctx))
                for i, p in enumerate([packets[j % len(packets)] for j in range(repetitions)])]

    for i in range(warmup):
        runs[i % len(runs)]()
    samples = []
    for i in range(repetitions):
        fn = runs[i % len(runs)]
        start = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - start) * 1e6)
    arr = np.asarray(samples)
    return float(arr.mean()), float(arr.std(ddof=1))
