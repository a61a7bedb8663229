"""Node implementations behind the graph registry.

Each node consumes its connected inputs once per tick and returns its output
value (or None when it has nothing to emit).  Event outputs are cleared by
the runtime every tick; all other outputs persist, so a failing node leaves
its last good value visible downstream.
"""

from __future__ import annotations

import math
import os
from typing import Iterator

from .. import dsp, learn, metrics as metrics_mod
from ..datatree import DataTree
from ..layout import ChannelLayout, DEFAULT_LAYOUT
from ..sinks.csvlog import CsvAppender
from ..sinks.plots import PlotSpec, plot_hist_ci, plot_x_by_time, plot_xy_by_time
from ..sinks.triggers import Comparator, TriggerEvent, TriggerSpec, TriggerState, trigger_eval
from ..sinks.webhook import DEFAULT_TEMPLATE, WebhookQueue
from ..wire import PacketKind, UdpReceiver, UdpSender, WirePacket
from .graph import NodeSpec


class TickContext:
    """Per-tick scratch handed to every node."""

    def __init__(self, tick_index: int, now_s: float, epoch_ms: int):
        self.tick_index = tick_index
        self.now_s = now_s
        self.epoch_ms = epoch_ms
        self.events: list[TriggerEvent] = []
        self.readings: dict[str, float] = {}


class Node:
    output_kind: str | None = None

    def __init__(self, spec: NodeSpec):
        self.spec = spec
        self.id = spec.id

    def execute(self, inputs: dict, ctx: TickContext):
        raise NotImplementedError

    def close(self) -> None:
        pass


def _parse_bands(params: dict) -> tuple[dsp.BandSpec, ...]:
    raw = params.get("bands")
    if not raw:
        return dsp.DEFAULT_BANDS
    return tuple(dsp.BandSpec(b["name"], float(b["lo_hz"]), float(b["hi_hz"])) for b in raw)


class UdpInNode(Node):
    output_kind = "packet"

    def __init__(self, spec: NodeSpec, replay: Iterator[WirePacket] | None = None):
        super().__init__(spec)
        accept = spec.params.get("accept")
        self.accept = PacketKind(accept) if accept else None
        self._replay = replay
        self._receiver = None
        if replay is None:
            self._receiver = UdpReceiver(host=spec.params.get("host", "127.0.0.1"),
                                         port=int(spec.params.get("port", 12345)))
        self.last_dropped = 0

    def execute(self, inputs: dict, ctx: TickContext):
        if self._replay is not None:
            for packet in self._replay:
                if self.accept is None or packet.kind is self.accept:
                    return packet
            return None
        received = self._receiver.receive_latest(kind=self.accept)
        if received is None:
            return None
        self.last_dropped = received.dropped
        return received.packet

    def close(self) -> None:
        if self._receiver is not None:
            self._receiver.close()


class BandPowerNode(Node):
    output_kind = "tree"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.bands = _parse_bands(spec.params)
        self.fs = float(spec.params.get("fs_hz", 125.0))

    def execute(self, inputs: dict, ctx: TickContext):
        packet: WirePacket = inputs["in"]
        if packet.kind is PacketKind.BAND_POWER_FRAME:
            return DataTree.from_matrix(packet.matrix())
        if packet.kind is PacketKind.FFT_FRAME:
            n_fft = (packet.width - 1) * 2
            spectrum = dsp.Spectrum(fs_hz=self.fs, n_fft=n_fft, bins=packet.matrix())
        else:
            spectrum = dsp.fft_spectrum(packet.matrix(), self.fs)
        return dsp.band_matrix(spectrum, list(self.bands))


_BUILTINS = {m.name: m for m in metrics_mod.builtin_metrics()}


class MetricNode(Node):
    output_kind = "scalar"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        m = spec.params["metric"]
        if isinstance(m, str):
            self.definition = _BUILTINS[m]
        else:
            band = m["band"]
            band_spec = (dsp.BandSpec(band["name"], float(band["lo_hz"]), float(band["hi_hz"]))
                         if isinstance(band, dict)
                         else next(b for b in dsp.DEFAULT_BANDS if b.name == band))
            self.definition = metrics_mod.MetricDefinition(
                m.get("name", "custom"), band_spec, tuple(m["channels"]))
        self.layout = ChannelLayout(tuple(spec.params["layout"])) if "layout" in spec.params \
            else DEFAULT_LAYOUT
        self.band_order = tuple(spec.params.get("band_order",
                                                [b.name for b in dsp.DEFAULT_BANDS]))

    def execute(self, inputs: dict, ctx: TickContext):
        value = metrics_mod.eval_metric(self.definition, inputs["in"], self.layout,
                                        self.band_order)
        ctx.readings[self.id] = value
        return value


class RemapNode(Node):
    output_kind = "scalar"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        params = spec.params
        if "baseline_file" in params:
            self.baseline = metrics_mod.load_baseline(params["baseline_file"])
        else:
            self.baseline = metrics_mod.Baseline(
                metric_name=params.get("metric", ""),
                low_anchor=float(params["low"]), high_anchor=float(params["high"]),
                n_low=0, n_high=0)
        self.clamp = bool(params.get("clamp", True))

    def set_baseline(self, baseline: metrics_mod.Baseline) -> None:
        self.baseline = baseline

    def execute(self, inputs: dict, ctx: TickContext):
        value = metrics_mod.remap(inputs["in"], self.baseline, clamp=self.clamp)
        ctx.readings[self.id] = value
        return value


class PredictNode(Node):
    output_kind = "scalar"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.model = learn.load_model(spec.params["model_path"])

    def execute(self, inputs: dict, ctx: TickContext):
        tree: DataTree = inputs["in"]
        score, _ = learn.predict(self.model, tree.flatten())
        ctx.readings[self.id] = score
        return score


class TriggerNode(Node):
    output_kind = "event"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        p = spec.params
        self.trigger_spec = TriggerSpec(
            source=p.get("source", ""),
            comparator=Comparator(p["comparator"]),
            threshold=float(p["threshold"]),
            event_name=str(p["event_name"]),
            rearm_band=float(p.get("rearm_band", 0.05)),
            min_interval_s=float(p.get("min_interval_s", 10.0)))
        self.state = TriggerState()

    @property
    def threshold(self) -> float:
        return self.trigger_spec.threshold

    def set_threshold(self, threshold: float) -> None:
        from dataclasses import replace
        self.trigger_spec = replace(self.trigger_spec, threshold=float(threshold))

    def execute(self, inputs: dict, ctx: TickContext):
        self.state, event = trigger_eval(self.trigger_spec, self.state,
                                         float(inputs["in"]), ctx.now_s)
        if event is not None:
            ctx.events.append(event)
        return event


class CsvOutNode(Node):
    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.appender = CsvAppender(spec.params["path"],
                                    with_timestamp=bool(spec.params.get("with_timestamp", True)))

    def execute(self, inputs: dict, ctx: TickContext):
        value = inputs["in"]
        tree = value if isinstance(value, DataTree) else DataTree({(0,): [float(value)]})
        self.appender.append(tree, epoch_ms=ctx.epoch_ms)
        return None


class WebhookOutNode(Node):
    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        p = spec.params
        endpoint = p.get("endpoint", os.environ.get("NEURON_WEBHOOK_BASE", DEFAULT_TEMPLATE))
        key = p.get("key", os.environ.get("NEURON_WEBHOOK_KEY", ""))
        backoff = tuple(p.get("backoff_s", (1.0, 4.0)))
        self.value_formats = list(p.get("values", ["{value:.2f}"]))
        self.queue = WebhookQueue(endpoint_template=endpoint, key=key,
                                  retries=int(p.get("retries", 2)), backoff_s=backoff,
                                  timeout_s=float(p.get("timeout_s", 5.0)))

    def execute(self, inputs: dict, ctx: TickContext):
        event: TriggerEvent = inputs["in"]
        values = [fmt.format(value=event.value, event=event.event_name,
                             time=event.fired_at) for fmt in self.value_formats]
        self.queue.enqueue(event.event_name, values)
        return None

    def close(self) -> None:
        self.queue.close()


class UdpOutNode(Node):
    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.sender = UdpSender(host=spec.params.get("host", "127.0.0.1"),
                                port=int(spec.params.get("port", 12346)))
        self._seq = 0

    def execute(self, inputs: dict, ctx: TickContext):
        value = inputs["in"]
        if isinstance(value, DataTree):
            self._seq += 1
            value = WirePacket(kind=PacketKind.BAND_POWER_FRAME, seq=self._seq,
                               timestamp_ms=ctx.epoch_ms, channels=len(value),
                               payload=tuple(v for _, v in value.items()))
        self.sender.send(value)
        return None

    def close(self) -> None:
        self.sender.close()


class PlotNode(Node):
    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        p = spec.params
        self.path = p["path"]
        self.plot_kind = p.get("plot_kind", "x_by_time")
        self.plot_spec = PlotSpec(kind=self.plot_kind, bins=int(p.get("bins", 20)),
                                  ci_level=float(p.get("ci_level", 0.95)),
                                  title=p.get("title", ""))
        self.series_a: list[tuple[float, float]] = []
        self.series_b: list[tuple[float, float]] = []

    def execute(self, inputs: dict, ctx: TickContext):
        self.series_a.append((ctx.now_s, float(inputs["in"])))
        if "b" in inputs and inputs["b"] is not None:
            self.series_b.append((ctx.now_s, float(inputs["b"])))
        return None

    def close(self) -> None:
        if not self.series_a:
            return
        if self.plot_kind == "hist_ci":
            doc = plot_hist_ci([x for _, x in self.series_a], self.plot_spec)
        elif self.plot_kind == "xy_by_time" and self.series_b:
            doc = plot_xy_by_time(self.series_a, self.series_b, self.plot_spec)
        else:
            doc = plot_x_by_time(self.series_a, self.plot_spec)
        with open(self.path, "w", encoding="utf-8") as f:
            f.write(doc)


class WsOutNode(Node):
    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.name = str(spec.params["name"])

    def execute(self, inputs: dict, ctx: TickContext):
        value = inputs["in"]
        if isinstance(value, DataTree):
            for path, branch in value.items():
                tag = "_".join(str(i) for i in path)
                for j, v in enumerate(branch):
                    ctx.readings[f"{self.name}.ch{tag}_b{j}"] = v
        else:
            ctx.readings[self.name] = float(value)
        return None


class ConstNode(Node):
    output_kind = "scalar"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self.value = float(spec.params["value"])

    def execute(self, inputs: dict, ctx: TickContext):
        return self.value


_EXPR_GLOBALS = {"__builtins__": {},
                 **{name: getattr(math, name) for name in
                    ("sin", "cos", "tan", "exp", "log", "log10", "sqrt", "fabs",
                     "floor", "ceil", "pi", "e")},
                 "abs": abs, "min": min, "max": max}


class ExprNode(Node):
    output_kind = "scalar"

    def __init__(self, spec: NodeSpec):
        super().__init__(spec)
        self._code = compile(spec.params["expr"], f"<expr:{spec.id}>", "eval")

    def execute(self, inputs: dict, ctx: TickContext):
        env = {name: float(v) for name, v in inputs.items()}
        value = float(eval(self._code, _EXPR_GLOBALS, env))
        ctx.readings[self.id] = value
        return value


_REGISTRY = {
    "udp_in": UdpInNode,
    "band_power": BandPowerNode,
    "metric": MetricNode,
    "remap": RemapNode,
    "predict": PredictNode,
    "trigger": TriggerNode,
    "csv_out": CsvOutNode,
    "webhook_out": WebhookOutNode,
    "udp_out": UdpOutNode,
    "plot": PlotNode,
    "ws_out": WsOutNode,
    "const": ConstNode,
    "expr": ExprNode,
}


def build_node(spec: NodeSpec, replays: dict[str, Iterator[WirePacket]] | None = None) -> Node:
    cls = _REGISTRY[spec.kind]
    if spec.kind == "udp_in":
        return UdpInNode(spec, replay=(replays or {}).get(spec.id))
    return cls(spec)
