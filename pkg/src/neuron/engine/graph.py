"""Declarative flow-graph loading and validation.

A graph file is JSON: ``{"tick_ms": 40, "run_seconds": 10, "nodes": [...]}``
where each node is ``{"id", "kind", "params", "inputs"}`` and ``inputs`` maps
an input port name to an upstream node id.  The schema and the per-kind
parameter tables live in docs/graph.md.

Payload kinds flowing on edges: "packet", "tree", "scalar", "event".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import (CycleDetected, DanglingEdge, GraphError, MissingParam,
                      PortTypeMismatch, UnknownNodeKind)

# kind -> (input ports: name -> accepted payload kinds, output payload kind,
#          required params).  "*" = variadic scalar ports (expr).
NODE_SIGNATURES: dict[str, tuple[dict[str, tuple[str, ...]], str | None, tuple[str, ...]]] = {
    "udp_in":      ({}, "packet", ()),
    "band_power":  ({"in": ("packet",)}, "tree", ()),
    "metric":      ({"in": ("tree",)}, "scalar", ("metric",)),
    "remap":       ({"in": ("scalar",)}, "scalar", ()),
    "predict":     ({"in": ("tree",)}, "scalar", ("model_path",)),
    "trigger":     ({"in": ("scalar",)}, "event", ("comparator", "threshold", "event_name")),
    "csv_out":     ({"in": ("tree", "scalar")}, None, ("path",)),
    "webhook_out": ({"in": ("event",)}, None, ()),
    "udp_out":     ({"in": ("packet", "tree")}, None, ()),
    "plot":        ({"in": ("scalar",), "b": ("scalar",)}, None, ("path",)),
    "ws_out":      ({"in": ("scalar", "tree")}, None, ("name",)),
    "const":       ({}, "scalar", ("value",)),
    "expr":        ({"*": ("scalar",)}, "scalar", ("expr",)),
}

OPTIONAL_PORTS = {("plot", "b")}


@dataclass(frozen=True)
class NodeSpec:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # port name -> upstream node id


@dataclass(frozen=True)
class GraphSpec:
    nodes: tuple[NodeSpec, ...]
    tick_ms: int
    run_seconds: float | None = None

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


def _strip_port(ref: str) -> str:
    # single output port per node; accept both "node" and "node.out"
    return ref[:-4] if ref.endswith(".out") else ref


def validate(spec: GraphSpec) -> GraphSpec:
    ids = [n.id for n in spec.nodes]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise GraphError(f"duplicate node ids {dup}", node_id=dup[0])
    if spec.tick_ms < 1:
        raise GraphError(f"tick_ms must be >= 1, got {spec.tick_ms}")
    by_id = {n.id: n for n in spec.nodes}
    for node in spec.nodes:
        if node.kind not in NODE_SIGNATURES:
            raise UnknownNodeKind(f"node {node.id!r}: unknown kind {node.kind!r}",
                                  node_id=node.id)
        ports, _, required = NODE_SIGNATURES[node.kind]
        for param in required:
            if param not in node.params:
                raise MissingParam(f"node {node.id!r} ({node.kind}) missing param {param!r}",
                                   node_id=node.id)
        variadic = "*" in ports
        for port, upstream_ref in node.inputs.items():
            upstream = _strip_port(upstream_ref)
            if upstream not in by_id:
                raise DanglingEdge(f"node {node.id!r} input {port!r} references "
                                   f"missing node {upstream!r}", node_id=node.id)
            if variadic:
                accepted = ports["*"]
            elif port in ports:
                accepted = ports[port]
            else:
                raise GraphError(f"node {node.id!r} ({node.kind}) has no input port {port!r}",
                                 node_id=node.id)
            out_kind = NODE_SIGNATURES[by_id[upstream].kind][1]
            if out_kind is None:
                raise PortTypeMismatch(f"node {node.id!r}: upstream {upstream!r} is a sink "
                                       f"and produces no output", node_id=node.id)
            if out_kind not in accepted:
                raise PortTypeMismatch(
                    f"node {node.id!r} port {port!r} wants {accepted}, upstream "
                    f"{upstream!r} produces {out_kind!r}", node_id=node.id)
        for port in ports:
            if port in ("*",) or (node.kind, port) in OPTIONAL_PORTS:
                continue
            if port not in node.inputs:
                raise GraphError(f"node {node.id!r} ({node.kind}) input port {port!r} "
                                 f"is not connected", node_id=node.id)
    topo_order(spec)  # raises CycleDetected
    return spec


def load_graph(text: str) -> GraphSpec:
    """Parse and validate graph JSON; errors name the offending node."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphError(f"graph file is not valid JSON: {e}")
    if not isinstance(raw, dict) or "nodes" not in raw:
        raise GraphError("graph JSON must be an object with a 'nodes' array")
    nodes = []
    for entry in raw["nodes"]:
        try:
            nodes.append(NodeSpec(id=str(entry["id"]), kind=str(entry["kind"]),
                                  params=dict(entry.get("params", {})),
                                  inputs=dict(entry.get("inputs", {}))))
        except (KeyError, TypeError) as e:
            raise GraphError(f"bad node entry {entry!r}: {e}")
    run_seconds = raw.get("run_seconds")
    spec = GraphSpec(nodes=tuple(nodes), tick_ms=int(raw.get("tick_ms", 40)),
                     run_seconds=None if run_seconds is None else float(run_seconds))
    return validate(spec)


def topo_order(spec: GraphSpec) -> list[str]:
    """Kahn's algorithm; ready nodes taken in id order for determinism."""
    deps: dict[str, set[str]] = {n.id: set() for n in spec.nodes}
    dependents: dict[str, set[str]] = {n.id: set() for n in spec.nodes}
    for node in spec.nodes:
        for upstream_ref in node.inputs.values():
            upstream = _strip_port(upstream_ref)
            if upstream not in deps:
                raise DanglingEdge(f"node {node.id!r} references missing node {upstream!r}",
                                   node_id=node.id)
            deps[node.id].add(upstream)
            dependents[upstream].add(node.id)
    ready = sorted(nid for nid, d in deps.items() if not d)
    order: list[str] = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        changed = False
        for down in dependents[nid]:
            deps[down].discard(nid)
            if not deps[down] and down not in order and down not in ready:
                ready.append(down)
                changed = True
        if changed:
            ready.sort()
    if len(order) != len(spec.nodes):
        stuck = sorted(set(deps) - set(order))
        raise CycleDetected(f"cycle involving nodes {stuck}", node_id=stuck[0])
    return order
