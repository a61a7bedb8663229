from .graph import GraphSpec, NodeSpec, load_graph, topo_order
from .runtime import Engine, FakeClock, SystemClock, TickReport, bench

__all__ = ["GraphSpec", "NodeSpec", "load_graph", "topo_order",
           "Engine", "FakeClock", "SystemClock", "TickReport", "bench"]
