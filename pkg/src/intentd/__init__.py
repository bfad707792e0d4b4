"""intentd: a miniature intent-based SDN controller on a simulated fabric."""

from .bench import (
    BenchmarkConfig,
    BenchmarkSample,
    BenchResults,
    BenchRunner,
    SaturationResult,
    emit_report,
)
from .fabric import (
    DeliveryReport,
    Fabric,
    FlowRule,
    PacketHeader,
    TrafficSelector,
    TrafficTreatment,
    VlanAction,
)
from .intents import (
    Controller,
    HostToHost,
    Intent,
    IntentState,
    MultiToSinglePoint,
    PointToPoint,
    SingleToMultiPoint,
)
from .rest import RestClient, RestServer
from .stats import LinearFit, SummaryStats, fit_linear, summarize
from .topology import (
    ConnectPoint,
    Link,
    Path,
    Topology,
    default_topology,
    host_mac,
    load_topology,
    load_topology_file,
    serialize_topology,
    shortest_path,
)

__all__ = [
    "BenchResults",
    "BenchRunner",
    "BenchmarkConfig",
    "BenchmarkSample",
    "ConnectPoint",
    "Controller",
    "DeliveryReport",
    "Fabric",
    "FlowRule",
    "HostToHost",
    "Intent",
    "IntentState",
    "LinearFit",
    "Link",
    "MultiToSinglePoint",
    "PacketHeader",
    "Path",
    "PointToPoint",
    "RestClient",
    "RestServer",
    "SaturationResult",
    "SingleToMultiPoint",
    "SummaryStats",
    "Topology",
    "TrafficSelector",
    "TrafficTreatment",
    "VlanAction",
    "default_topology",
    "emit_report",
    "fit_linear",
    "host_mac",
    "load_topology",
    "load_topology_file",
    "serialize_topology",
    "shortest_path",
    "summarize",
]

__version__ = "0.1.0"
