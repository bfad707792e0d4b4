"""Network model: devices, links, hosts, and deterministic path computation.

A topology is loaded from a JSON document, validated once, and shared
read-only afterwards.  Links are declared once in the document and stored
with their reverse companion, so the graph is always bidirectional.
"""
from __future__ import annotations

import hashlib
import heapq
import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import (
    NoPathError,
    TopologyParseError,
    TopologyValidationError,
    UnknownDeviceError,
    UnknownHostError,
)

DEVICE_ID_RE = re.compile(r"^of:[0-9a-f]{16}$")
MAC_RE = re.compile(r"^[0-9a-f]{2}(:[0-9a-f]{2}){5}$")


def device_id(n: int) -> str:
    """Canonical device id for a small integer, e.g. 1 -> 'of:0000000000000001'."""
    return "of:%016x" % n


@dataclass(frozen=True, order=True)
class ConnectPoint:
    """A (device, port) pair; the string form is '<deviceId>/<port>'."""

    device: str
    port: int

    def __str__(self) -> str:
        return f"{self.device}/{self.port}"

    @classmethod
    def parse(cls, text: str) -> "ConnectPoint":
        device, sep, port = text.rpartition("/")
        if not sep or not DEVICE_ID_RE.match(device):
            raise ValueError(f"not a connect point: {text!r}")
        try:
            port_no = int(port)
        except ValueError:
            raise ValueError(f"not a connect point: {text!r}") from None
        if port_no < 1:
            raise ValueError(f"port must be >= 1 in connect point {text!r}")
        return cls(device, port_no)


@dataclass(frozen=True)
class Link:
    """One direction of a bidirectional link; weight is a positive cost."""

    src: ConnectPoint
    dst: ConnectPoint
    weight: float = 1.0

    def reversed(self) -> "Link":
        return Link(self.dst, self.src, self.weight)


@dataclass(frozen=True)
class Path:
    """A chain of links; empty when source and destination coincide."""

    links: tuple[Link, ...] = ()

    def __post_init__(self) -> None:
        for a, b in zip(self.links, self.links[1:]):
            if a.dst.device != b.src.device:
                raise ValueError(f"links do not chain: {a} then {b}")
        seen = set()
        for dev in self.devices():
            if dev in seen:
                raise ValueError(f"path repeats device {dev}")
            seen.add(dev)

    def devices(self) -> tuple[str, ...]:
        if not self.links:
            return ()
        return (self.links[0].src.device,) + tuple(l.dst.device for l in self.links)

    @property
    def cost(self) -> float:
        return sum(l.weight for l in self.links)

    def __len__(self) -> int:
        return len(self.links)


class Topology:
    """Validated, immutable network graph.

    `devices` maps device id to its port numbers, `links` holds one Link per
    declared direction (the reverse is added here), `hosts` maps host id to
    its attachment point.  Validation errors name the offending element.
    """

    def __init__(
        self,
        devices: Mapping[str, Iterable[int]],
        links: Iterable[Link],
        hosts: Mapping[str, ConnectPoint] = (),
    ) -> None:
        self._ports: dict[str, frozenset[int]] = {}
        for dev, ports in devices.items():
            if not DEVICE_ID_RE.match(dev):
                raise TopologyValidationError(f"bad device id {dev!r}")
            port_list = list(ports)
            if len(port_list) != len(set(port_list)):
                raise TopologyValidationError(f"device {dev} lists a port twice")
            if any((not isinstance(p, int)) or p < 1 for p in port_list):
                raise TopologyValidationError(f"device {dev} has a port < 1")
            self._ports[dev] = frozenset(port_list)

        expanded: list[Link] = []
        used_endpoints: set[ConnectPoint] = set()
        for link in links:
            if link.src.device == link.dst.device:
                raise TopologyValidationError(f"self-loop link at {link.src}")
            if not link.weight > 0:
                raise TopologyValidationError(f"non-positive weight on link {link.src}->{link.dst}")
            for cp in (link.src, link.dst):
                if cp.device not in self._ports:
                    raise TopologyValidationError(f"link references unknown device {cp.device}")
                if cp.port not in self._ports[cp.device]:
                    raise TopologyValidationError(f"link references unknown port {cp}")
                if cp in used_endpoints:
                    raise TopologyValidationError(f"connect point {cp} used by two links")
                used_endpoints.add(cp)
            expanded.append(link)
            expanded.append(link.reversed())
        self._links: tuple[Link, ...] = tuple(
            sorted(expanded, key=lambda l: (l.src, l.dst))
        )
        self._link_from: dict[ConnectPoint, Link] = {l.src: l for l in self._links}

        self._hosts: dict[str, ConnectPoint] = {}
        for host, attach in dict(hosts).items():
            if attach.device not in self._ports or attach.port not in self._ports[attach.device]:
                raise TopologyValidationError(f"host {host} attaches to unknown point {attach}")
            if attach in self._link_from:
                raise TopologyValidationError(
                    f"host {host} attaches to infrastructure port {attach}"
                )
            self._hosts[host] = attach

        self._adjacency: dict[str, tuple[Link, ...]] = {d: () for d in self._ports}
        by_src: dict[str, list[Link]] = {d: [] for d in self._ports}
        for link in self._links:
            by_src[link.src.device].append(link)
        for dev, out in by_src.items():
            self._adjacency[dev] = tuple(out)

    @property
    def device_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._ports))

    def ports(self, device: str) -> frozenset[int]:
        try:
            return self._ports[device]
        except KeyError:
            raise UnknownDeviceError(f"unknown device {device}") from None

    @property
    def links(self) -> tuple[Link, ...]:
        return self._links

    @property
    def hosts(self) -> dict[str, ConnectPoint]:
        return dict(self._hosts)

    def host_attachment(self, host: str) -> ConnectPoint:
        try:
            return self._hosts[host]
        except KeyError:
            raise UnknownHostError(f"unknown host {host}") from None

    def has_device(self, device: str) -> bool:
        return device in self._ports

    def has_connect_point(self, cp: ConnectPoint) -> bool:
        return cp.device in self._ports and cp.port in self._ports[cp.device]

    def link_from(self, cp: ConnectPoint) -> Link | None:
        """The link leaving this point, or None when it is an edge port."""
        return self._link_from.get(cp)

    def is_edge_point(self, cp: ConnectPoint) -> bool:
        return self.has_connect_point(cp) and cp not in self._link_from

    def edge_points(self) -> tuple[ConnectPoint, ...]:
        out = []
        for dev in sorted(self._ports):
            for port in sorted(self._ports[dev]):
                cp = ConnectPoint(dev, port)
                if cp not in self._link_from:
                    out.append(cp)
        return tuple(out)

    def out_links(self, device: str) -> tuple[Link, ...]:
        return self._adjacency[device]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self._ports == other._ports
            and set(self._links) == set(other._links)
            and self._hosts == other._hosts
        )


def load_topology(document) -> Topology:
    """Build a Topology from a JSON document (text or already-parsed mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise TopologyParseError(f"topology document is not valid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise TopologyParseError("topology document must be a JSON object")

    devices: dict[str, list[int]] = {}
    for entry in document.get("devices", []):
        if not isinstance(entry, Mapping) or "id" not in entry:
            raise TopologyValidationError(f"device entry missing id: {entry!r}")
        dev = entry["id"]
        if dev in devices:
            raise TopologyValidationError(f"duplicate device {dev}")
        devices[dev] = entry.get("ports", [])

    links: list[Link] = []
    for entry in document.get("links", []):
        try:
            src = ConnectPoint.parse(entry["src"])
            dst = ConnectPoint.parse(entry["dst"])
        except (KeyError, TypeError, ValueError) as exc:
            raise TopologyValidationError(f"bad link entry {entry!r}: {exc}") from None
        weight = entry.get("weight", 1.0)
        if not isinstance(weight, (int, float)):
            raise TopologyValidationError(f"bad weight on link {entry['src']}")
        links.append(Link(src, dst, float(weight)))

    hosts: dict[str, ConnectPoint] = {}
    for entry in document.get("hosts", []):
        if not isinstance(entry, Mapping) or "id" not in entry or "attach" not in entry:
            raise TopologyValidationError(f"host entry needs id and attach: {entry!r}")
        host = entry["id"]
        if host in hosts:
            raise TopologyValidationError(f"duplicate host {host}")
        try:
            hosts[host] = ConnectPoint.parse(entry["attach"])
        except ValueError as exc:
            raise TopologyValidationError(f"host {host}: {exc}") from None

    return Topology(devices, links, hosts)


def load_topology_file(path: str) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        return load_topology(fh.read())


def serialize_topology(topo: Topology) -> dict:
    """Canonical document form; load_topology(serialize_topology(t)) == t."""
    devices = [
        {"id": dev, "ports": sorted(topo.ports(dev))} for dev in topo.device_ids
    ]
    links = []
    for link in topo.links:
        if (link.src.device, link.src.port) < (link.dst.device, link.dst.port):
            entry = {"src": str(link.src), "dst": str(link.dst)}
            if link.weight != 1.0:
                entry["weight"] = link.weight
            links.append(entry)
    hosts = [
        {"id": host, "attach": str(attach)}
        for host, attach in sorted(topo.hosts.items())
    ]
    return {"devices": devices, "links": links, "hosts": hosts}


def host_mac(host: str) -> str:
    """Deterministic MAC for a host id.

    A host id that already is a MAC address is used as written; any other id
    is hashed into a locally administered address.
    """
    lowered = host.lower()
    if MAC_RE.match(lowered):
        return lowered
    digest = hashlib.sha256(host.encode("utf-8")).digest()[:5]
    return "02:" + ":".join("%02x" % b for b in digest)


def shortest_path(topo: Topology, src: str, dst: str) -> Path:
    """Lowest-cost path from src to dst device.

    Ties are broken toward the lexicographically smallest device-id sequence
    (then smallest egress ports), so repeated calls agree and unions of
    paths from one source form a tree.
    """
    if not topo.has_device(src):
        raise UnknownDeviceError(f"unknown device {src}")
    if not topo.has_device(dst):
        raise UnknownDeviceError(f"unknown device {dst}")
    if src == dst:
        return Path(())

    counter = itertools.count()
    heap: list[tuple] = [(0.0, (src,), (), next(counter), ())]
    visited: set[str] = set()
    while heap:
        cost, dev_seq, port_seq, _, links = heapq.heappop(heap)
        device = dev_seq[-1]
        if device in visited:
            continue
        visited.add(device)
        if device == dst:
            return Path(links)
        for link in topo.out_links(device):
            nxt = link.dst.device
            if nxt in visited:
                continue
            heapq.heappush(
                heap,
                (
                    cost + link.weight,
                    dev_seq + (nxt,),
                    port_seq + (link.src.port,),
                    next(counter),
                    links + (link,),
                ),
            )
    raise NoPathError(f"no path from {src} to {dst}")


# Five switches in a line, four ports each; ports 1 and 2 on the ends of the
# chain stay free for hosts, ports 3 and 4 are spare edge ports everywhere.
DEFAULT_TOPOLOGY_DOCUMENT: dict = {
    "devices": [
        {"id": device_id(n), "ports": [1, 2, 3, 4]} for n in range(1, 6)
    ],
    "links": [
        {"src": f"{device_id(n)}/2", "dst": f"{device_id(n + 1)}/1"}
        for n in range(1, 5)
    ],
    "hosts": [
        {"id": "h1", "attach": f"{device_id(1)}/1"},
        {"id": "h2", "attach": f"{device_id(5)}/2"},
    ],
}


def default_topology() -> Topology:
    return load_topology(DEFAULT_TOPOLOGY_DOCUMENT)
