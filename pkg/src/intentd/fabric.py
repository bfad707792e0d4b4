"""Simulated switch fabric: per-device flow tables and a packet-walk engine.

The fabric validates and installs rule batches atomically, and can walk a
synthetic packet through the tables to check what a rule set actually does.
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import (
    DuplicateRuleError,
    LoopDetectedError,
    RuleCapacityError,
    UnknownDeviceError,
)
from .topology import MAC_RE, ConnectPoint, Topology

DEFAULT_PRIORITY = 100


def _check_mac(value: str | None, what: str) -> str | None:
    if value is None:
        return None
    lowered = value.lower()
    if not MAC_RE.match(lowered):
        raise ValueError(f"bad {what}: {value!r}")
    return lowered


def _check_vlan(value: int | None) -> int | None:
    if value is None:
        return None
    if not isinstance(value, int) or not 0 <= value <= 4095:
        raise ValueError(f"vlan id out of range: {value!r}")
    return value


@dataclass(frozen=True)
class PacketHeader:
    eth_src: str
    eth_dst: str
    vlan: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "eth_src", _check_mac(self.eth_src, "eth_src"))
        object.__setattr__(self, "eth_dst", _check_mac(self.eth_dst, "eth_dst"))
        _check_vlan(self.vlan)


@dataclass(frozen=True)
class TrafficSelector:
    """Match criteria; an unset field matches anything."""

    in_port: int | None = None
    eth_src: str | None = None
    eth_dst: str | None = None
    vlan: int | None = None

    def __post_init__(self) -> None:
        if self.in_port is not None and self.in_port < 1:
            raise ValueError(f"in_port must be >= 1, got {self.in_port}")
        object.__setattr__(self, "eth_src", _check_mac(self.eth_src, "eth_src"))
        object.__setattr__(self, "eth_dst", _check_mac(self.eth_dst, "eth_dst"))
        _check_vlan(self.vlan)

    def is_empty(self) -> bool:
        return (
            self.in_port is None
            and self.eth_src is None
            and self.eth_dst is None
            and self.vlan is None
        )

    def with_in_port(self, port: int) -> "TrafficSelector":
        return replace(self, in_port=port)

    def matches(self, in_port: int, header: PacketHeader) -> bool:
        if self.in_port is not None and self.in_port != in_port:
            return False
        if self.eth_src is not None and self.eth_src != header.eth_src:
            return False
        if self.eth_dst is not None and self.eth_dst != header.eth_dst:
            return False
        if self.vlan is not None and self.vlan != header.vlan:
            return False
        return True


@dataclass(frozen=True)
class VlanAction:
    """push/set attach the given vlan id to the packet, pop removes it."""

    kind: str
    vlan: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("push", "pop", "set"):
            raise ValueError(f"bad vlan action kind {self.kind!r}")
        if self.kind == "pop":
            if self.vlan is not None:
                raise ValueError("pop takes no vlan id")
        elif _check_vlan(self.vlan) is None:
            raise ValueError(f"{self.kind} needs a vlan id")

    def apply(self, header: PacketHeader) -> PacketHeader:
        if self.kind == "pop":
            return replace(header, vlan=None)
        return replace(header, vlan=self.vlan)


@dataclass(frozen=True)
class TrafficTreatment:
    """Forwarding actions; drop is true exactly when there are no outputs."""

    outputs: tuple[int, ...] = ()
    drop: bool = False
    vlan_action: VlanAction | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.drop != (not self.outputs):
            raise ValueError("drop must be set exactly when outputs is empty")

    def apply_vlan(self, header: PacketHeader) -> PacketHeader:
        if self.vlan_action is None:
            return header
        return self.vlan_action.apply(header)


@dataclass
class FlowRule:
    rule_id: int
    device: str
    selector: TrafficSelector
    treatment: TrafficTreatment
    owner_intent: int
    priority: int = DEFAULT_PRIORITY
    packet_count: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.rule_id < 2**64:
            raise ValueError(f"rule_id out of 64-bit range: {self.rule_id}")
        if self.packet_count < 0:
            raise ValueError("packet_count must be non-negative")

    @property
    def key(self) -> tuple:
        # duplicate detection key: repeated identical intents own separate rules
        return (self.device, self.priority, self.selector, self.owner_intent)


@dataclass(frozen=True)
class DeliveryReport:
    """Where one injected packet (and its copies) ended up."""

    delivered: frozenset[tuple[ConnectPoint, int]]
    dropped_at: frozenset[str]
    misses: frozenset[str]


class FlowTable:
    """Rules of one device, iterated by descending priority then rule id."""

    def __init__(self, device: str) -> None:
        self.device = device
        self._rules: dict[int, FlowRule] = {}

    def __len__(self) -> int:
        return len(self._rules)

    def __iter__(self):
        return iter(sorted(self._rules.values(), key=lambda r: (-r.priority, r.rule_id)))

    def add(self, rule: FlowRule) -> None:
        self._rules[rule.rule_id] = rule

    def discard(self, rule_id: int) -> None:
        self._rules.pop(rule_id, None)

    def clear(self) -> None:
        self._rules.clear()


@dataclass
class _InjectItem:
    device: str
    in_port: int
    header: PacketHeader
    hops: int


class Fabric:
    """All flow tables of one simulated network.

    Mutations serialize on one writer lock; packet walks take the same lock
    so they see a consistent snapshot and bump counters atomically.
    """

    def __init__(
        self,
        topology: Topology,
        *,
        device_rule_cap: int | None = None,
        total_rule_cap: int | None = None,
    ) -> None:
        self._topo = topology
        self._device_rule_cap = device_rule_cap
        self._total_rule_cap = total_rule_cap
        self._tables: dict[str, FlowTable] = {
            dev: FlowTable(dev) for dev in topology.device_ids
        }
        self._keys: set[tuple] = set()
        self._by_owner: dict[int, list[FlowRule]] = {}
        self._total = 0
        self._lock = threading.RLock()

    @property
    def topology(self) -> Topology:
        return self._topo

    def rule_count(self) -> int:
        with self._lock:
            return self._total

    def rules_for(self, device: str) -> list[FlowRule]:
        with self._lock:
            if device not in self._tables:
                raise UnknownDeviceError(f"unknown device {device}")
            return list(self._tables[device])

    def install_rules(self, rules: Sequence[FlowRule]) -> int:
        """Install a batch atomically; on any error nothing is installed."""
        with self._lock:
            per_device: dict[str, int] = {}
            batch_keys: set[tuple] = set()
            for rule in rules:
                table = self._tables.get(rule.device)
                if table is None:
                    raise UnknownDeviceError(f"unknown device {rule.device}")
                if rule.selector.is_empty():
                    raise ValueError(f"rule {rule.rule_id} has an empty selector")
                for port in rule.treatment.outputs:
                    if port not in self._topo.ports(rule.device):
                        raise ValueError(
                            f"rule {rule.rule_id} outputs to missing port {rule.device}/{port}"
                        )
                if rule.key in self._keys or rule.key in batch_keys:
                    raise DuplicateRuleError(
                        f"duplicate rule on {rule.device} (priority {rule.priority})"
                    )
                batch_keys.add(rule.key)
                per_device[rule.device] = per_device.get(rule.device, 0) + 1

            if self._device_rule_cap is not None:
                for dev, added in per_device.items():
                    if len(self._tables[dev]) + added > self._device_rule_cap:
                        raise RuleCapacityError(f"device {dev} rule capacity exceeded")
            if self._total_rule_cap is not None:
                if self._total + len(rules) > self._total_rule_cap:
                    raise RuleCapacityError("fabric rule capacity exceeded")

            for rule in rules:
                self._tables[rule.device].add(rule)
                self._keys.add(rule.key)
                self._by_owner.setdefault(rule.owner_intent, []).append(rule)
            self._total += len(rules)
            return len(rules)

    def remove_rules(self, owner_intent: int) -> int:
        """Remove every rule owned by the intent; unknown owners remove zero."""
        with self._lock:
            owned = self._by_owner.pop(owner_intent, [])
            for rule in owned:
                self._tables[rule.device].discard(rule.rule_id)
                self._keys.discard(rule.key)
            self._total -= len(owned)
            return len(owned)

    def clear(self) -> None:
        with self._lock:
            for table in self._tables.values():
                table.clear()
            self._keys.clear()
            self._by_owner.clear()
            self._total = 0

    def _match(self, device: str, in_port: int, header: PacketHeader) -> FlowRule | None:
        for rule in self._tables[device]:
            if rule.selector.matches(in_port, header):
                return rule
        return None

    def inject(self, ingress: ConnectPoint, header: PacketHeader) -> DeliveryReport:
        """Walk a packet from an ingress point through the tables.

        Each matched treatment duplicates the packet across its outputs; a
        copy leaving an edge port is delivered there, a copy leaving an
        infrastructure port continues at the far end of the link.  hop counts
        include the ingress device, and a branch running past
        len(devices) + 1 hops raises LoopDetectedError.
        """
        with self._lock:
            if not self._topo.has_connect_point(ingress):
                raise UnknownDeviceError(f"unknown connect point {ingress}")
            ttl = len(self._topo.device_ids) + 1
            delivered: set[tuple[ConnectPoint, int]] = set()
            dropped: set[str] = set()
            misses: set[str] = set()
            queue = deque([_InjectItem(ingress.device, ingress.port, header, 1)])
            while queue:
                item = queue.popleft()
                if item.hops > ttl:
                    raise LoopDetectedError(
                        f"packet exceeded TTL {ttl} at device {item.device}"
                    )
                rule = self._match(item.device, item.in_port, item.header)
                if rule is None:
                    misses.add(item.device)
                    continue
                rule.packet_count += 1
                if rule.treatment.drop:
                    dropped.add(item.device)
                    continue
                out_header = rule.treatment.apply_vlan(item.header)
                for port in rule.treatment.outputs:
                    cp = ConnectPoint(item.device, port)
                    link = self._topo.link_from(cp)
                    if link is None:
                        delivered.add((cp, item.hops))
                    else:
                        queue.append(
                            _InjectItem(
                                link.dst.device, link.dst.port, out_header, item.hops + 1
                            )
                        )
            return DeliveryReport(
                frozenset(delivered), frozenset(dropped), frozenset(misses)
            )
