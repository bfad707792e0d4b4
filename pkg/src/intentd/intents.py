"""Intent lifecycle: request types, compilation to flow rules, and the store.

Submission is synchronous: when submit() returns, the intent has either
reached INSTALLED or FAILED, and its rules (if any) sit in the fabric.
"""
from __future__ import annotations

import enum
import itertools
import threading
from dataclasses import dataclass, replace
from typing import Callable, Union

from .errors import (
    CompileError,
    FabricError,
    IllegalStateError,
    IntentValidationError,
    NoPathError,
    StoreCapacityError,
    UnknownIntentError,
)
from .fabric import (
    DEFAULT_PRIORITY,
    Fabric,
    FlowRule,
    TrafficSelector,
    TrafficTreatment,
)
from .topology import ConnectPoint, Path, Topology, host_mac, shortest_path


class IntentState(enum.Enum):
    SUBMITTED = "SUBMITTED"
    COMPILING = "COMPILING"
    INSTALLING = "INSTALLING"
    INSTALLED = "INSTALLED"
    FAILED = "FAILED"
    WITHDRAWN = "WITHDRAWN"


# allowed moves; FAILED and WITHDRAWN are terminal
TRANSITIONS: dict[IntentState, tuple[IntentState, ...]] = {
    IntentState.SUBMITTED: (IntentState.COMPILING,),
    IntentState.COMPILING: (IntentState.INSTALLING, IntentState.FAILED),
    IntentState.INSTALLING: (IntentState.INSTALLED, IntentState.FAILED),
    IntentState.INSTALLED: (IntentState.WITHDRAWN,),
    IntentState.FAILED: (),
    IntentState.WITHDRAWN: (),
}


@dataclass(frozen=True)
class PointToPoint:
    ingress: ConnectPoint
    egress: ConnectPoint

    type_name = "P2P"


@dataclass(frozen=True)
class SingleToMultiPoint:
    ingress: ConnectPoint
    egresses: frozenset[ConnectPoint]

    type_name = "S2M"

    def __post_init__(self) -> None:
        object.__setattr__(self, "egresses", frozenset(self.egresses))


@dataclass(frozen=True)
class MultiToSinglePoint:
    ingresses: frozenset[ConnectPoint]
    egress: ConnectPoint

    type_name = "M2S"

    def __post_init__(self) -> None:
        object.__setattr__(self, "ingresses", frozenset(self.ingresses))


@dataclass(frozen=True)
class HostToHost:
    one: str
    two: str

    type_name = "H2H"


IntentRequest = Union[PointToPoint, SingleToMultiPoint, MultiToSinglePoint, HostToHost]


@dataclass
class Intent:
    """One stored intent and its lifecycle state."""

    id: int
    request: IntentRequest
    selector: TrafficSelector
    priority: int
    state: IntentState
    failure: str | None = None
    child_ids: tuple[int, ...] = ()

    @property
    def type_name(self) -> str:
        return self.request.type_name


@dataclass(frozen=True)
class InstallableIntent:
    owner: int
    rules: tuple[FlowRule, ...]

    def __post_init__(self) -> None:
        if not self.rules:
            raise ValueError("an installable intent carries at least one rule")
        if any(r.owner_intent != self.owner for r in self.rules):
            raise ValueError("rule owner does not match installable owner")


def validate_request(topo: Topology, request: IntentRequest) -> None:
    """Check a request against the topology before it is admitted."""

    def need_point(cp: ConnectPoint) -> None:
        if not topo.has_connect_point(cp):
            raise IntentValidationError(f"unknown connect point {cp}")

    if isinstance(request, PointToPoint):
        need_point(request.ingress)
        need_point(request.egress)
        if request.ingress == request.egress:
            raise IntentValidationError(
                f"ingress and egress are the same point {request.ingress}"
            )
    elif isinstance(request, SingleToMultiPoint):
        need_point(request.ingress)
        if not request.egresses:
            raise IntentValidationError("egress set is empty")
        for cp in request.egresses:
            need_point(cp)
        if request.ingress in request.egresses:
            raise IntentValidationError(
                f"ingress {request.ingress} appears in the egress set"
            )
    elif isinstance(request, MultiToSinglePoint):
        need_point(request.egress)
        if not request.ingresses:
            raise IntentValidationError("ingress set is empty")
        for cp in request.ingresses:
            need_point(cp)
        if request.egress in request.ingresses:
            raise IntentValidationError(
                f"egress {request.egress} appears in the ingress set"
            )
    elif isinstance(request, HostToHost):
        topo.host_attachment(request.one)
        topo.host_attachment(request.two)
        if request.one == request.two:
            raise IntentValidationError(f"host to host needs two hosts, got {request.one}")
    else:
        raise IntentValidationError(f"unsupported request type {type(request).__name__}")


def _chain_rules(
    path: Path,
    ingress: ConnectPoint,
    egress: ConnectPoint,
) -> list[tuple[str, int, int]]:
    """Per-device (device, in_port, out_port) hops for one unicast path."""
    if not path.links:
        return [(ingress.device, ingress.port, egress.port)]
    hops = [(ingress.device, ingress.port, path.links[0].src.port)]
    for prev, nxt in zip(path.links, path.links[1:]):
        hops.append((nxt.src.device, prev.dst.port, nxt.src.port))
    hops.append((egress.device, path.links[-1].dst.port, egress.port))
    return hops


def compile_point_to_point(
    topo: Topology,
    intent: Intent,
    next_rule_id: Callable[[], int],
) -> list[FlowRule]:
    """One rule per device along the shortest ingress->egress path."""
    request = intent.request
    assert isinstance(request, PointToPoint)
    path = shortest_path(topo, request.ingress.device, request.egress.device)
    rules = []
    for device, in_port, out_port in _chain_rules(path, request.ingress, request.egress):
        rules.append(
            FlowRule(
                rule_id=next_rule_id(),
                device=device,
                selector=intent.selector.with_in_port(in_port),
                treatment=TrafficTreatment(outputs=(out_port,)),
                owner_intent=intent.id,
                priority=intent.priority,
            )
        )
    return rules


def compile_single_to_multi(
    topo: Topology,
    intent: Intent,
    next_rule_id: Callable[[], int],
) -> list[FlowRule]:
    """A tree over the union of shortest paths to every egress.

    The deterministic path tie-break keeps the union prefix-consistent, so
    each device has one arrival port; devices fanning out or carrying a
    local egress get a multi-output treatment.
    """
    request = intent.request
    assert isinstance(request, SingleToMultiPoint)
    ingress = request.ingress
    in_ports: dict[str, int] = {ingress.device: ingress.port}
    outputs: dict[str, set[int]] = {}
    for egress in sorted(request.egresses):
        if egress.device != ingress.device:
            path = shortest_path(topo, ingress.device, egress.device)
            for link in path.links:
                outputs.setdefault(link.src.device, set()).add(link.src.port)
                known = in_ports.get(link.dst.device)
                if known is None:
                    in_ports[link.dst.device] = link.dst.port
                elif known != link.dst.port:
                    raise CompileError(
                        f"conflicting arrival ports at {link.dst.device}"
                    )
        outputs.setdefault(egress.device, set()).add(egress.port)
    rules = []
    for device in sorted(outputs):
        rules.append(
            FlowRule(
                rule_id=next_rule_id(),
                device=device,
                selector=intent.selector.with_in_port(in_ports[device]),
                treatment=TrafficTreatment(outputs=tuple(sorted(outputs[device]))),
                owner_intent=intent.id,
                priority=intent.priority,
            )
        )
    return rules


def compile_multi_to_single(
    topo: Topology,
    intent: Intent,
    next_rule_id: Callable[[], int],
) -> list[FlowRule]:
    """One rule per (device, arrival port) over the per-ingress paths.

    Paths from different ingresses that reach a device on the same port
    collapse into one rule; distinct arrival ports coexist.
    """
    request = intent.request
    assert isinstance(request, MultiToSinglePoint)
    egress = request.egress
    hops: dict[tuple[str, int], int] = {}
    for ingress in sorted(request.ingresses):
        path = shortest_path(topo, ingress.device, egress.device)
        for device, in_port, out_port in _chain_rules(path, ingress, egress):
            hops.setdefault((device, in_port), out_port)
    rules = []
    for (device, in_port), out_port in sorted(hops.items()):
        rules.append(
            FlowRule(
                rule_id=next_rule_id(),
                device=device,
                selector=intent.selector.with_in_port(in_port),
                treatment=TrafficTreatment(outputs=(out_port,)),
                owner_intent=intent.id,
                priority=intent.priority,
            )
        )
    return rules


class IntentStore:
    """Id allocation plus the id -> intent map; guarded by one lock.

    Withdrawn and failed intents stay queryable but stop counting as live,
    so only admitted-and-not-terminal intents hold capacity.
    """

    def __init__(self, capacity: int | None = None) -> None:
        if capacity is not None and capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._intents: dict[int, Intent] = {}
        self._installables: dict[int, InstallableIntent] = {}
        self._next_id = itertools.count(1)
        self._live = 0
        self._lock = threading.RLock()

    def admit(
        self,
        request: IntentRequest,
        selector: TrafficSelector,
        priority: int,
    ) -> Intent:
        with self._lock:
            if self.capacity is not None and self._live >= self.capacity:
                raise StoreCapacityError(
                    f"store is full ({self.capacity} live intents)"
                )
            intent = Intent(
                id=next(self._next_id),
                request=request,
                selector=selector,
                priority=priority,
                state=IntentState.SUBMITTED,
            )
            self._intents[intent.id] = intent
            self._live += 1
            return intent

    def transition(self, intent: Intent, state: IntentState, failure: str | None = None) -> None:
        with self._lock:
            if state not in TRANSITIONS[intent.state]:
                raise IllegalStateError(
                    f"intent {intent.id}: cannot move {intent.state.value} -> {state.value}"
                )
            intent.state = state
            if failure is not None:
                intent.failure = failure
            if state in (IntentState.FAILED, IntentState.WITHDRAWN):
                self._live -= 1

    def set_installable(self, installable: InstallableIntent) -> None:
        with self._lock:
            self._installables[installable.owner] = installable

    def installable(self, intent_id: int) -> InstallableIntent | None:
        with self._lock:
            return self._installables.get(intent_id)

    def get(self, intent_id: int) -> Intent:
        with self._lock:
            try:
                return self._intents[intent_id]
            except KeyError:
                raise UnknownIntentError(f"unknown intent {intent_id}") from None

    def list(self) -> list[Intent]:
        with self._lock:
            return list(self._intents.values())

    def live_count(self) -> int:
        with self._lock:
            return self._live

    def clear(self) -> None:
        with self._lock:
            self._intents.clear()
            self._installables.clear()
            self._live = 0


class Controller:
    """Topology + fabric + store behind one submit/withdraw/query surface."""

    def __init__(
        self,
        topology: Topology | None = None,
        *,
        capacity: int | None = None,
        fabric: Fabric | None = None,
    ) -> None:
        if topology is None:
            from .topology import default_topology

            topology = default_topology()
        self.topology = topology
        self.fabric = fabric if fabric is not None else Fabric(topology)
        self.store = IntentStore(capacity=capacity)
        self._rule_ids = itertools.count(1)

    def _next_rule_id(self) -> int:
        return next(self._rule_ids)

    def submit(
        self,
        request: IntentRequest,
        *,
        priority: int = DEFAULT_PRIORITY,
        selector: TrafficSelector | None = None,
    ) -> int:
        """Drive a request to INSTALLED or FAILED; returns the intent id.

        Validation and store-capacity problems raise before anything is
        stored; compile and install problems are recorded on the intent.
        """
        if selector is None:
            selector = TrafficSelector()
        validate_request(self.topology, request)
        intent = self.store.admit(request, selector, priority)
        self.store.transition(intent, IntentState.COMPILING)

        if isinstance(request, HostToHost):
            self._drive_host_to_host(intent)
            return intent.id

        try:
            rules = self._compile(intent)
        except (NoPathError, CompileError) as exc:
            self.store.transition(intent, IntentState.FAILED, failure=str(exc))
            return intent.id

        self.store.transition(intent, IntentState.INSTALLING)
        try:
            self.fabric.install_rules(rules)
        except (FabricError, ValueError) as exc:
            self.store.transition(intent, IntentState.FAILED, failure=str(exc))
            return intent.id
        self.store.set_installable(InstallableIntent(intent.id, tuple(rules)))
        self.store.transition(intent, IntentState.INSTALLED)
        return intent.id

    def _compile(self, intent: Intent) -> list[FlowRule]:
        request = intent.request
        if isinstance(request, PointToPoint):
            return compile_point_to_point(self.topology, intent, self._next_rule_id)
        if isinstance(request, SingleToMultiPoint):
            return compile_single_to_multi(self.topology, intent, self._next_rule_id)
        if isinstance(request, MultiToSinglePoint):
            return compile_multi_to_single(self.topology, intent, self._next_rule_id)
        raise CompileError(f"no compiler for {type(request).__name__}")

    def _drive_host_to_host(self, intent: Intent) -> None:
        """Expand into two point-to-point intents, one per direction.

        The pair installs all-or-nothing: when the second direction fails,
        the first is withdrawn again and the parent fails.
        """
        request = intent.request
        assert isinstance(request, HostToHost)
        attach_one = self.topology.host_attachment(request.one)
        attach_two = self.topology.host_attachment(request.two)
        mac_one = host_mac(request.one)
        mac_two = host_mac(request.two)
        legs = (
            (
                PointToPoint(attach_one, attach_two),
                replace(intent.selector, eth_src=mac_one, eth_dst=mac_two),
            ),
            (
                PointToPoint(attach_two, attach_one),
                replace(intent.selector, eth_src=mac_two, eth_dst=mac_one),
            ),
        )
        child_ids: list[int] = []
        failure: str | None = None
        for leg_request, leg_selector in legs:
            try:
                child_id = self.submit(
                    leg_request, priority=intent.priority, selector=leg_selector
                )
            except (IntentValidationError, StoreCapacityError) as exc:
                failure = str(exc)
                break
            child_ids.append(child_id)
            child = self.store.get(child_id)
            if child.state is not IntentState.INSTALLED:
                failure = child.failure or "leg failed"
                break
        intent.child_ids = tuple(child_ids)
        if failure is not None:
            for child_id in child_ids:
                if self.store.get(child_id).state is IntentState.INSTALLED:
                    self.withdraw(child_id)
            self.store.transition(intent, IntentState.FAILED, failure=failure)
            return
        self.store.transition(intent, IntentState.INSTALLING)
        self.store.transition(intent, IntentState.INSTALLED)

    def withdraw(self, intent_id: int) -> None:
        """Remove an INSTALLED intent's rules and mark it WITHDRAWN."""
        intent = self.store.get(intent_id)
        if intent.state is not IntentState.INSTALLED:
            raise IllegalStateError(
                f"intent {intent_id} is {intent.state.value}, not INSTALLED"
            )
        for child_id in intent.child_ids:
            if self.store.get(child_id).state is IntentState.INSTALLED:
                self.withdraw(child_id)
        self.fabric.remove_rules(intent_id)
        self.store.transition(intent, IntentState.WITHDRAWN)

    def get(self, intent_id: int) -> Intent:
        return self.store.get(intent_id)

    def list(self) -> list[Intent]:
        return self.store.list()

    def rule_count(self, intent_id: int) -> int:
        intent = self.store.get(intent_id)
        installable = self.store.installable(intent_id)
        if installable is not None and intent.state is IntentState.INSTALLED:
            return len(installable.rules)
        if intent.child_ids:
            return sum(self.rule_count(child) for child in intent.child_ids)
        return 0

    def live_intents(self) -> int:
        return self.store.live_count()

    def installed_rules(self) -> int:
        return self.fabric.rule_count()

    def reset(self) -> None:
        """Withdraw everything and purge the store; counters drop to zero."""
        for intent in self.store.list():
            if intent.state is IntentState.INSTALLED:
                try:
                    self.withdraw(intent.id)
                except IllegalStateError:
                    pass  # a parent may have withdrawn this child already
        self.fabric.clear()
        self.store.clear()


def intent_document(controller: Controller, intent: Intent) -> dict:
    """JSON-ready view of one intent, shared by the REST and CLI surfaces."""
    doc: dict = {
        "id": str(intent.id),
        "type": intent.type_name,
        "state": intent.state.value,
        "rule_count": controller.rule_count(intent.id),
    }
    request = intent.request
    if isinstance(request, PointToPoint):
        doc["ingress"] = str(request.ingress)
        doc["egress"] = str(request.egress)
    elif isinstance(request, SingleToMultiPoint):
        doc["ingress"] = str(request.ingress)
        doc["egresses"] = [str(cp) for cp in sorted(request.egresses)]
    elif isinstance(request, MultiToSinglePoint):
        doc["ingresses"] = [str(cp) for cp in sorted(request.ingresses)]
        doc["egress"] = str(request.egress)
    elif isinstance(request, HostToHost):
        doc["one"] = request.one
        doc["two"] = request.two
        doc["children"] = [str(c) for c in intent.child_ids]
    if intent.failure is not None:
        doc["failure"] = intent.failure
    return doc
