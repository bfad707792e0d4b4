"""HTTP northbound: a small JSON API over the controller, plus a client.

The server is the standard library's threading HTTP server so requests pay
the full socket + serialization cost; the client keeps one persistent
connection, which is what the benchmark harness measures.
"""
from __future__ import annotations

import http.client
import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .errors import (
    IllegalStateError,
    IntentValidationError,
    StoreCapacityError,
    UnknownIntentError,
    UnreachableEndpointError,
)
from .fabric import DEFAULT_PRIORITY, TrafficSelector
from .intents import (
    Controller,
    HostToHost,
    IntentRequest,
    IntentState,
    MultiToSinglePoint,
    PointToPoint,
    SingleToMultiPoint,
    intent_document,
)
from .topology import ConnectPoint

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8181


class RequestSchemaError(ValueError):
    """Body is syntactically JSON but does not fit the request schema."""


_TYPE_FIELDS = {
    "P2P": ("ingress", "egress"),
    "S2M": ("ingress", "egresses"),
    "M2S": ("ingresses", "egress"),
    "H2H": ("one", "two"),
}
# long spellings accepted on the wire; responses always carry the short form
_TYPE_ALIASES = {
    "PointToPoint": "P2P",
    "SingleToMultiPoint": "S2M",
    "MultiToSinglePoint": "M2S",
    "HostToHost": "H2H",
}
_COMMON_FIELDS = ("type", "priority", "selector")


def _parse_point(value: Any, field: str) -> ConnectPoint:
    if not isinstance(value, str):
        raise RequestSchemaError(f"{field} must be a connect-point string")
    try:
        return ConnectPoint.parse(value)
    except ValueError as exc:
        raise RequestSchemaError(str(exc)) from None


def _parse_point_list(value: Any, field: str) -> frozenset[ConnectPoint]:
    if not isinstance(value, list):
        raise RequestSchemaError(f"{field} must be a list of connect-point strings")
    return frozenset(_parse_point(item, field) for item in value)


def _parse_selector(value: Any) -> TrafficSelector:
    if not isinstance(value, dict):
        raise RequestSchemaError("selector must be an object")
    allowed = {"eth_src", "eth_dst", "vlan"}
    extra = set(value) - allowed
    if extra:
        raise RequestSchemaError(f"unknown selector fields: {sorted(extra)}")
    try:
        return TrafficSelector(
            eth_src=value.get("eth_src"),
            eth_dst=value.get("eth_dst"),
            vlan=value.get("vlan"),
        )
    except ValueError as exc:
        raise RequestSchemaError(str(exc)) from None


def parse_intent_document(
    doc: Any, *, extra_fields: tuple[str, ...] = ()
) -> tuple[IntentRequest, int, TrafficSelector]:
    """Strictly parse a request document into (request, priority, selector)."""
    if not isinstance(doc, dict):
        raise RequestSchemaError("request body must be a JSON object")
    type_name = doc.get("type")
    if type_name in _TYPE_ALIASES:
        type_name = _TYPE_ALIASES[type_name]
    if type_name not in _TYPE_FIELDS:
        raise RequestSchemaError(
            f"type must be one of {sorted(_TYPE_FIELDS) + sorted(_TYPE_ALIASES)}"
        )
    required = _TYPE_FIELDS[type_name]
    allowed = set(required) | set(_COMMON_FIELDS) | set(extra_fields)
    extra = set(doc) - allowed
    if extra:
        raise RequestSchemaError(f"unknown fields: {sorted(extra)}")
    missing = [f for f in required if f not in doc]
    if missing:
        raise RequestSchemaError(f"missing fields: {missing}")

    if type_name == "P2P":
        request: IntentRequest = PointToPoint(
            _parse_point(doc["ingress"], "ingress"),
            _parse_point(doc["egress"], "egress"),
        )
    elif type_name == "S2M":
        request = SingleToMultiPoint(
            _parse_point(doc["ingress"], "ingress"),
            _parse_point_list(doc["egresses"], "egresses"),
        )
    elif type_name == "M2S":
        request = MultiToSinglePoint(
            _parse_point_list(doc["ingresses"], "ingresses"),
            _parse_point(doc["egress"], "egress"),
        )
    else:
        one, two = doc["one"], doc["two"]
        if not isinstance(one, str) or not isinstance(two, str):
            raise RequestSchemaError("one and two must be host-id strings")
        request = HostToHost(one, two)

    priority = doc.get("priority", DEFAULT_PRIORITY)
    if not isinstance(priority, int) or isinstance(priority, bool) or priority < 1:
        raise RequestSchemaError("priority must be a positive integer")
    selector = _parse_selector(doc.get("selector", {}))
    return request, priority, selector


class _ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    # headers and body leave as separate writes; without this Nagle holds the
    # body back for the delayed ACK and every response takes an extra 40 ms
    disable_nagle_algorithm = True

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        pass  # request logging would dominate benchmark runs

    @property
    def controller(self) -> Controller:
        return self.server.controller  # type: ignore[attr-defined]

    def _reply(self, status: int, body: dict | list | None) -> None:
        payload = b"" if body is None else json.dumps(body).encode("utf-8")
        self.send_response(status)
        if payload:
            self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        if payload:
            self.wfile.write(payload)

    def _error(self, status: int, reason: str) -> None:
        self._reply(status, {"error": reason})

    def _read_json(self) -> Any:
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise RequestSchemaError(f"body is not valid JSON: {exc}") from None

    def do_POST(self) -> None:
        if self.path == "/intents":
            self._post_intent()
        elif self.path == "/intents/batch":
            self._post_batch()
        else:
            self._error(404, f"no such route: POST {self.path}")

    def _post_intent(self) -> None:
        controller = self.controller
        try:
            doc = self._read_json()
            request, priority, selector = parse_intent_document(doc)
        except RequestSchemaError as exc:
            self._error(400, str(exc))
            return
        try:
            intent_id = controller.submit(request, priority=priority, selector=selector)
        except StoreCapacityError as exc:
            self._error(409, str(exc))
            return
        except IntentValidationError as exc:
            self._error(422, str(exc))
            return
        intent = controller.get(intent_id)
        self._reply(201, intent_document(controller, intent))

    def _post_batch(self) -> None:
        controller = self.controller
        try:
            doc = self._read_json()
            request, priority, selector = parse_intent_document(
                doc, extra_fields=("count",)
            )
            count = doc.get("count")
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                raise RequestSchemaError("count must be a positive integer")
        except RequestSchemaError as exc:
            self._error(400, str(exc))
            return
        installed = failed = 0
        try:
            for _ in range(count):
                intent_id = controller.submit(
                    request, priority=priority, selector=selector
                )
                if controller.get(intent_id).state is IntentState.INSTALLED:
                    installed += 1
                else:
                    failed += 1
        except StoreCapacityError as exc:
            if installed + failed == 0:
                self._error(409, str(exc))
                return
        except IntentValidationError as exc:
            self._error(422, str(exc))
            return
        self._reply(
            201, {"submitted": installed + failed, "installed": installed, "failed": failed}
        )

    def do_GET(self) -> None:
        controller = self.controller
        if self.path == "/health":
            self._reply(
                200,
                {
                    "intents_live": controller.live_intents(),
                    "rules_installed": controller.installed_rules(),
                },
            )
        elif self.path == "/intents":
            docs = [intent_document(controller, i) for i in controller.list()]
            self._reply(200, docs)
        elif self.path.startswith("/intents/"):
            raw = self.path[len("/intents/") :]
            if not raw.isdigit():
                self._error(404, f"unknown intent {raw}")
                return
            try:
                intent = controller.get(int(raw))
            except UnknownIntentError as exc:
                self._error(404, str(exc))
                return
            self._reply(200, intent_document(controller, intent))
        else:
            self._error(404, f"no such route: GET {self.path}")

    def do_DELETE(self) -> None:
        controller = self.controller
        if not self.path.startswith("/intents/"):
            self._error(404, f"no such route: DELETE {self.path}")
            return
        raw = self.path[len("/intents/") :]
        if not raw.isdigit():
            self._error(404, f"unknown intent {raw}")
            return
        try:
            controller.withdraw(int(raw))
        except UnknownIntentError as exc:
            self._error(404, str(exc))
            return
        except IllegalStateError as exc:
            self._error(409, str(exc))
            return
        self._reply(204, None)


class RestServer:
    """Threaded HTTP server wrapper; bind with port 0 for an ephemeral port."""

    def __init__(
        self,
        controller: Controller,
        host: str = DEFAULT_HOST,
        port: int = DEFAULT_PORT,
    ) -> None:
        self._server = ThreadingHTTPServer((host, port), _ApiHandler)
        self._server.daemon_threads = True
        self._server.controller = controller  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    @property
    def controller(self) -> Controller:
        return self._server.controller  # type: ignore[attr-defined]

    @controller.setter
    def controller(self, controller: Controller) -> None:
        self._server.controller = controller  # type: ignore[attr-defined]

    def start(self) -> "RestServer":
        thread = threading.Thread(
            target=self._server.serve_forever, name="intentd-rest", daemon=True
        )
        thread.start()
        self._thread = thread
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


class RestClient:
    """Minimal JSON client that reuses one HTTP connection."""

    def __init__(self, host: str, port: int, timeout: float = 10.0) -> None:
        self.host = host
        self.port = port
        self.timeout = timeout
        self._conn: http.client.HTTPConnection | None = None

    def _connection(self) -> http.client.HTTPConnection:
        if self._conn is None:
            self._conn = http.client.HTTPConnection(
                self.host, self.port, timeout=self.timeout
            )
        return self._conn

    def request(
        self, method: str, path: str, body: dict | bytes | None = None
    ) -> tuple[int, Any]:
        if isinstance(body, dict):
            body = json.dumps(body).encode("utf-8")
        headers = {"Content-Type": "application/json"} if body else {}
        for attempt in (1, 2):
            conn = self._connection()
            try:
                conn.request(method, path, body=body, headers=headers)
                response = conn.getresponse()
                raw = response.read()
                break
            except (http.client.HTTPException, BrokenPipeError, ConnectionResetError):
                # stale keep-alive connection; reconnect once
                self.close()
                if attempt == 2:
                    raise
            except (ConnectionRefusedError, socket.timeout, OSError) as exc:
                self.close()
                raise UnreachableEndpointError(
                    f"cannot reach http://{self.host}:{self.port}: {exc}"
                ) from None
        parsed = json.loads(raw) if raw else None
        return response.status, parsed

    def post_intent(self, doc: dict | bytes) -> tuple[int, Any]:
        return self.request("POST", "/intents", doc)

    def post_batch(self, doc: dict) -> tuple[int, Any]:
        return self.request("POST", "/intents/batch", doc)

    def get_intents(self) -> tuple[int, Any]:
        return self.request("GET", "/intents")

    def get_intent(self, intent_id: int | str) -> tuple[int, Any]:
        return self.request("GET", f"/intents/{intent_id}")

    def delete_intent(self, intent_id: int | str) -> tuple[int, Any]:
        return self.request("DELETE", f"/intents/{intent_id}")

    def health(self) -> tuple[int, Any]:
        return self.request("GET", "/health")

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()
            self._conn = None
