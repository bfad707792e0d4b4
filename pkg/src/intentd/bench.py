"""Benchmark harness: installation-time sweeps, saturation runs, reports.

The sweep times `workload` back-to-back intent submissions per iteration,
once through the in-process add loop and once through real HTTP requests
against a server hosted in the same process.  Between iterations the store
and fabric are reset, so every sample starts from an empty controller.
"""
from __future__ import annotations

import gc
import json
import os
import random
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .cli import load_cli_topology, timed_add
from .errors import StoreCapacityError, UnreachableEndpointError
from .intents import (
    Controller,
    IntentRequest,
    IntentState,
    MultiToSinglePoint,
    PointToPoint,
    SingleToMultiPoint,
)
from .rest import RestClient, RestServer
from .stats import LinearFit, SummaryStats, fit_linear, summarize
from .topology import Topology

INTENT_TYPES = ("P2P", "S2M", "M2S")
INTERFACES = ("CLI", "REST")

DESK_WORKLOADS = (100, 200, 300, 400, 500, 1000, 1500, 2000)
PAPER_WORKLOADS = (1000, 2000, 3000, 4000, 5000, 10000, 15000, 20000)

PROFILES: dict[str, dict] = {
    "desk": {"workloads": DESK_WORKLOADS, "iterations": 10, "capacity": 10_000},
    "paper": {"workloads": PAPER_WORKLOADS, "iterations": 50, "capacity": 500_000},
}


@dataclass(frozen=True)
class BenchmarkConfig:
    intent_types: tuple[str, ...] = INTENT_TYPES
    interfaces: tuple[str, ...] = INTERFACES
    workloads: tuple[int, ...] = DESK_WORKLOADS
    iterations: int = 10
    saturation_iterations: int = 10
    capacity: int = 500_000
    rest_endpoint: str = "127.0.0.1:8181"
    topology: str | None = None
    seed: int = 0
    output_dir: str = "bench-out"
    reset_mode: str = "purge"
    plot_scale: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "intent_types", tuple(self.intent_types))
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        object.__setattr__(self, "workloads", tuple(self.workloads))
        for t in self.intent_types:
            if t not in INTENT_TYPES:
                raise ValueError(f"unknown intent type {t!r}")
        for i in self.interfaces:
            if i not in INTERFACES:
                raise ValueError(f"unknown interface {i!r}")
        if not self.workloads:
            raise ValueError("workloads must not be empty")
        if any(b <= a for a, b in zip(self.workloads, self.workloads[1:])):
            raise ValueError("workloads must be strictly increasing")
        if any(w < 1 for w in self.workloads):
            raise ValueError("workloads must be positive")
        if self.iterations < 2:
            raise ValueError("iterations must be >= 2")
        if self.saturation_iterations < 0:
            raise ValueError("saturation_iterations must be >= 0")
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if self.reset_mode not in ("purge", "restart"):
            raise ValueError(f"unknown reset mode {self.reset_mode!r}")
        if self.plot_scale is not None and self.plot_scale < 1:
            raise ValueError("plot_scale must be >= 1")
        host, sep, port = self.rest_endpoint.partition(":")
        if not sep or not host or not port.isdigit():
            raise ValueError(f"rest_endpoint must be HOST:PORT, got {self.rest_endpoint!r}")


@dataclass(frozen=True)
class BenchmarkSample:
    intent_type: str
    interface: str
    workload: int
    iteration: int
    elapsed_ms: float
    installed: int
    failed: int

    @property
    def degraded(self) -> bool:
        return self.failed > 0


@dataclass(frozen=True)
class SaturationResult:
    intent_type: str
    run_index: int
    max_intents: int
    elapsed_ms: float


@dataclass(frozen=True)
class RatioRow:
    intent_type: str
    workload: int
    rest_mean_ms: float
    cli_mean_ms: float

    @property
    def ratio(self) -> float:
        return self.rest_mean_ms / self.cli_mean_ms


@dataclass
class BenchResults:
    samples: list[BenchmarkSample] = field(default_factory=list)
    summaries: dict[tuple[str, str, int], SummaryStats] = field(default_factory=dict)
    fits: dict[tuple[str, str], LinearFit] = field(default_factory=dict)
    ratios: list[RatioRow] = field(default_factory=list)
    saturation: dict[str, list[SaturationResult]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


@contextmanager
def _collector_paused():
    """Keep cycle-collector pauses out of a timed window (timeit's policy).

    Pause length scales with whatever the rest of the process has allocated,
    so a collection landing mid-window would couple the measurement to
    unrelated heap state.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def _cell_rng(seed: int, *key) -> random.Random:
    return random.Random(f"{seed}:" + ":".join(str(k) for k in key))


def _pick_request(topo: Topology, intent_type: str, rng: random.Random) -> IntentRequest:
    """A fixed request for one cell, drawn from the topology's edge ports."""
    points = list(topo.edge_points())
    by_device: dict[str, list] = {}
    for cp in points:
        by_device.setdefault(cp.device, []).append(cp)
    devices = sorted(by_device)
    if intent_type == "P2P":
        src_dev, dst_dev = rng.sample(devices, 2)
        return PointToPoint(rng.choice(by_device[src_dev]), rng.choice(by_device[dst_dev]))
    if intent_type == "S2M":
        src_dev, a_dev, b_dev = rng.sample(devices, 3)
        return SingleToMultiPoint(
            rng.choice(by_device[src_dev]),
            frozenset((rng.choice(by_device[a_dev]), rng.choice(by_device[b_dev]))),
        )
    a_dev, b_dev, dst_dev = rng.sample(devices, 3)
    return MultiToSinglePoint(
        frozenset((rng.choice(by_device[a_dev]), rng.choice(by_device[b_dev]))),
        rng.choice(by_device[dst_dev]),
    )


class BenchRunner:
    """Owns the controllers (and REST server) for one benchmark run."""

    def __init__(self, config: BenchmarkConfig, *, auto_start_rest: bool = True) -> None:
        self.config = config
        self.topology = load_cli_topology(config.topology)
        self._controller = Controller(self.topology)
        self._auto_start_rest = auto_start_rest
        self._server: RestServer | None = None
        self._client: RestClient | None = None

    # -- plumbing -----------------------------------------------------------

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None
        if self._server is not None:
            self._server.stop()
            self._server = None

    def __enter__(self) -> "BenchRunner":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _ensure_rest(self) -> RestClient:
        if self._client is None:
            host, _, port = self.config.rest_endpoint.partition(":")
            if self._auto_start_rest and self._server is None:
                self._server = RestServer(self._controller, host, int(port)).start()
                host, port = self._server.host, self._server.port
            self._client = RestClient(host, int(port))
        return self._client

    def _reset(self) -> None:
        """Empty the store and fabric; 'restart' swaps in a new controller."""
        if self.config.reset_mode == "restart":
            self._controller = Controller(self.topology)
            if self._server is not None:
                self._server.controller = self._controller
        else:
            self._controller.reset()

    @property
    def controller(self) -> Controller:
        return self._controller

    def rest_endpoint_in_use(self) -> str:
        if self._server is not None:
            return self._server.endpoint
        return self.config.rest_endpoint

    # -- measurement --------------------------------------------------------

    def run_workload(
        self, intent_type: str, interface: str, workload: int, iteration: int = 0
    ) -> BenchmarkSample:
        """One iteration of one cell, starting from an empty controller.

        The request is a pure function of (seed, intent type), never of the
        workload: per-intent work must stay constant along the workload axis
        or the time-vs-count series would not be comparable.
        """
        request = _pick_request(
            self.topology, intent_type, _cell_rng(self.config.seed, intent_type)
        )
        self._reset()
        # uniform heap state per iteration; collection debt from the previous
        # iteration must not land inside this one's timed window
        gc.collect()
        if interface == "CLI":
            with _collector_paused():
                timed = timed_add(self._controller, request, workload)
            elapsed_ms, installed, failed = timed.elapsed_ms, timed.installed, timed.failed
        else:
            elapsed_ms, installed, failed = self._rest_workload(request, workload)
        return BenchmarkSample(
            intent_type=intent_type,
            interface=interface,
            workload=workload,
            iteration=iteration,
            elapsed_ms=elapsed_ms,
            installed=installed,
            failed=failed,
        )

    def _rest_workload(self, request: IntentRequest, workload: int) -> tuple[float, int, int]:
        """Client-side end-to-end timing of one POST per intent."""
        client = self._ensure_rest()
        status, _ = client.health()
        if status != 200:
            raise UnreachableEndpointError(
                f"health check against {self.rest_endpoint_in_use()} returned {status}"
            )
        body = json.dumps(_request_document(request)).encode("utf-8")
        installed = 0
        failed = 0
        post = client.post_intent
        with _collector_paused():
            start = time.perf_counter_ns()
            for _ in range(workload):
                status, doc = post(body)
                if status == 201 and doc.get("state") == "INSTALLED":
                    installed += 1
                else:
                    failed += 1
            elapsed_ms = (time.perf_counter_ns() - start) / 1e6
        return elapsed_ms, installed, failed

    def run_saturation(self, intent_type: str) -> list[SaturationResult]:
        """Fill a finite-capacity store until submission fails, repeatedly."""
        results = []
        request = _pick_request(
            self.topology, intent_type, _cell_rng(self.config.seed, "saturation", intent_type)
        )
        controller = Controller(self.topology, capacity=self.config.capacity)
        for run_index in range(self.config.saturation_iterations):
            controller.reset()
            gc.collect()
            installed = 0
            with _collector_paused():
                start = time.perf_counter_ns()
                while True:
                    try:
                        intent_id = controller.submit(request)
                    except StoreCapacityError:
                        break
                    if controller.get(intent_id).state is not IntentState.INSTALLED:
                        break
                    installed += 1
                elapsed_ms = (time.perf_counter_ns() - start) / 1e6
            results.append(
                SaturationResult(
                    intent_type=intent_type,
                    run_index=run_index,
                    max_intents=installed,
                    elapsed_ms=elapsed_ms,
                )
            )
        return results

    # -- orchestration ------------------------------------------------------

    def run_sweep(self, verbose: bool = False) -> BenchResults:
        results = BenchResults()
        config = self.config
        for intent_type in config.intent_types:
            for interface in config.interfaces:
                for workload in config.workloads:
                    # one discarded warmup iteration per cell: the first pass
                    # pays first-touch costs the recorded passes should not
                    self.run_workload(intent_type, interface, workload)
                    cell_samples = []
                    for iteration in range(config.iterations):
                        sample = self.run_workload(
                            intent_type, interface, workload, iteration
                        )
                        cell_samples.append(sample)
                        results.samples.append(sample)
                    summary = summarize([s.elapsed_ms for s in cell_samples])
                    results.summaries[(intent_type, interface, workload)] = summary
                    if verbose:
                        print(
                            f"{intent_type}/{interface} workload={workload}: "
                            f"mean={summary.mean_ms:.3f}ms ci95={summary.ci95_ms:.3f}ms"
                        )
                points = [
                    (w, results.summaries[(intent_type, interface, w)].mean_ms)
                    for w in config.workloads
                ]
                if len(points) >= 3:
                    results.fits[(intent_type, interface)] = fit_linear(points)
        if "CLI" in config.interfaces and "REST" in config.interfaces:
            for intent_type in config.intent_types:
                for workload in config.workloads:
                    results.ratios.append(
                        RatioRow(
                            intent_type=intent_type,
                            workload=workload,
                            rest_mean_ms=results.summaries[
                                (intent_type, "REST", workload)
                            ].mean_ms,
                            cli_mean_ms=results.summaries[
                                (intent_type, "CLI", workload)
                            ].mean_ms,
                        )
                    )
        self._reset()
        return results

    def run(self, verbose: bool = False) -> BenchResults:
        started = time.time()
        results = self.run_sweep(verbose=verbose)
        if self.config.saturation_iterations > 0:
            for intent_type in self.config.intent_types:
                results.saturation[intent_type] = self.run_saturation(intent_type)
                if verbose:
                    runs = results.saturation[intent_type]
                    mean_max = sum(r.max_intents for r in runs) / len(runs)
                    print(f"{intent_type} saturation: mean max_intents={mean_max:.1f}")
        results.metadata = {
            "config": asdict(self.config),
            "rest_endpoint_in_use": self.rest_endpoint_in_use(),
            "clock": "perf_counter_ns",
            "cli_timing": "in-process add loop, submissions only",
            "rest_timing": "client-side end-to-end over one persistent connection",
            "hygiene": (
                "gc.collect before every iteration; collector paused inside "
                "timed windows; one discarded warmup iteration per cell"
            ),
            "ci_method": "Student-t, two-sided 95%, n-1 degrees of freedom",
            "units": "milliseconds",
            "started_unix": started,
            "finished_unix": time.time(),
        }
        return results


def _request_document(request: IntentRequest) -> dict:
    if isinstance(request, PointToPoint):
        return {
            "type": "P2P",
            "ingress": str(request.ingress),
            "egress": str(request.egress),
        }
    if isinstance(request, SingleToMultiPoint):
        return {
            "type": "S2M",
            "ingress": str(request.ingress),
            "egresses": [str(cp) for cp in sorted(request.egresses)],
        }
    if isinstance(request, MultiToSinglePoint):
        return {
            "type": "M2S",
            "ingresses": [str(cp) for cp in sorted(request.ingresses)],
            "egress": str(request.egress),
        }
    raise ValueError(f"no benchmark document for {type(request).__name__}")


# -- reporting --------------------------------------------------------------


def emit_report(results: BenchResults, config: BenchmarkConfig) -> list[str]:
    """Write the CSV report set plus metadata; returns the file paths."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    paths = []

    def emit(name: str, header: str, rows: Iterable[Sequence]) -> None:
        path = os.path.join(out, name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        paths.append(path)

    emit(
        "samples.csv",
        "intent_type,interface,workload,iteration,elapsed_ms,installed,failed",
        (
            (s.intent_type, s.interface, s.workload, s.iteration, s.elapsed_ms,
             s.installed, s.failed)
            for s in results.samples
        ),
    )

    summary_header = "intent_type,interface,workload,n,mean_ms,stddev_ms,ci95_ms,cov"
    if config.plot_scale is not None:
        summary_header += ",ci_plot_scale"

    def summary_rows():
        for (intent_type, interface, workload), s in results.summaries.items():
            row = [intent_type, interface, workload, s.n, s.mean_ms, s.stddev_ms,
                   s.ci95_ms, s.cov]
            if config.plot_scale is not None:
                row.append(s.ci95_ms * config.plot_scale)
            yield row

    emit("summary.csv", summary_header, summary_rows())

    emit(
        "ratio.csv",
        "intent_type,workload,rest_mean_ms,cli_mean_ms,ratio",
        (
            (r.intent_type, r.workload, r.rest_mean_ms, r.cli_mean_ms, r.ratio)
            for r in results.ratios
        ),
    )

    emit(
        "fit.csv",
        "intent_type,interface,slope_ms_per_intent,intercept_ms,r_squared",
        (
            (intent_type, interface, f.slope, f.intercept, f.r_squared)
            for (intent_type, interface), f in results.fits.items()
        ),
    )

    if results.saturation:
        emit(
            "saturation.csv",
            "intent_type,run_index,max_intents,elapsed_ms",
            (
                (r.intent_type, r.run_index, r.max_intents, r.elapsed_ms)
                for runs in results.saturation.values()
                for r in runs
            ),
        )
        emit(
            "saturation_summary.csv",
            "intent_type,runs,mean_max_intents,mean_elapsed_ms",
            (
                (
                    intent_type,
                    len(runs),
                    sum(r.max_intents for r in runs) / len(runs),
                    sum(r.elapsed_ms for r in runs) / len(runs),
                )
                for intent_type, runs in results.saturation.items()
            ),
        )

    meta_path = os.path.join(out, "metadata.json")
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(results.metadata, fh, indent=2)
    paths.append(meta_path)
    return paths


# -- CLI glue ---------------------------------------------------------------


def _parse_list(text: str, cast=str) -> tuple:
    return tuple(cast(item.strip()) for item in text.split(",") if item.strip())


def config_from_args(args) -> BenchmarkConfig:
    """Merge profile defaults, an optional JSON config file, and CLI flags."""
    values: dict = dict(PROFILES[args.profile])
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValueError("bench config file must hold a JSON object")
        unknown = set(file_values) - set(BenchmarkConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown bench config keys: {sorted(unknown)}")
        values.update(file_values)
    if args.types:
        values["intent_types"] = _parse_list(args.types)
    if args.interfaces:
        values["interfaces"] = _parse_list(args.interfaces)
    if args.workloads:
        values["workloads"] = _parse_list(args.workloads, int)
    if args.iterations is not None:
        values["iterations"] = args.iterations
    if args.saturation is not None:
        values["saturation_iterations"] = args.saturation
    if args.capacity is not None:
        values["capacity"] = args.capacity
    if args.rest_endpoint:
        values["rest_endpoint"] = args.rest_endpoint
    if args.seed is not None:
        values["seed"] = args.seed
    if args.out:
        values["output_dir"] = args.out
    if args.plot_scale is not None:
        values["plot_scale"] = args.plot_scale
    if args.reset_mode:
        values["reset_mode"] = args.reset_mode
    if args.topology:
        values["topology"] = args.topology
    return BenchmarkConfig(**values)
