"""Systematic re-execution of a functional test under injected faults.

The baseline iteration runs with no faults and yields the initial call
sites. Every site contributes its catalog exceptions and the full
Byzantine space of its recorded response. Those become single-fault
assignments, followed by cross-site combinations up to
``max_combination_size``. Sites that only appear once a fault is active
are folded back in: each of their faults is queued merged with the
assignment that revealed them.
"""

from __future__ import annotations

import enum
import itertools
import json
import logging
import random
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from .errors import BaselineFailed, OutsideIteration
from .faults import (ByzantineFault, FaultAssignment, FaultCatalog, FaultSpec,
                     catalogs_by_interface, enumerate_exception_faults, load_catalog)
from .intercept import CallDescriptor, CallKind, ExecutionTrace, Session
from .interfaces import DEFAULT_INTERFACES, InterfaceRegistry, split_fqn
from .transformers import StructuredTransform, TransformerRegistry

log = logging.getLogger(__name__)

FunctionalTest = Callable[[Session], Any]


@dataclass
class ExplorationConfig:
    max_combination_size: int = 2
    byte_flip_cap: int = 64
    enable_cache_miss: bool = False
    # restricts cache-miss faults to these methods; empty means every site
    cache_miss_methods: list = field(default_factory=list)
    max_iterations: int = 10000
    catalog_paths: list = field(default_factory=list)
    abort_on_first_failure: bool = False
    # test hook: pop pending assignments in seeded random order within a size class
    shuffle_seed: Optional[int] = None

    def __post_init__(self):
        for name in ("max_combination_size", "byte_flip_cap", "max_iterations"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "ExplorationConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in doc.items()})


class Status(str, enum.Enum):
    PASSED = "Passed"
    FAILED = "Failed"
    ERRORED = "Errored"


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    status: Status
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.PASSED


@dataclass
class IterationOutcome:
    iteration_index: int
    assignment: FaultAssignment
    trace: ExecutionTrace
    test_result: TestResult
    not_reached: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


class Frontier:
    """Pending assignments, smallest combination size first, never repeated."""

    def __init__(self, limit: Optional[int] = None, rng: Optional[random.Random] = None):
        self._buckets: dict[int, deque] = {}
        self.visited: set = set()
        self.limit = limit
        self.overflow = False
        self._rng = rng

    def push(self, assignment: FaultAssignment) -> bool:
        sig = assignment.signature()
        if sig in self.visited:
            return False
        if self.limit is not None and len(self) >= self.limit:
            self.overflow = True
            return False
        self.visited.add(sig)
        self._buckets.setdefault(len(assignment), deque()).append(assignment)
        return True

    def pop(self) -> FaultAssignment:
        size = min(k for k, q in self._buckets.items() if q)
        q = self._buckets[size]
        if self._rng is not None:
            q.rotate(-self._rng.randrange(len(q)))
        return q.popleft()

    @property
    def pending(self) -> list:
        return [a for k in sorted(self._buckets) for a in self._buckets[k]]

    def __len__(self) -> int:
        return sum(len(q) for q in self._buckets.values())

    def __bool__(self) -> bool:
        return len(self) > 0


_MISSING = object()


@dataclass
class SiteInfo:
    site: str
    descriptor: CallDescriptor
    kind: CallKind
    reference: Any = _MISSING

    @property
    def has_reference(self) -> bool:
        return self.reference is not _MISSING


def sites_of(trace: ExecutionTrace) -> dict[str, SiteInfo]:
    """Call sites of a trace in first-appearance order, with clean responses.

    A site only gets a reference value when its response was observed
    without a fault; an async site's value comes from its resolution row.
    """
    sites: dict[str, SiteInfo] = {}
    for rec in trace.records:
        if rec.kind is CallKind.DEFERRED:
            info = sites.get(rec.origin)
            if info is not None and rec.resolved and rec.fault is None:
                info.reference = rec.response
            continue
        info = SiteInfo(rec.site, rec.descriptor, rec.kind)
        if rec.kind is CallKind.SYNC and rec.resolved and rec.fault is None:
            info.reference = rec.response
        sites[rec.site] = info
    return sites


def site_faults(info: SiteInfo, catalogs: Mapping[str, FaultCatalog],
                registry: TransformerRegistry, config: ExplorationConfig,
                interfaces: InterfaceRegistry = DEFAULT_INTERFACES,
                warnings: Optional[list] = None) -> list[FaultSpec]:
    """Every single fault applicable at one call site, exceptions first."""
    faults: list[FaultSpec] = []
    iface, _ = split_fqn(info.descriptor.method_fqn)
    catalog = catalogs.get(iface)
    if catalog is not None:
        faults += enumerate_exception_faults(info.site, info.descriptor, catalog, interfaces)
    if not info.has_reference:
        return faults
    ref = info.reference
    if ref is not None:
        t = registry.for_value(ref)
        if t is None:
            if warnings is not None:
                warnings.append(f"{info.descriptor.method_fqn}: no transformer for "
                                f"{type(ref).__name__} response; Byzantine faults skipped")
        else:
            if isinstance(t, StructuredTransform) and warnings is not None:
                for path in t.walk(ref)[1]:
                    warnings.append(f"{info.descriptor.method_fqn}: leaf "
                                    f"{'/'.join(map(str, path))} has no transformer; skipped")
            faults += [ByzantineFault(t.transformer_id, state) for _, state in t.iterate(ref)]
    if config.enable_cache_miss and (not config.cache_miss_methods
                                     or info.descriptor.method_fqn in config.cache_miss_methods):
        cm = registry.cache_miss
        faults += [ByzantineFault(cm.transformer_id, state) for _, state in cm.iterate(ref)]
    return faults


def enumerate_assignments(baseline_trace: ExecutionTrace, catalogs: Mapping[str, FaultCatalog],
                          registry: TransformerRegistry, config: ExplorationConfig,
                          interfaces: InterfaceRegistry = DEFAULT_INTERFACES,
                          warnings: Optional[list] = None,
                          frontier: Optional[Frontier] = None) -> Frontier:
    frontier = frontier if frontier is not None else Frontier()
    per_site = {}
    for site, info in sites_of(baseline_trace).items():
        per_site[site] = (info, site_faults(info, catalogs, registry, config, interfaces, warnings))
    for site, (info, faults) in per_site.items():
        for f in faults:
            frontier.push(FaultAssignment({site: f}, {site: info.descriptor}))
    ordered = sorted(per_site)
    for size in range(2, config.max_combination_size + 1):
        for combo in itertools.combinations(ordered, size):
            for chosen in itertools.product(*(per_site[s][1] for s in combo)):
                frontier.push(FaultAssignment(dict(zip(combo, chosen)),
                                              {s: per_site[s][0].descriptor for s in combo}))
                if frontier.overflow:
                    return frontier
    return frontier


def discover_new_sites(outcome: IterationOutcome, frontier: Frontier, known: dict,
                       catalogs: Mapping[str, FaultCatalog], registry: TransformerRegistry,
                       config: ExplorationConfig,
                       interfaces: InterfaceRegistry = DEFAULT_INTERFACES,
                       warnings: Optional[list] = None) -> Frontier:
    """Queue faults for sites first seen in ``outcome``.

    Each new fault is merged with the assignment that revealed the site;
    merges that would exceed ``max_combination_size`` are not queued.
    """
    for site, info in sites_of(outcome.trace).items():
        if site in known:
            continue
        known[site] = info
        if len(outcome.assignment) + 1 > config.max_combination_size:
            continue
        for f in site_faults(info, catalogs, registry, config, interfaces, warnings):
            frontier.push(outcome.assignment.with_fault(site, f, info.descriptor))
    return frontier


# -- fault-injection predicates ------------------------------------------------

_active_session: Optional[Session] = None


def _session(session: Optional[Session]) -> Session:
    s = session or _active_session
    if s is None:
        raise OutsideIteration("no exploration session is running")
    return s


def was_fault_injected(session: Optional[Session] = None) -> bool:
    """True iff the running iteration carries any fault assignment."""
    return _session(session).was_fault_injected()


def was_fault_injected_on(method_fqn: str, session: Optional[Session] = None) -> bool:
    return _session(session).was_fault_injected_on(method_fqn)


# -- the loop ----------------------------------------------------------------------

def _execute(test: FunctionalTest, session: Session, index: int,
             assignment: FaultAssignment, setup: Optional[Callable[[], Any]]) -> IterationOutcome:
    if setup is not None:
        setup()
    session.begin_iteration(assignment)
    try:
        test(session)
        result = TestResult(Status.PASSED)
    except AssertionError as e:
        result = TestResult(Status.FAILED, str(e) or "AssertionError")
    except Exception as e:
        result = TestResult(Status.ERRORED, f"{type(e).__name__}: {e}")
    finally:
        trace, reached = session.end_iteration()
    not_reached = [s for s in assignment if s not in reached]
    return IterationOutcome(index, assignment, trace, result, not_reached)


def _drift_warnings(outcome: IterationOutcome, known: dict) -> list:
    out = []
    for site, info in sites_of(outcome.trace).items():
        ref = known.get(site)
        if ref is None or not ref.has_reference or not info.has_reference:
            continue
        if site in outcome.assignment.faults:
            continue
        if json.dumps(ref.reference, sort_keys=True, default=repr) != json.dumps(
                info.reference, sort_keys=True, default=repr):
            out.append(f"{info.descriptor.method_fqn} {info.descriptor.args_preview}: response "
                       "differs from the recorded reference; the recorded value is kept")
    return out


def load_catalogs(paths: Iterable, interfaces: InterfaceRegistry = DEFAULT_INTERFACES
                  ) -> list[FaultCatalog]:
    return [load_catalog(p, interfaces) for p in paths]


def run_exploration(test: FunctionalTest, config: Optional[ExplorationConfig] = None, *,
                    name: Optional[str] = None, setup: Optional[Callable[[], Any]] = None,
                    catalogs: Optional[Sequence[FaultCatalog]] = None,
                    transformers: Optional[TransformerRegistry] = None,
                    interfaces: InterfaceRegistry = DEFAULT_INTERFACES):
    """Run ``test`` once fault-free, then once per enumerated fault assignment.

    ``test`` receives the :class:`Session` and must build its clients with
    :func:`~faultline.intercept.create_interceptor`. ``setup`` runs before
    every iteration and is where fixture state gets reset.

    Raises :class:`BaselineFailed` (carrying a one-iteration report) when
    the fault-free run does not pass.
    """
    from .report import TestReport

    global _active_session
    config = config or ExplorationConfig()
    name = name or getattr(test, "__qualname__", "test")
    if catalogs is None:
        catalogs = load_catalogs(config.catalog_paths, interfaces)
    by_iface = catalogs_by_interface(catalogs)
    registry = transformers or TransformerRegistry(config.byte_flip_cap)
    session = Session(name, interfaces, registry)
    warnings: list = []
    outcomes: list[IterationOutcome] = []
    truncated = False
    started = time.monotonic()

    previous, _active_session = _active_session, session
    try:
        baseline = _execute(test, session, 0, FaultAssignment(), setup)
        outcomes.append(baseline)
        if not baseline.test_result.ok:
            report = TestReport.build(session.test_block_digest, name, config, outcomes, False,
                                      warnings)
            raise BaselineFailed(f"baseline iteration {baseline.test_result.status.value}: "
                                 f"{baseline.test_result.detail}", report)

        rng = random.Random(config.shuffle_seed) if config.shuffle_seed is not None else None
        frontier = Frontier(limit=config.max_iterations, rng=rng)
        frontier.visited.add(FaultAssignment().signature())
        known = sites_of(baseline.trace)
        enumerate_assignments(baseline.trace, by_iface, registry, config, interfaces,
                              warnings, frontier)

        while frontier:
            if len(outcomes) >= config.max_iterations:
                truncated = True
                warnings.append(f"stopped at max_iterations={config.max_iterations} "
                                f"with {len(frontier)} assignments pending")
                break
            assignment = frontier.pop()
            outcome = _execute(test, session, len(outcomes), assignment, setup)
            outcome.warnings.extend(_drift_warnings(outcome, known))
            outcomes.append(outcome)
            discover_new_sites(outcome, frontier, known, by_iface, registry, config,
                               interfaces, warnings)
            if config.abort_on_first_failure and not outcome.test_result.ok:
                truncated = True
                warnings.append(f"aborted after first failing iteration {outcome.iteration_index}")
                break
        if frontier.overflow and not truncated:
            truncated = True
            warnings.append("fault space exceeded max_iterations; some assignments were never queued")
    finally:
        _active_session = previous

    log.info("explored %s: %d iterations in %.2fs", name, len(outcomes),
             time.monotonic() - started)
    return TestReport.build(session.test_block_digest, name, config, outcomes, truncated,
                            _dedupe(warnings))


def _dedupe(items: list) -> list:
    return list(dict.fromkeys(items))
