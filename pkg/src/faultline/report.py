"""Exploration reports: canonical JSON plus a static, color-coded HTML table."""

from __future__ import annotations

import datetime as _dt
import enum
import html
import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .explorer import ExplorationConfig, IterationOutcome, Status, TestResult
from .faults import FaultAssignment, fault_from_dict
from .intercept import CallDescriptor, CallKind, ExecutionTrace, FaultRecord, InvocationRecord

SCHEMA_VERSION = 1

TIMESTAMP_KEYS = ("generated_at",)


class Category(str, enum.Enum):
    NONE = "None"
    BYZANTINE = "Byzantine"
    EXCEPTION = "Exception"
    DEFERRED = "DeferredResolution"


CATEGORY_COLORS = {
    Category.BYZANTINE: "#F5A623",
    Category.EXCEPTION: "#D0021B",
    Category.DEFERRED: "rgba(248, 231, 28, 0.4)",  # #F8E71C at 40%
}


@dataclass
class Summary:
    total: int
    passed: int
    failed: int
    errored: int
    truncated: bool = False
    warnings: list = field(default_factory=list)


@dataclass
class TestReport:
    __test__ = False

    test_block_digest: str
    test_name: str
    config: dict
    iterations: list
    summary: Summary
    generated_at: str = field(default="", compare=False)

    @classmethod
    def build(cls, digest: str, name: str, config: ExplorationConfig,
              iterations: list, truncated: bool, warnings: list) -> "TestReport":
        counts = {s: 0 for s in Status}
        for it in iterations:
            counts[it.test_result.status] += 1
        summary = Summary(len(iterations), counts[Status.PASSED], counts[Status.FAILED],
                          counts[Status.ERRORED], truncated, list(warnings))
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(digest, name, config.to_dict(), list(iterations), summary, stamp)

    @property
    def all_passed(self) -> bool:
        return self.summary.failed == 0 and self.summary.errored == 0

    def exit_code(self) -> int:
        return 0 if self.all_passed else 1


@dataclass(frozen=True)
class ReportRow:
    rpc_method: str
    rpc_arguments: str
    rpc_response: str
    fault_injected: Optional[str]
    category: Category


def category_of(record: InvocationRecord) -> Category:
    if record.fault is None:
        return Category.NONE
    if record.kind is CallKind.DEFERRED:
        return Category.DEFERRED
    return Category.BYZANTINE if record.fault.kind == "byzantine" else Category.EXCEPTION


def rows_for(trace: ExecutionTrace) -> list[ReportRow]:
    return [
        ReportRow(r.descriptor.method_fqn, r.descriptor.args_preview, r.response_preview,
                  r.fault.rendering if r.fault else None, category_of(r))
        for r in trace.records
    ]


# -- JSON -----------------------------------------------------------------------------

def _descriptor_doc(d: CallDescriptor) -> dict:
    return {"method_fqn": d.method_fqn, "args_digest": d.args_digest,
            "args_preview": d.args_preview, "ordinal": d.ordinal}


def _descriptor(doc: Mapping) -> CallDescriptor:
    return CallDescriptor(doc["method_fqn"], doc["args_digest"], doc["args_preview"],
                          doc["ordinal"])


def _record_doc(r: InvocationRecord) -> dict:
    return {
        "seq": r.seq,
        "site": r.site,
        "kind": r.kind.value,
        **_descriptor_doc(r.descriptor),
        "response_preview": r.response_preview,
        "origin": r.origin,
        "category": category_of(r).value,
        "fault": None if r.fault is None else {
            "kind": r.fault.kind,
            "rendering": r.fault.rendering,
            "spec": r.fault.spec.to_dict(),
        },
    }


def _record(doc: Mapping) -> InvocationRecord:
    fault = None
    if doc["fault"] is not None:
        f = doc["fault"]
        fault = FaultRecord(f["kind"], fault_from_dict(f["spec"]), f["rendering"])
    return InvocationRecord(doc["seq"], doc["site"], _descriptor(doc), CallKind(doc["kind"]),
                            doc["response_preview"], fault, doc["origin"])


def _outcome_doc(o: IterationOutcome) -> dict:
    return {
        "iteration_index": o.iteration_index,
        "test_result": {"status": o.test_result.status.value, "detail": o.test_result.detail},
        "assignment": [
            {"site": site, **_descriptor_doc(o.assignment.descriptors[site]),
             "fault": fault.to_dict()}
            for site, fault in o.assignment.items()
        ],
        "not_reached": list(o.not_reached),
        "warnings": list(o.warnings),
        "trace": {
            "test_block_digest": o.trace.test_block_digest,
            "records": [_record_doc(r) for r in o.trace.records],
        },
    }


def _outcome(doc: Mapping) -> IterationOutcome:
    faults, descriptors = {}, {}
    for a in doc["assignment"]:
        faults[a["site"]] = fault_from_dict(a["fault"])
        descriptors[a["site"]] = _descriptor(a)
    trace = ExecutionTrace(doc["trace"]["test_block_digest"],
                           [_record(r) for r in doc["trace"]["records"]])
    result = TestResult(Status(doc["test_result"]["status"]), doc["test_result"]["detail"])
    return IterationOutcome(doc["iteration_index"], FaultAssignment(faults, descriptors), trace,
                            result, list(doc["not_reached"]), list(doc["warnings"]))


def report_to_dict(report: TestReport) -> dict:
    s = report.summary
    return {
        "schema_version": SCHEMA_VERSION,
        "generated_at": report.generated_at,
        "test_name": report.test_name,
        "test_block_digest": report.test_block_digest,
        "config": report.config,
        "summary": {"total": s.total, "passed": s.passed, "failed": s.failed,
                    "errored": s.errored, "truncated": s.truncated, "warnings": s.warnings},
        "iterations": [_outcome_doc(o) for o in report.iterations],
    }


def report_from_dict(doc: Mapping) -> TestReport:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema version {doc.get('schema_version')!r}")
    s = doc["summary"]
    summary = Summary(s["total"], s["passed"], s["failed"], s["errored"], s["truncated"],
                      list(s["warnings"]))
    return TestReport(doc["test_block_digest"], doc["test_name"], dict(doc["config"]),
                      [_outcome(o) for o in doc["iterations"]], summary,
                      doc.get("generated_at", ""))


def dumps(report: TestReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> TestReport:
    return report_from_dict(json.loads(text))


def emit_json_report(report: TestReport, path) -> str:
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))
    return path


def parse_json_report(path) -> TestReport:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def strip_timestamps(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k not in TIMESTAMP_KEYS}


# -- HTML -----------------------------------------------------------------------------

_STYLE = """
body { font-family: sans-serif; margin: 1.5em; }
table { border-collapse: collapse; width: 100%; margin-bottom: 1.5em; }
th, td { border: 1px solid #999; padding: 4px 6px; vertical-align: top; text-align: left; }
th { background: #eee; }
td pre { margin: 0; white-space: pre-wrap; font-size: 0.85em; }
tr.test-block td { background: #f4f4f4; font-weight: bold; }
.banner { padding: 0.6em; margin: 0.6em 0; border: 2px solid #D0021B; font-weight: bold; }
section.failed > h2 { color: #D0021B; }
.verdict { padding: 0 0.4em; }
"""


def _row_style(category: Category) -> str:
    color = CATEGORY_COLORS.get(category)
    if color is None:
        return ""
    fg = "#fff" if category is Category.EXCEPTION else "#000"
    return f' style="background-color: {color}; color: {fg};"'


def _fault_cell(text: Optional[str]) -> str:
    if text is None:
        return ""
    try:
        text = json.dumps(json.loads(text), indent=2, ensure_ascii=False)
    except ValueError:
        pass
    return "<pre>" + html.escape(text) + "</pre>"


def render_html(report: TestReport) -> str:
    esc = html.escape
    s = report.summary
    out = [
        "<!DOCTYPE html>",
        '<html lang="en"><head><meta charset="utf-8">',
        f"<title>Fault injection report: {esc(report.test_name)}</title>",
        f"<style>{_STYLE}</style></head><body>",
        f"<h1>Fault injection report: {esc(report.test_name)}</h1>",
        f"<p>Iterations: {s.total} &middot; passed: {s.passed} &middot; failed: {s.failed}"
        f" &middot; errored: {s.errored}</p>",
    ]
    if s.truncated:
        out.append('<div class="banner truncated">Exploration truncated: not every fault'
                   " assignment was executed.</div>")
    if s.warnings:
        out.append("<ul class=\"warnings\">" + "".join(
            f"<li>{esc(w)}</li>" for w in s.warnings) + "</ul>")
    for it in report.iterations:
        status = it.test_result.status
        failed = status is not Status.PASSED
        label = "baseline" if not it.assignment else f"{len(it.assignment)} fault(s)"
        out.append(f'<section class="iteration{" failed" if failed else ""}"'
                   f' id="iteration-{it.iteration_index}">')
        verdict = esc(status.value.upper()) if failed else esc(status.value)
        out.append(f"<h2>Iteration {it.iteration_index} ({label}):"
                   f' <span class="verdict">{verdict}</span></h2>')
        if failed:
            out.append(f'<div class="banner">Test {esc(status.value.lower())}:'
                       f" {esc(it.test_result.detail)}</div>")
        if it.not_reached:
            out.append(f"<p>Assigned but not reached: {len(it.not_reached)} site(s)</p>")
        out.append("<table><thead><tr><th>RPC Method</th><th>RPC Arguments</th>"
                   "<th>RPC Response</th><th>Fault Injected?</th></tr></thead><tbody>")
        out.append(f'<tr class="test-block"><td colspan="4">Test Block:'
                   f" {esc(it.trace.test_block_digest)}</td></tr>")
        for row in rows_for(it.trace):
            cls = row.category.value.lower()
            out.append(
                f'<tr class="cat-{cls}"{_row_style(row.category)}>'
                f"<td>{esc(row.rpc_method)}</td><td>{esc(row.rpc_arguments)}</td>"
                f"<td>{esc(row.rpc_response)}</td><td>{_fault_cell(row.fault_injected)}</td></tr>"
            )
        out.append("</tbody></table></section>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"


def emit_html_report(report: TestReport, path) -> str:
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_html(report))
    return path
