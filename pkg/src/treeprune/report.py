"""Analysis reports, their JSON form and site collation."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from . import __version__
from .const.defaults import REPORT_SCHEMA
from .exceptions import TreePruneInputError
from .frontend import Page
from .guards import format_guard
from .rewrite import RewriteSystem
from .saturation import Analysis, Verdict
from .trees import format_tree
from .witness import WitnessTrace

_LOGGER = logging.getLogger(__name__)

Status = Literal["redundant", "reachable", "unsupported"]
_STATUSES = ("redundant", "reachable", "unsupported")
_STATUS_STYLE = {"redundant": "red", "reachable": "green", "unsupported": "yellow"}


@dataclass(frozen=True)
class StepRecord:
    node: tuple[int, ...]
    rule: str
    synthetic: bool = False


@dataclass(frozen=True)
class WitnessRecord:
    """Printable witness: start tree, rule applications and the tree they reach."""

    initial: str
    steps: tuple[StepRecord, ...]
    final: str

    @classmethod
    def from_trace(cls, trace: WitnessTrace) -> WitnessRecord:
        steps = tuple(StepRecord(s.node, s.rule, s.synthetic) for s in trace.steps)
        return cls(format_tree(trace.initial), steps, format_tree(trace.final))

    def lines(self) -> list[str]:
        out = [f"init {self.initial}"]
        for s in self.steps:
            where = ".".join(map(str, s.node)) or "root"
            out.append(f"{s.rule} at {where}{' (synthetic)' if s.synthetic else ''}")
        out.append(f"final {self.final}")
        return out


@dataclass(frozen=True)
class SelectorVerdict:
    """Outcome for one query or stylesheet selector.

    ``query`` is None for selectors that could not be translated.
    """

    query: str | None
    selector: str
    source: str | None
    status: Status
    guard: str | None
    witness: WitnessRecord | None = None
    notes: tuple[str, ...] = ()

    @property
    def key(self) -> tuple[str | None, str]:
        return self.source, self.selector


@dataclass(frozen=True)
class Statistics:
    nodes: int
    selectors: int
    redundant: int
    unsupported: int
    rules: int
    simple_rules: int


@dataclass(frozen=True)
class Report:
    version: str
    inputs: tuple[str, ...]
    verdicts: tuple[SelectorVerdict, ...]
    statistics: Statistics
    warnings: tuple[str, ...] = ()
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def redundant(self) -> list[SelectorVerdict]:
        return [v for v in self.verdicts if v.status == "redundant"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "version": self.version,
            "inputs": list(self.inputs),
            "statistics": _statistics_to_dict(self.statistics),
            "verdicts": [_verdict_to_dict(v) for v in self.verdicts],
            "warnings": list(self.warnings),
            "timings": dict(self.timings),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Report:
        """Rebuild a report from ``to_dict`` output.

        Raises:
            TreePruneInputError: On a different schema or a malformed mapping
        """
        _check_schema(data)
        try:
            return cls(
                version=str(data["version"]),
                inputs=tuple(data["inputs"]),
                verdicts=tuple(_verdict_from_dict(v) for v in data["verdicts"]),
                statistics=Statistics(**data["statistics"]),
                warnings=tuple(data.get("warnings", ())),
                timings={str(k): float(v) for k, v in data.get("timings", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as e:
            raise TreePruneInputError(f"Malformed report: {e}") from e


@dataclass(frozen=True)
class SiteVerdict:
    """Selector verdict over every page that uses it."""

    source: str | None
    selector: str
    status: Status
    pages: tuple[str, ...]
    reachable_on: tuple[str, ...] = ()


@dataclass(frozen=True)
class SiteReport:
    version: str
    pages: tuple[Report, ...]
    verdicts: tuple[SiteVerdict, ...]

    @property
    def redundant(self) -> list[SiteVerdict]:
        return [v for v in self.verdicts if v.status == "redundant"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "version": self.version,
            "site": {
                "selectors": len(self.verdicts),
                "redundant": len(self.redundant),
                "verdicts": [
                    {
                        "source": v.source,
                        "selector": v.selector,
                        "status": v.status,
                        "pages": list(v.pages),
                        "reachable_on": list(v.reachable_on),
                    }
                    for v in self.verdicts
                ],
            },
            "pages": [p.to_dict() for p in self.pages],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SiteReport:
        _check_schema(data)
        try:
            verdicts = tuple(
                SiteVerdict(
                    v["source"],
                    v["selector"],
                    _status(v["status"]),
                    tuple(v["pages"]),
                    tuple(v.get("reachable_on", ())),
                )
                for v in data["site"]["verdicts"]
            )
            pages = tuple(Report.from_dict(p) for p in data["pages"])
        except (KeyError, TypeError) as e:
            raise TreePruneInputError(f"Malformed site report: {e}") from e
        return cls(str(data["version"]), pages, verdicts)


# --- codec helpers ------------------------------------------------------------


def _check_schema(data: Any) -> None:
    if not isinstance(data, dict):
        raise TreePruneInputError("Report must be a mapping")
    if data.get("schema") != REPORT_SCHEMA:
        raise TreePruneInputError(f"Unsupported report schema {data.get('schema')!r}, expected {REPORT_SCHEMA}")


def _status(value: Any) -> Status:
    if value == "redundant":
        return "redundant"
    if value == "reachable":
        return "reachable"
    if value == "unsupported":
        return "unsupported"
    raise TreePruneInputError(f"Unknown verdict status {value!r}; expected one of {', '.join(_STATUSES)}")


def _statistics_to_dict(s: Statistics) -> dict[str, int]:
    return {
        "nodes": s.nodes,
        "selectors": s.selectors,
        "redundant": s.redundant,
        "unsupported": s.unsupported,
        "rules": s.rules,
        "simple_rules": s.simple_rules,
    }


def _verdict_to_dict(v: SelectorVerdict) -> dict[str, Any]:
    out: dict[str, Any] = {
        "query": v.query,
        "selector": v.selector,
        "source": v.source,
        "status": v.status,
        "guard": v.guard,
        "notes": list(v.notes),
    }
    if v.witness is not None:
        out["witness"] = {
            "initial": v.witness.initial,
            "steps": [{"node": list(s.node), "rule": s.rule, "synthetic": s.synthetic} for s in v.witness.steps],
            "final": v.witness.final,
        }
    return out


def _verdict_from_dict(data: dict[str, Any]) -> SelectorVerdict:
    witness = None
    if data.get("witness") is not None:
        w = data["witness"]
        steps = tuple(StepRecord(tuple(s["node"]), s["rule"], bool(s.get("synthetic", False))) for s in w["steps"])
        witness = WitnessRecord(w["initial"], steps, w["final"])
    return SelectorVerdict(
        query=data["query"],
        selector=data["selector"],
        source=data["source"],
        status=_status(data["status"]),
        guard=data["guard"],
        witness=witness,
        notes=tuple(data.get("notes", ())),
    )


# --- building -----------------------------------------------------------------


def _analysis_verdict(
    name: str, selector: str, source: str | None, guard: str, v: Verdict, witness: bool
) -> SelectorVerdict:
    record = WitnessRecord.from_trace(v.witness) if witness and v.witness is not None else None
    return SelectorVerdict(name, selector, source, v.status, guard, record, v.warnings)


def _statistics(nodes: int, verdicts: Sequence[SelectorVerdict], rules: int, analysis: Analysis) -> Statistics:
    return Statistics(
        nodes=nodes,
        selectors=len(verdicts),
        redundant=sum(v.status == "redundant" for v in verdicts),
        unsupported=sum(v.status == "unsupported" for v in verdicts),
        rules=rules,
        simple_rules=len(analysis.simple.rules),
    )


def system_report(
    system: RewriteSystem,
    analysis: Analysis,
    inputs: Iterable[str] = (),
    *,
    witness: bool = False,
) -> Report:
    """Report over the queries of a rewrite system, in declaration order."""
    by_name = {v.query: v for v in analysis.verdicts}
    verdicts = tuple(
        _analysis_verdict(name, name, None, format_guard(g), by_name[name], witness) for name, g in system.queries
    )
    return Report(
        version=__version__,
        inputs=tuple(inputs),
        verdicts=verdicts,
        statistics=_statistics(len(system.initial), verdicts, len(system.rules), analysis),
        warnings=tuple(analysis.warnings),
        timings=dict(analysis.timings),
    )


def page_report(
    page: Page,
    system: RewriteSystem,
    analysis: Analysis,
    *,
    witness: bool = False,
    timings: dict[str, float] | None = None,
) -> Report:
    """Report over every stylesheet selector of ``page``, supported or not, in stylesheet order."""
    by_name = {v.query: v for v in analysis.verdicts}
    names = {id(e): name for name, e in page.queries()}
    verdicts: list[SelectorVerdict] = []
    for e in page.selectors:
        if e.guard is None:
            verdicts.append(SelectorVerdict(None, e.text, e.source, "unsupported", None, None, (e.reason or "",)))
            continue
        name = names[id(e)]
        verdicts.append(_analysis_verdict(name, e.text, e.source, format_guard(e.guard), by_name[name], witness))
    merged = dict(timings or {})
    for phase, seconds in analysis.timings.items():
        merged[phase] = merged.get(phase, 0.0) + seconds
    return Report(
        version=__version__,
        inputs=(page.source,),
        verdicts=tuple(verdicts),
        statistics=_statistics(len(page.tree), verdicts, len(system.rules), analysis),
        warnings=tuple(dict.fromkeys([*page.warnings, *analysis.warnings])),
        timings=merged,
    )


def collate(reports: Sequence[Report]) -> SiteReport:
    """Site verdicts: a selector is redundant when no page using it can match it.

    Selectors are identified by source location and text, so a shared
    stylesheet contributes one site verdict per selector.
    """
    seen: dict[tuple[str | None, str], list[tuple[str, SelectorVerdict]]] = {}
    for report in reports:
        page = report.inputs[0] if report.inputs else "?"
        for v in report.verdicts:
            seen.setdefault(v.key, []).append((page, v))
    verdicts: list[SiteVerdict] = []
    for (source, selector), uses in seen.items():
        reachable = tuple(p for p, v in uses if v.status == "reachable")
        status: Status
        if reachable:
            status = "reachable"
        elif any(v.status == "unsupported" for _, v in uses):
            status = "unsupported"
        else:
            status = "redundant"
        verdicts.append(SiteVerdict(source, selector, status, tuple(p for p, _ in uses), reachable))
    site = SiteReport(__version__, tuple(reports), tuple(verdicts))
    _LOGGER.debug(f"Collated {len(reports)} pages: {len(site.redundant)} of {len(verdicts)} selectors redundant")
    return site


# --- rendering ----------------------------------------------------------------


def _verdict_table(title: str, verdicts: Sequence[SelectorVerdict]) -> Table:
    table = Table(title=title)
    table.add_column("Selector", style="cyan")
    table.add_column("Source", style="magenta")
    table.add_column("Status")
    table.add_column("Guard", style="dim")
    for v in verdicts:
        style = _STATUS_STYLE[v.status]
        table.add_row(
            escape(v.selector), escape(v.source or ""), f"[{style}]{v.status}[/{style}]", escape(v.guard or "")
        )
    return table


def render_report(console: Console, report: Report, *, show_witness: bool = False) -> None:
    """Print ``report`` as tables."""
    console.print(_verdict_table(", ".join(report.inputs) or "Report", report.verdicts))
    s = report.statistics
    console.print(
        f"nodes={s.nodes} selectors={s.selectors} redundant={s.redundant} "
        f"unsupported={s.unsupported} rules={s.rules} simple_rules={s.simple_rules}"
    )
    if report.timings:
        console.print(" ".join(f"{k}={v:.3f}s" for k, v in report.timings.items()))
    if show_witness:
        for v in report.verdicts:
            if v.witness is not None:
                console.print(f"[bold]Witness for {escape(v.selector)}[/bold]")
                for line in v.witness.lines():
                    console.print(f"  {line}", markup=False)
    for w in report.warnings:
        console.print(f"[yellow]warning:[/yellow] {escape(w)}", highlight=False)


def render_site(console: Console, site: SiteReport, *, show_witness: bool = False) -> None:
    for page in site.pages:
        render_report(console, page, show_witness=show_witness)
    table = Table(title="Site")
    table.add_column("Selector", style="cyan")
    table.add_column("Source", style="magenta")
    table.add_column("Status")
    table.add_column("Reachable on", style="dim")
    for v in site.verdicts:
        style = _STATUS_STYLE[v.status]
        table.add_row(
            escape(v.selector), escape(v.source or ""), f"[{style}]{v.status}[/{style}]", ", ".join(v.reachable_on)
        )
    console.print(table)
    console.print(f"site selectors={len(site.verdicts)} redundant={len(site.redundant)}")
