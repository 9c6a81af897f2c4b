"""Command-line interface for treeprune."""

import json
import logging
import sys
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, NoReturn

try:
    import click
    import yaml  # type: ignore[import-untyped]
    from rich.console import Console
    from rich.markup import escape
except ImportError:
    print("CLI dependencies not installed. Install with: pip install treeprune[cli]")
    sys.exit(1)

from . import __version__
from .const.defaults import (
    DEFAULT_CONFIG_FILE,
    DEFAULT_MAX_NODES,
    DEFAULT_MAX_STEPS,
    DEFAULT_MAX_TREES,
    EXIT_INCONSISTENT,
    EXIT_INPUT_ERROR,
    THREADS_ENV,
)
from .exceptions import TreePruneError, TreePruneInputError
from .frontend import Page, build_page, page_system
from .report import Report, collate, page_report, render_report, render_site, system_report
from .rewrite import EnumerationCaps, RewriteSystem
from .saturation import Analysis, AnalysisOptions, analyze_system
from .spds import build_spds, resolve_threads
from .system_format import format_system, load_system

console = Console()
_LOG = logging.getLogger(__name__)

# Recognized keys of the analysis section and their types
_ANALYSIS_KEYS: dict[str, tuple[type, ...]] = {
    "k": (int, type(None)),
    "threads": (int,),
    "lift_queries": (bool,),
    "max_nodes": (int,),
    "max_trees": (int,),
    "max_steps": (int,),
    "assume_html_variables": (bool,),
}


class SectionedGroup(click.Group):
    """Click Group that renders commands in named sections for --help."""

    def __init__(self, *args: Any, sections: list[tuple[str, list[str]]] | None = None, **kwargs: Any) -> None:
        super().__init__(*args, **kwargs)
        self._sections: list[tuple[str, list[str]]] = sections or []

    def format_commands(self, ctx: click.Context, formatter: click.HelpFormatter) -> None:
        if not self.commands:
            return
        if not self._sections:
            super().format_commands(ctx, formatter)
            return
        for title, names in self._sections:
            with formatter.section(title):
                rows: list[tuple[str, str]] = []
                for name in names:
                    cmd = self.get_command(ctx, name)
                    if cmd is None or cmd.hidden:
                        continue
                    rows.append((name, cmd.get_short_help_str()))
                if rows:
                    formatter.write_dl(rows)
        other_rows = [
            (name, cmd.get_short_help_str())
            for name, cmd in sorted(self.commands.items())
            if not cmd.hidden and not any(name in names for _, names in self._sections)
        ]
        if other_rows:
            with formatter.section("Other Commands"):
                formatter.write_dl(other_rows)


def load_config(config_path: Path) -> dict[str, Any]:
    """Load configuration from YAML file.

    Args:
        config_path: Path to config file

    Returns:
        Configuration dictionary with an ``analysis`` mapping
    """
    try:
        with open(config_path) as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        console.print(f"[red]Config file not found: {config_path}[/red]")
        sys.exit(EXIT_INPUT_ERROR)
    except (OSError, yaml.YAMLError) as e:
        console.print(f"[red]Error parsing config: {e}[/red]")
        sys.exit(EXIT_INPUT_ERROR)
    cfg = _normalize_config(raw)
    if cfg is None:
        console.print(
            "[red]Invalid config. Expected mapping with an 'analysis' section, e.g.\n"
            "analysis:\n  k: 3\n  threads: 4\n  max_nodes: 8[/red]"
        )
        sys.exit(EXIT_INPUT_ERROR)
    return cfg


def _normalize_config(raw: Any) -> dict[str, Any] | None:
    """Normalize YAML into a dict with an 'analysis' mapping.

    Accepts these shapes:
    - {analysis: {k, threads, ...}}
    - {k, threads, ...}
    - [{...}] (list with a single mapping)
    - nothing at all (empty file)
    Returns None if unknown.
    """
    if raw is None:
        return {"analysis": {}}
    data = raw
    if isinstance(raw, list) and len(raw) == 1:
        data = raw[0]
    if not isinstance(data, dict):
        return None
    section = data["analysis"] if "analysis" in data else data
    if not isinstance(section, dict):
        return None
    for key, value in section.items():
        types = _ANALYSIS_KEYS.get(key)
        if types is None:
            return None
        # bool is an int subclass; only the bool keys accept it
        if not isinstance(value, types) or (isinstance(value, bool) and bool not in types):
            return None
    return {"analysis": dict(section)}


def _analysis_options(
    ctx: click.Context,
    as_json: bool,
    k: int | None,
    lift_queries: bool | None,
    threads: int | None,
    oracle: bool,
    timings: bool,
) -> AnalysisOptions:
    """Command-line values override the config file."""
    cfg = ctx.obj["config"].get("analysis", {})
    try:
        caps = EnumerationCaps(
            max_nodes=cfg.get("max_nodes", DEFAULT_MAX_NODES),
            max_trees=cfg.get("max_trees", DEFAULT_MAX_TREES),
            max_steps=cfg.get("max_steps", DEFAULT_MAX_STEPS),
        )
    except TreePruneInputError as e:
        _fail(as_json, e, EXIT_INPUT_ERROR)
    if k is None:
        k = cfg.get("k")
    if k is not None and k < 0:
        _fail(as_json, TreePruneInputError(f"height bound must be non-negative, got {k}"), EXIT_INPUT_ERROR)
    return AnalysisOptions(
        k=k,
        lift_queries=cfg.get("lift_queries", False) if lift_queries is None else lift_queries,
        threads=cfg.get("threads") if threads is None else threads,
        oracle=oracle,
        caps=caps,
        timings=timings,
    )


def _fail(as_json: bool, e: Exception, code: int) -> NoReturn:
    if as_json:
        click.echo(json.dumps({"ok": False, "error": str(e)}))
    else:
        _LOG.error(f"CLI command failed: {e}")
        console.print(f"[red]Error: {escape(str(e))}[/red]", highlight=False)
    raise SystemExit(code) from e


def _guarded(as_json: bool, body: Callable[[], None]) -> None:
    """Run ``body``, mapping library errors to exit codes."""
    try:
        body()
    except TreePruneInputError as e:
        _fail(as_json, e, EXIT_INPUT_ERROR)
    except TreePruneError as e:
        _fail(as_json, e, EXIT_INCONSISTENT)


def _analysis_flags(f: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by ``check`` and ``analyze``."""
    decorators = [
        click.option("--k", "k", type=int, default=None, help="Height bound; analyze trees of height at most K"),
        click.option("--oracle", is_flag=True, help="Cross-check verdicts by explicit enumeration"),
        click.option("--witness", "-w", is_flag=True, help="Include witness traces for reachable selectors"),
        click.option(
            "--format",
            "-f",
            "fmt",
            type=click.Choice(["text", "json"]),
            default="text",
            show_default=True,
            help="Report format",
        ),
        click.option(
            "--lift-queries/--no-lift-queries",
            default=None,
            help="Decide queries as (down* g) at the root instead of matching anywhere",
        ),
        click.option(
            "--threads",
            "-t",
            type=int,
            default=None,
            envvar=THREADS_ENV,
            help=f"Worker threads for per-class work (0 = auto) [env: {THREADS_ENV}]",
        ),
        click.option("--timings", is_flag=True, help="Report wall-clock seconds per phase"),
    ]
    for decorator in reversed(decorators):
        f = decorator(f)
    return f


@click.group(
    cls=SectionedGroup,
    context_settings={"help_option_names": ["-h", "--help"]},
    sections=[
        ("Analysis", ["check", "analyze"]),
    ],
)
@click.version_option(__version__, "-v", "--version")
@click.option(
    "--config",
    "-c",
    # Missing config means defaults.
    type=click.Path(path_type=Path),
    default=DEFAULT_CONFIG_FILE,
    help="Configuration file path",
)
@click.option("--quiet", "-q", is_flag=True, help="Reduce output (WARNING)")
@click.option("--debug", "-d", is_flag=True, help="Enable debug logging (overrides other flags)")
@click.pass_context
def cli(ctx: click.Context, config: Path, quiet: bool, debug: bool) -> None:
    """treeprune - find CSS selectors that no page state can match."""
    level = logging.INFO
    if quiet:
        level = logging.WARNING
    if debug:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    _LOG.debug(f"CLI initialized (debug={debug}, quiet={quiet})")

    ctx.ensure_object(dict)
    ctx.obj["config"] = load_config(config) if config.exists() else {"analysis": {}}
    ctx.obj["debug"] = debug


@cli.command("check", context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("system_file", type=click.Path(path_type=Path))
@_analysis_flags
@click.option("--dump-simple", is_flag=True, help="Print the simplified rule system")
@click.option("--dump-spds", is_flag=True, help="Print the symbolic pushdown rules with BDD sizes")
@click.pass_context
def check_cmd(
    ctx: click.Context,
    system_file: Path,
    k: int | None,
    oracle: bool,
    witness: bool,
    fmt: str,
    lift_queries: bool | None,
    threads: int | None,
    timings: bool,
    dump_simple: bool,
    dump_spds: bool,
) -> None:
    """Decide redundancy of the queries of a rewrite-system file."""
    as_json = fmt == "json"
    options = _analysis_options(ctx, as_json, k, lift_queries, threads, oracle, timings)

    def run() -> None:
        system = load_system(system_file)
        _LOG.info(f"CLI: checking {system_file} ({len(system.rules)} rules, {len(system.queries)} queries)")
        analysis = analyze_system(system, options)
        report = system_report(system, analysis, [str(system_file)], witness=witness)
        dumps = _dumps(analysis, dump_simple, dump_spds)
        if as_json:
            click.echo(json.dumps({"ok": True, "report": report.to_dict(), **dumps}))
            return
        for text in dumps.values():
            click.echo(text, nl=False)
        render_report(console, report, show_witness=witness)

    _guarded(as_json, run)


def _dumps(analysis: Analysis, dump_simple: bool, dump_spds: bool) -> dict[str, str]:
    out: dict[str, str] = {}
    if dump_simple:
        out["simple"] = format_system(analysis.simple.to_rewrite_system())
    if dump_spds:
        out["spds"] = "\n".join(build_spds(analysis.simple).describe()) + "\n"
    return out


def _analyze_page(
    path: Path, css: tuple[Path, ...], options: AnalysisOptions, assume_html_variables: bool, witness: bool
) -> tuple[Page, RewriteSystem, Report]:
    start = time.perf_counter()
    page = build_page(path, css, assume_html_variables)
    system = page_system(page)
    frontend = {"frontend": time.perf_counter() - start} if options.timings else {}
    analysis = analyze_system(system, options)
    return page, system, page_report(page, system, analysis, witness=witness, timings=frontend)


@cli.command("analyze", context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("pages", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--css", multiple=True, type=click.Path(path_type=Path), help="Extra stylesheet (repeatable)")
@_analysis_flags
@click.option("--dump-system", is_flag=True, help="Print the extracted rewrite system of each page")
@click.option(
    "--assume-html-variables/--no-assume-html-variables",
    default=None,
    help="Model HTML built from variables as any subtree of known classes",
)
@click.pass_context
def analyze_cmd(
    ctx: click.Context,
    pages: tuple[Path, ...],
    css: tuple[Path, ...],
    k: int | None,
    oracle: bool,
    witness: bool,
    fmt: str,
    lift_queries: bool | None,
    threads: int | None,
    timings: bool,
    dump_system: bool,
    assume_html_variables: bool | None,
) -> None:
    """Find redundant selectors in HTML pages; several pages form one site."""
    as_json = fmt == "json"
    options = _analysis_options(ctx, as_json, k, lift_queries, threads, oracle, timings)
    if assume_html_variables is None:
        assume_html_variables = bool(ctx.obj["config"].get("analysis", {}).get("assume_html_variables", False))
    html_vars = assume_html_variables

    def run() -> None:
        _LOG.info(f"CLI: analyzing {len(pages)} page(s)")
        workers = resolve_threads(options.threads)
        if workers == 1 or len(pages) == 1:
            results = [_analyze_page(p, css, options, html_vars, witness) for p in pages]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda p: _analyze_page(p, css, options, html_vars, witness), pages))
        reports = [report for _, _, report in results]
        systems = {page.source: format_system(system) for page, system, _ in results} if dump_system else {}
        if len(reports) == 1:
            if as_json:
                payload: dict[str, Any] = {"ok": True, "report": reports[0].to_dict()}
                if dump_system:
                    payload["systems"] = systems
                click.echo(json.dumps(payload))
                return
            for text in systems.values():
                click.echo(text, nl=False)
            render_report(console, reports[0], show_witness=witness)
            return
        site = collate(reports)
        if as_json:
            payload = {"ok": True, "site_report": site.to_dict()}
            if dump_system:
                payload["systems"] = systems
            click.echo(json.dumps(payload))
            return
        for text in systems.values():
            click.echo(text, nl=False)
        render_site(console, site, show_witness=witness)

    _guarded(as_json, run)


def main() -> None:
    """CLI entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
