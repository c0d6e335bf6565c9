"""Command-line entry points: corpus tools, ticket queries, evaluation, serving."""

from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path

import click

from .catalog import CorpusError, corpus_stats, load_corpus
from .config import load_app_config
from .dates import resolve_date_expression, resolve_time_window
from .evaluation import load_scenarios, render_report, run_suite
from .runtime import AgentRuntime, system_clock
from .ticketing import TicketQuery, load_timetable, query_tickets


@click.group()
def main() -> None:
    """Railway consulting agent utilities."""


@main.group()
def corpus() -> None:
    """Dish catalog inspection and validation."""


@corpus.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def corpus_validate(path: str) -> None:
    """Validate a catalog file; non-zero exit on any violation."""
    try:
        loaded = load_corpus(path)
    except CorpusError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(1)
    click.echo(f"OK: {len(loaded)} items, {len(loaded.legend.cuisine)} cuisines")


@corpus.command("stats")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def corpus_stats_cmd(path: str) -> None:
    """Print per-city and per-cuisine item counts."""
    loaded = load_corpus(path)
    stats = corpus_stats(loaded)
    click.echo("By city:")
    for city, count in stats["by_city"].items():
        click.echo(f"  {city}: {count}")
    click.echo("By cuisine:")
    for cuisine, count in stats["by_cuisine"].items():
        click.echo(f"  {cuisine}: {count}")


@main.group()
def tickets() -> None:
    """Timetable queries."""


@tickets.command("query")
@click.option("--from", "from_name", required=True, help="departure station or city")
@click.option("--to", "to_name", required=True, help="arrival station or city")
@click.option("--date", "date_expr", required=True, help="travel date (ISO or relative)")
@click.option("--window", default=None, help="departure window (morning/afternoon/evening or HH:MM-HH:MM)")
@click.option("--timetable", "timetable_path", type=click.Path(exists=True), default=None)
@click.option("--clock", "clock_iso", default=None, help="pretend the current date-time is this ISO value")
@click.option("--error-info/--no-error-info", default=True)
def tickets_query(
    from_name: str,
    to_name: str,
    date_expr: str,
    window: str | None,
    timetable_path: str | None,
    clock_iso: str | None,
    error_info: bool,
) -> None:
    """Search services between two stations for a date."""
    from .config import DataSettings

    store = load_timetable(timetable_path or DataSettings().resolved_timetable())
    now = datetime.fromisoformat(clock_iso) if clock_iso else system_clock()
    travel_date = resolve_date_expression(date_expr, now.date())
    parsed_window = resolve_time_window(window) if window else None
    query = TicketQuery(from_name=from_name, to_name=to_name, date=travel_date, window=parsed_window)
    result = query_tickets(query, store, error_info=error_info)
    click.echo(f"[{result.kind}] {result.text}")
    sys.exit(0 if not result.is_error else 2)


@main.group()
def eval() -> None:  # noqa: A001 - CLI surface name
    """Batch evaluation."""


@eval.command("run")
@click.option("--scenarios", "scenarios_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backend", type=click.Choice(["scripted"]), default="scripted", show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--k", "ks_text", default="1,5,10", show_default=True, help="comma-separated k values")
@click.option("--workers", default=1, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def eval_run(
    scenarios_dir: str,
    backend: str,
    report_path: str | None,
    ks_text: str,
    workers: int,
    config_path: str | None,
) -> None:
    """Run a scenario pack and emit the metric report."""
    del backend  # scripted is the only desk-scale backend
    ks = tuple(int(k.strip()) for k in ks_text.split(",") if k.strip())
    config = load_app_config(config_path)
    scenarios = load_scenarios(scenarios_dir)
    report = run_suite(scenarios, config=config, ks=ks, workers=workers)
    click.echo(render_report(report))
    if report_path:
        Path(report_path).write_text(report.to_json(), encoding="utf-8")
        click.echo(f"report written to {report_path}")


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--backend", type=click.Choice(["scripted", "live"]), default="live", show_default=True)
@click.option("--scenario-script", "script_path", type=click.Path(exists=True), default=None,
              help="script fixture for the scripted backend")
@click.option("--sessions-dir", type=click.Path(file_okay=False), default=None,
              help="enable the persistent session store under this directory")
@click.option("--trace-log", "trace_log", type=click.Path(dir_okay=False), default=None,
              help="append every finished round to this line-delimited trace log")
def serve(
    port: int,
    host: str,
    config_path: str | None,
    backend: str,
    script_path: str | None,
    sessions_dir: str | None,
    trace_log: str | None,
) -> None:
    """Start the HTTP session API."""
    import uvicorn

    from .service import create_app
    from .sessions import FileSessionStore, InMemorySessionStore

    config = load_app_config(config_path)
    if backend == "scripted" and not script_path:
        raise click.UsageError("--backend scripted requires --scenario-script")
    runtime = AgentRuntime.build(
        config,
        clock=system_clock,
        script_path=script_path if backend == "scripted" else None,
    )
    if sessions_dir:
        store = FileSessionStore(sessions_dir, clock=system_clock)
    else:
        store = InMemorySessionStore(clock=system_clock)
    uvicorn.run(create_app(runtime, store, trace_log=trace_log), host=host, port=port)


if __name__ == "__main__":
    main()
