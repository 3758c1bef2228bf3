"""``bench`` command line entry point.

    bench run --config scenario.json --out results/ [--seed N] [--jobs N]
    bench report --in results/ --format csv|md
"""

import json
import logging
import os
import sys

import click

from .config import ConfigError, generate_instances, load_config
from .report import emit_report, markdown_summary, read_report_csv
from .suite import run_suite

RUNS_CSV = "runs.csv"


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def main(verbose):
    """Benchmark sweeps for the adaptive inexact proximal gradient solvers."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
              help="JSON scenario file.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory.")
@click.option("--seed", type=int, default=None, help="Override base_seed.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker processes (instance-level parallelism).")
def run_cmd(config_path, out_dir, seed, jobs):
    """Run a scenario and write runs.csv, aggregates.csv and summary.md."""
    try:
        config = load_config(config_path)
        if seed is not None:
            config.base_seed = seed
        instances = generate_instances(config)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)
    if config.problem_kind == "beamforming":
        with open(os.path.join(out_dir, "instances.jsonl"), "w") as fh:
            for inst in instances:
                fh.write(inst.to_json() + "\n")
    else:
        with open(os.path.join(out_dir, "instances.jsonl"), "w") as fh:
            for prob in instances:
                fh.write(prob.to_json() + "\n")
    report = run_suite(config, jobs=jobs, instances=instances)
    emit_report(report, os.path.join(out_dir, RUNS_CSV), "csv")
    emit_report(report, os.path.join(out_dir, "aggregates.csv"), "aggregates")
    emit_report(report, os.path.join(out_dir, "summary.md"), "markdown")
    click.echo(markdown_summary(report))


@main.command("report")
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory written by 'bench run'.")
@click.option("--format", "fmt", type=click.Choice(["csv", "md"]), default="md",
              show_default=True)
def report_cmd(in_dir, fmt):
    """Summarize runs.csv as per-algorithm means (csv) or markdown (md)."""
    path = os.path.join(in_dir, RUNS_CSV)
    if not os.path.exists(path):
        click.echo(f"no {RUNS_CSV} in {in_dir}", err=True)
        sys.exit(2)
    report = read_report_csv(path)
    if fmt == "csv":
        out = emit_report(report, os.path.join(in_dir, "aggregates.csv"), "aggregates")
        with open(out) as fh:
            click.echo(fh.read(), nl=False)
    else:
        emit_report(report, os.path.join(in_dir, "summary.md"), "markdown")
        click.echo(markdown_summary(report))


if __name__ == "__main__":
    main()
