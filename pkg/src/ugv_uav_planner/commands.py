"""Command handlers for the ugv-uav-planner CLI."""
import json
from typing import Any, Dict, Optional, Tuple

import click

from .config import (
    DEFAULT_RATIOS,
    DEFAULT_STRATEGIES,
    DEFAULT_UAV_SPEED,
    DEFAULT_UGV_SPEED,
    STRATEGY_NAMES,
)
from .manager import EXIT_CODES, ExperimentManager


def output_result(result: Dict[str, Any]) -> None:
    """Output the result in JSON format."""
    print(json.dumps(result))


def _execute_manager_command(ctx: click.Context, method_name: str, **kwargs) -> None:
    """Execute a manager method, print its result and exit with its code."""
    manager: ExperimentManager = ctx.obj['MANAGER']
    method = getattr(manager, method_name)
    result = method(**kwargs)
    output_result(result)
    if result.get("status") == "error":
        ctx.exit(EXIT_CODES.get(result.get("code", ""), 1))


def _split(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


@click.command()
@click.option('--rows', type=int, required=True, help='Grid rows')
@click.option('--cols', type=int, required=True, help='Grid columns')
@click.option('--spacing', type=float, default=1.0, show_default=True, help='Edge length in meters')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Graph document to write')
@click.pass_context
def grid(ctx: click.Context, rows: int, cols: int, spacing: float, out: str) -> None:
    """Write a synthetic grid road network."""
    _execute_manager_command(ctx, 'write_grid', rows=rows, cols=cols, spacing=spacing, out=out)


@click.command()
@click.option('--graph', required=True, type=click.Path(dir_okay=False), help='Graph document')
@click.option('--seeds', default='', help="Seed range such as 0..49 or 0,1,5")
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.pass_context
def gen(ctx: click.Context, graph: str, seeds: str, out_dir: str) -> None:
    """Generate one instance file per seed."""
    _execute_manager_command(ctx, 'generate_instances', graph=graph, seeds=seeds, out_dir=out_dir)


@click.command()
@click.option('--graph', required=True, type=click.Path(dir_okay=False), help='Graph document')
@click.option('--instance', type=click.Path(dir_okay=False), help='Instance document')
@click.option('--seed', type=int, help='Generate the instance from this seed (default 0)')
@click.option('--strategy', type=click.Choice(STRATEGY_NAMES), required=True, help='Planning strategy')
@click.option('--uavs', type=int, default=1, show_default=True, help='UAV count for multi-bidirectional')
@click.option('--ugv-speed', type=float, default=DEFAULT_UGV_SPEED, show_default=True, help='UGV speed in m/s')
@click.option('--uav-speed', type=float, default=DEFAULT_UAV_SPEED, show_default=True, help='UAV speed in m/s')
@click.option('--k', type=int, default=5, show_default=True, help='Paths for k-shortest')
@click.option('--m', type=int, default=20, show_default=True, help='Sampled worlds for MPSP candidates')
@click.option('--mc-runs', type=int, default=1000, show_default=True, help='Monte Carlo runs per MPSP estimate')
@click.option('--events-out', type=click.Path(dir_okay=False), help='Write the event log as JSON lines')
@click.pass_context
def run(
    ctx: click.Context,
    graph: str,
    instance: Optional[str],
    seed: Optional[int],
    strategy: str,
    uavs: int,
    ugv_speed: float,
    uav_speed: float,
    k: int,
    m: int,
    mc_runs: int,
    events_out: Optional[str],
) -> None:
    """Run one strategy on one instance."""
    _execute_manager_command(
        ctx,
        'run_simulation',
        graph=graph,
        instance=instance,
        seed=seed,
        strategy=strategy,
        uavs=uavs,
        k=k,
        m=m,
        mc_runs=mc_runs,
        ugv_speed=ugv_speed,
        uav_speed=uav_speed,
        events_out=events_out,
    )


@click.command()
@click.option('--graph', 'graphs', multiple=True, required=True, type=click.Path(dir_okay=False),
              help='Graph document (repeatable)')
@click.option('--seeds', default='', help='Seed range such as 0..49')
@click.option('--instance', 'instance_dir', type=click.Path(file_okay=False),
              help='Directory of instance documents')
@click.option('--strategies', default=','.join(DEFAULT_STRATEGIES), show_default=True,
              help='Comma-separated strategies; name:N sets the UAV count or k')
@click.option('--ratios', default=','.join(f"{g:g}:{a:g}" for g, a in DEFAULT_RATIOS), show_default=True,
              help='Comma-separated UGV:UAV speed ratios')
@click.option('--k', type=int, default=5, show_default=True)
@click.option('--m', type=int, default=20, show_default=True)
@click.option('--mc-runs', type=int, default=1000, show_default=True)
@click.option('--jobs', type=int, default=1, show_default=True, help='Worker processes')
@click.option('--out', type=click.Path(dir_okay=False), help='Results file')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default='csv', show_default=True)
@click.pass_context
def batch(
    ctx: click.Context,
    graphs: Tuple[str, ...],
    seeds: str,
    instance_dir: Optional[str],
    strategies: str,
    ratios: str,
    k: int,
    m: int,
    mc_runs: int,
    jobs: int,
    out: Optional[str],
    fmt: str,
) -> None:
    """Run every graph x instance x strategy x speed ratio combination."""
    _execute_manager_command(
        ctx,
        'run_batch',
        graphs=graphs,
        strategies=_split(strategies),
        ratios=_split(ratios),
        seeds=seeds,
        instance_dir=instance_dir,
        jobs=jobs,
        out=out,
        fmt=fmt,
        k=k,
        m=m,
        mc_runs=mc_runs,
    )


@click.command()
@click.argument('results', type=click.Path(dir_okay=False))
@click.pass_context
def summarize(ctx: click.Context, results: str) -> None:
    """Mean travel and computation times from a results file."""
    _execute_manager_command(ctx, 'summarize', results=results)
