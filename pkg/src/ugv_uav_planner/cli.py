"""Main CLI entry point for ugv-uav-planner."""
import logging
import sys
from typing import Optional

import click

from . import __version__
from .commands import batch, gen, grid, run as run_command, summarize
from .manager import ExperimentManager


@click.group()
@click.version_option(version=__version__)
@click.option('--verbose/--no-verbose', default=False, help='Enable verbose output')
@click.option('--criticality-cache', type=click.Path(file_okay=False),
              help='Directory caching Kemeny criticality tables')
@click.pass_context
def main(ctx: click.Context, verbose: bool, criticality_cache: Optional[str]):
    """Cooperative UGV-UAV path planning simulator."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.ensure_object(dict)
    ctx.obj['VERBOSE'] = verbose
    ctx.obj['MANAGER'] = ExperimentManager(verbose=verbose, criticality_cache=criticality_cache)


main.add_command(grid)
main.add_command(gen)
main.add_command(run_command)
main.add_command(batch)
main.add_command(summarize)


def run():
    """Run the main CLI."""
    try:
        main(obj={})
    except KeyboardInterrupt:
        click.echo("\nOperation interrupted by user.", err=True)
        sys.exit(1)
    except Exception as e:
        click.echo(f"Error: {str(e)}", err=True)
        sys.exit(1)


if __name__ == '__main__':
    run()
