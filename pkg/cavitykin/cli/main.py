"""Command-line entry point.

Exit codes: 0 success, 1 input or configuration error (usage errors
included), 2 numerical non-convergence with artifacts written.
"""

import sys
from pathlib import Path

import click

from cavitykin.cli import commands
from cavitykin.cli.commands import GlobalOptions
from cavitykin.cli.dependencies import get_settings
from cavitykin.logging_config import configure_logging

EXIT_OK = 0
EXIT_INPUT_ERROR = 1


class CavityKinGroup(click.Group):
    """Click group that reports usage errors with exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            rv = EXIT_INPUT_ERROR
        except click.Abort:
            click.echo("Aborted!", err=True)
            rv = EXIT_INPUT_ERROR
        if not standalone_mode:
            return rv
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


@click.group(cls=CavityKinGroup)
@click.option("--seed", type=int, default=None, help="Random seed (default: CAVITYKIN_SEED or 0).")
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
    help="Directory for outputs written without an explicit path.",
)
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "csv"]),
    default="csv",
    show_default=True,
    help="Format of surface files written without an explicit path.",
)
@click.option("--log-level", default=None, help="Diagnostic verbosity (default: CAVITYKIN_LOG).")
@click.pass_context
def cli(ctx: click.Context, seed: int | None, output_dir: Path, fmt: str, log_level: str | None):
    """Predict, plan and evaluate one-shot laser ablation cavities."""
    settings = get_settings()
    configure_logging(log_level or settings.LOG)
    ctx.obj = GlobalOptions(
        seed=settings.SEED if seed is None else seed, output_dir=output_dir, fmt=fmt
    )


for command in (
    commands.fit,
    commands.predict,
    commands.plan,
    commands.evaluate,
    commands.simulate,
    commands.generate,
):
    cli.add_command(command)


if __name__ == "__main__":
    cli()
