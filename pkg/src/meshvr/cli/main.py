"""meshvr CLI entrypoint."""

from __future__ import annotations

import logging

import typer

app = typer.Typer(
    name="meshvr",
    add_completion=False,
    no_args_is_help=True,
    help="Topology-preserving mesh fitting by mesh volume rendering.",
)


@app.callback()
def _callback(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="-v for progress, -vv for debug output."),
) -> None:
    """meshvr CLI."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@app.command("version")
def version() -> None:
    """Print the installed meshvr version."""
    from meshvr import __version__

    typer.echo(__version__)


def _register_commands() -> None:
    """Register CLI subcommands.

    Command modules defer their heavy imports so `meshvr --help` stays fast.
    """
    from meshvr.cli.commands import eval_cmd
    from meshvr.cli.commands import fit as fit_cmd
    from meshvr.cli.commands import gradcheck as gradcheck_cmd
    from meshvr.cli.commands import render as render_cmd
    from meshvr.cli.commands import synth as synth_cmd

    synth_cmd.register(app)
    fit_cmd.register(app)
    render_cmd.register(app)
    eval_cmd.register(app)
    gradcheck_cmd.register(app)


_register_commands()
