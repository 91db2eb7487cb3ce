"""meshvr CLI subcommands.

Each module exposes `register(app: typer.Typer) -> None`.
"""
