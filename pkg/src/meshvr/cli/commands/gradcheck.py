"""`meshvr gradcheck` command.

Central finite differences against the analytic full-pipeline gradient on the
built-in micro-scene; exits 1 when any group exceeds its tolerance.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer


def register(app: typer.Typer) -> None:
    @app.command("gradcheck")
    def gradcheck(
        seed: int = typer.Option(7, "--seed", help="Micro-scene seed."),
        eps: float = typer.Option(1e-5, "--eps", help="Central-difference step."),
        per_group: int = typer.Option(4, "--per-group", help="Entries checked per parameter group."),
        out: Optional[str] = typer.Option(None, "--out", help="Also write the report as CSV."),
    ) -> None:
        """Check analytic gradients against finite differences."""
        from meshvr.bundle.tables import records_to_frame, write_csv_stable
        from meshvr.train.gradcheck import pipeline_gradcheck, report_passed

        if not 1e-6 <= eps <= 1e-3:
            raise typer.BadParameter(f"eps must lie in [1e-6, 1e-3], got {eps}")
        if per_group < 1:
            raise typer.BadParameter("per-group must be >= 1")
        report = pipeline_gradcheck(seed, eps=eps, per_group=per_group)
        rows = report.rows()
        for r in rows:
            typer.echo("\t".join(f"{k}={v}" for k, v in r.items()))
        if out:
            write_csv_stable(Path(out), records_to_frame(rows))
        if not report_passed(report):
            typer.echo(f"gradcheck FAILED: max relative error {report.max_rel_err():.3g}", err=True)
            raise typer.Exit(code=1)
        typer.echo(f"OK (max relative error {report.max_rel_err():.3g})")
