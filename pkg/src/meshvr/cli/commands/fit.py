"""`meshvr fit` command.

Fit the scene template to its views and write the run directory
(config.json, checkpoints/, final_mesh.obj, model.mvr, log.jsonl, log.csv).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import typer


def register(app: typer.Typer) -> None:
    @app.command("fit")
    def fit(
        scene: str = typer.Option(..., "--scene", help="Scene directory or scene.json."),
        out: str = typer.Option(..., "--out", help="Run output directory."),
        config: Optional[str] = typer.Option(None, "--config", help="TrainConfig JSON; defaults otherwise."),
        seed: Optional[int] = typer.Option(None, "--seed", help="Override config seed."),
        views: Optional[int] = typer.Option(None, "--views", help="Use the N most frontal training views (0: all)."),
        stride: Optional[int] = typer.Option(None, "--stride", help="Override the pixel-grid stride."),
        stage: Optional[str] = typer.Option(None, "--stage", help="Last stage to run: 1a | 1b | 2 | 3."),
        workers: Optional[int] = typer.Option(None, "--workers", help="Render worker threads."),
        resume: Optional[str] = typer.Option(None, "--resume", help="Resume checkpoint (.mvr) written by a previous run."),
    ) -> None:
        """Fit the template mesh to the scene by mesh volume rendering."""
        from meshvr.bundle import load_scene
        from meshvr.core.errors import TrainingDivergedError
        from meshvr.train import TrainConfig, fit as run_fit, load_config

        overrides: dict[str, Any] = {}
        if seed is not None:
            overrides["seed"] = seed
        if views is not None:
            overrides["views"] = views
        if stride is not None:
            overrides["sampling.stride"] = stride
        if stage is not None:
            overrides["last_stage"] = stage
        if workers is not None:
            overrides["sampling.workers"] = workers

        try:
            cfg = load_config(Path(config)) if config else TrainConfig()
            cfg = cfg.with_overrides(**overrides) if overrides else cfg
            bundle = load_scene(Path(scene))
        except (FileNotFoundError, ValueError) as e:
            raise typer.BadParameter(str(e)) from e

        try:
            result = run_fit(bundle, cfg, Path(out), resume_from=Path(resume) if resume else None)
        except (TrainingDivergedError, ValueError) as e:
            typer.echo(f"fit failed: {e}", err=True)
            raise typer.Exit(code=1) from e

        last = result.log.last()
        total = "n/a" if last is None else f"{last['total']:.6g}"
        typer.echo(f"{out}: {len(result.log)} iterations, final loss {total}, rollbacks {result.rollbacks}")
