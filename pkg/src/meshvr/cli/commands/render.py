"""`meshvr render` command.

Render a fitted model checkpoint from scene cameras. Each view writes
render_view_XXX.ppm (exact), render_view_XXX.png (inspection) and
opacity_view_XXX.pgm.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer


def register(app: typer.Typer) -> None:
    @app.command("render")
    def render(
        model: str = typer.Option(..., "--model", help="Model checkpoint (model.mvr from a fit run)."),
        scene: str = typer.Option(..., "--scene", help="Scene whose cameras are rendered."),
        out: str = typer.Option(..., "--out", help="Output image directory."),
        view: Optional[list[int]] = typer.Option(
            None, "--view", help="View id to render (repeatable). Default: held-out views, else all."
        ),
        samples: int = typer.Option(32, "--samples", help="Samples per ray."),
        workers: int = typer.Option(1, "--workers", help="Render worker threads."),
    ) -> None:
        """Render images and opacity maps from a model checkpoint."""
        from meshvr.bundle import load_scene
        from meshvr.bundle.image_io import write_image
        from meshvr.render import RenderSettings, render_image
        from meshvr.train import load_model

        try:
            fitted = load_model(Path(model))
            bundle = load_scene(Path(scene))
            if view:
                targets = [bundle.view(v) for v in view]
            else:
                targets = bundle.holdout_views() or list(bundle.views)
            settings = RenderSettings(n_samples=samples, jitter=False, workers=workers)
        except (FileNotFoundError, KeyError, ValueError) as e:
            raise typer.BadParameter(str(e)) from e

        out_dir = Path(out)
        for v in targets:
            rgb, opacity = render_image(fitted, v.camera, settings)
            stem = f"view_{v.view_id:03d}"
            write_image(out_dir / f"render_{stem}.ppm", rgb)
            write_image(out_dir / f"render_{stem}.png", rgb)
            write_image(out_dir / f"opacity_{stem}.pgm", opacity)
            typer.echo(str(out_dir / f"render_{stem}.ppm"))
