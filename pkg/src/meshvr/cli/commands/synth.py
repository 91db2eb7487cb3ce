"""`meshvr synth` command.

Render a synthetic fixture scene (analytic surface + procedural texture) into a
scene bundle directory.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer


def _parse_ids(text: Optional[str]) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as e:
        raise typer.BadParameter(f"expected comma-separated view ids, got {text!r}") from e


def register(app: typer.Typer) -> None:
    @app.command("synth")
    def synth(
        out: str = typer.Option(..., "--out", help="Output scene directory."),
        shape: str = typer.Option("ellipsoid", "--shape", help="Ground truth: sphere | ellipsoid | blob."),
        views: int = typer.Option(12, "--views", help="Number of cameras on the ring."),
        width: int = typer.Option(128, "--width", help="Image width in pixels."),
        height: int = typer.Option(128, "--height", help="Image height in pixels."),
        subdivisions: int = typer.Option(3, "--subdivisions", help="Template icosphere subdivisions (3: 642 vertices)."),
        texture: str = typer.Option("waves", "--texture", help="Procedural texture: waves | constant."),
        landmarks: int = typer.Option(40, "--landmarks", help="Number of ground-truth landmark points."),
        holdout: Optional[str] = typer.Option(None, "--holdout", help="Comma-separated held-out view ids."),
        seed: int = typer.Option(0, "--seed", help="Seed for texture phases and landmark choice."),
        name: str = typer.Option("synthetic", "--name", help="Scene name written to the manifest."),
    ) -> None:
        """Write a synthetic scene bundle rendered by the analytic oracle."""
        from meshvr.synth import SyntheticParams, synth_scene

        if texture not in ("waves", "constant"):
            raise typer.BadParameter("texture must be 'waves' or 'constant'")
        try:
            params = SyntheticParams(
                name=name,
                shape=shape,
                subdivisions=subdivisions,
                n_views=views,
                width=width,
                height=height,
                texture=texture,
                n_landmarks=landmarks,
                holdout=_parse_ids(holdout),
                seed=seed,
            )
            scene = synth_scene(params, Path(out))
        except ValueError as e:
            raise typer.BadParameter(str(e)) from e

        typer.echo(f"{out}: {scene.n_views} views, template {scene.template.n_vertices} vertices")
