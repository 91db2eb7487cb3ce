"""`meshvr eval` command.

Geometry error (mean nearest distance per vertex, mesh -> reference) and
rendering quality (masked PSNR / SSIM of rendered views) written as a metrics
CSV with columns scope, metric, value.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import typer


def register(app: typer.Typer) -> None:
    @app.command("eval")
    def eval_(
        out: str = typer.Option(..., "--out", help="Metrics CSV path."),
        geometry: Optional[str] = typer.Option(None, "--geometry", help="Fitted mesh (.obj) to score."),
        reference: Optional[str] = typer.Option(
            None, "--reference", help="Reference scan (.obj) or synthetic scene carrying its ground-truth surface."
        ),
        exclude: Optional[str] = typer.Option(None, "--exclude", help="CSV with a `vertex` column of excluded ids."),
        per_vertex: Optional[str] = typer.Option(None, "--per-vertex", help="Write per-vertex distances here (CSV)."),
        renders: Optional[str] = typer.Option(None, "--renders", help="Directory of render_view_XXX images."),
        scene: Optional[str] = typer.Option(None, "--scene", help="Scene providing reference images and masks."),
    ) -> None:
        """Score a fitted mesh and/or rendered views."""
        from meshvr.bundle import load_scene, read_obj
        from meshvr.bundle.image_io import read_image
        from meshvr.bundle.tables import read_vertex_ids, write_metrics, write_per_vertex
        from meshvr.eval import eval_geometry, eval_render, load_reference

        if geometry is None and renders is None:
            raise typer.BadParameter("nothing to evaluate: pass --geometry and/or --renders")
        rows: list[dict[str, Any]] = []

        if geometry is not None:
            if reference is None:
                raise typer.BadParameter("--geometry needs --reference")
            try:
                mesh = read_obj(Path(geometry))
                ref = load_reference(Path(reference))
                ex = read_vertex_ids(Path(exclude)) if exclude else None
                report = eval_geometry(mesh, ref, exclude=ex)
            except (FileNotFoundError, ValueError) as e:
                raise typer.BadParameter(str(e)) from e
            rows.append({"scope": "mesh", "metric": "mean_distance", "value": report.mean_distance})
            rows.append({"scope": "mesh", "metric": "max_distance", "value": report.max_distance})
            rows.append({"scope": "mesh", "metric": "n_vertices", "value": float(report.n_included)})
            if per_vertex:
                write_per_vertex(Path(per_vertex), report.distances, report.included)

        if renders is not None:
            if scene is None:
                raise typer.BadParameter("--renders needs --scene")
            try:
                bundle = load_scene(Path(scene))
            except (FileNotFoundError, ValueError) as e:
                raise typer.BadParameter(str(e)) from e
            found = 0
            for v in bundle.views:
                path = Path(renders) / f"render_view_{v.view_id:03d}.ppm"
                if not path.is_file():
                    continue
                try:
                    res = eval_render(read_image(path), v.image, v.mask)
                except ValueError as e:
                    typer.echo(f"view {v.view_id}: {e}", err=True)
                    raise typer.Exit(code=1) from e
                scope = f"view_{v.view_id:03d}"
                rows.append({"scope": scope, "metric": "psnr", "value": res.psnr})
                rows.append({"scope": scope, "metric": "ssim", "value": res.ssim})
                found += 1
            if found == 0:
                raise typer.BadParameter(f"no render_view_XXX.ppm for any scene view in {renders}")

        write_metrics(Path(out), rows)
        for r in rows:
            typer.echo(f"{r['scope']}\t{r['metric']}\t{r['value']:.6g}")
