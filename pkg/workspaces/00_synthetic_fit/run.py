"""Synthetic fit workspace: synth -> fit -> render held-out view -> evaluate.

Self-contained: writes an ellipsoid scene under `outputs/scene/`, fits the
icosphere template, renders the held-out view from the stage-2 model and
writes `outputs/fit_report.json` with geometry error per stage and PSNR/SSIM.
Exits non-zero with the report when an acceptance threshold is missed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from meshvr.eval import eval_geometry, eval_render
from meshvr.render import RenderSettings, render_image
from meshvr.synth import SyntheticParams, ground_truth_surface, synth_scene
from meshvr.train import TrainConfig, fit, load_resume

HOLDOUT = 11

MAX_FINAL_OVER_DIAGONAL = 0.01
MIN_STAGE3_GAIN = 5.0
MIN_PSNR = 28.0
MIN_SSIM = 0.90


def _write_json(path: Path, obj: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _failures(report: dict[str, Any]) -> list[str]:
    checks = {
        "template connectivity changed": report["faces_unchanged"],
        f"final error above {MAX_FINAL_OVER_DIAGONAL:.0%} of the diagonal":
            report["final_over_diagonal"] <= MAX_FINAL_OVER_DIAGONAL,
        f"stage 3 gained less than {MIN_STAGE3_GAIN:g}x over stage 1": report["stage3_gain"] >= MIN_STAGE3_GAIN,
        f"held-out PSNR below {MIN_PSNR:g} dB": report["holdout_psnr"] >= MIN_PSNR,
        f"held-out SSIM below {MIN_SSIM:g}": report["holdout_ssim"] >= MIN_SSIM,
    }
    return [name for name, ok in checks.items() if not ok]


def main() -> None:
    here = Path(__file__).resolve().parent
    outputs = here / "outputs"
    outputs.mkdir(parents=True, exist_ok=True)

    params = SyntheticParams(shape="ellipsoid", n_views=12, width=128, height=128, holdout=(HOLDOUT,), seed=0)
    scene = synth_scene(params, outputs / "scene")
    reference = ground_truth_surface(params)

    config = TrainConfig().with_overrides(**{"sampling.stride": 2, "seed": 0})
    run_dir = outputs / "run"
    result = fit(scene, config, run_dir)

    errors = {"template": eval_geometry(scene.template, reference).mean_distance}
    for stage, mesh in sorted(result.snapshots.items()):
        errors[f"stage_{stage}"] = eval_geometry(mesh, reference).mean_distance

    # last checkpoint of stage 2: appearance fitted, geometry still from stage 1
    stage2_model, _ = load_resume(run_dir / "checkpoints" / f"ckpt_2_{config.stages.count('2'):05d}.mvr")
    view = scene.view(HOLDOUT)
    rgb, _ = render_image(stage2_model, view.camera, RenderSettings(n_samples=config.sampling.n_samples))
    quality = eval_render(rgb, view.image, view.mask)

    diagonal = 2.0 * float(np.linalg.norm(params.axes))  # ground-truth bounding box
    final = errors["stage_3"]
    report = {
        "mean_distance": errors,
        "final_over_diagonal": final / diagonal,
        "stage3_gain": errors["stage_1b"] / final if final > 0.0 else float("inf"),
        "holdout_psnr": quality.psnr,
        "holdout_ssim": quality.ssim,
        "rollbacks": result.rollbacks,
        "faces_unchanged": result.mesh.faces_bytes() == scene.template.faces_bytes(),
    }
    failed = _failures(report)
    report["failed"] = failed
    _write_json(outputs / "fit_report.json", report)

    if failed:
        details = json.dumps(report, indent=2, sort_keys=True)
        raise SystemExit("acceptance failed: " + "; ".join(failed) + "\n" + details)


if __name__ == "__main__":
    main()
