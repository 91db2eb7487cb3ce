"""View-count study: fit one ellipsoid scene from the 30, 12 and 6 most frontal views.

Writes `outputs/view_count.csv` (views, mean_distance, max_distance) and exits
non-zero when the error does not grow as views are removed, or when the
6-view error exceeds three times the 30-view error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import pandas as pd

from meshvr.bundle.tables import write_csv_stable
from meshvr.eval import eval_geometry
from meshvr.synth import SyntheticParams, ground_truth_surface, synth_scene
from meshvr.train import TrainConfig, fit

VIEW_COUNTS = (30, 12, 6)
MAX_FEWEST_OVER_MOST = 3.0


def _trend_failures(errors: list[float]) -> list[str]:
    """Errors are ordered like VIEW_COUNTS (most views first)."""
    failed = []
    if any(b < a for a, b in zip(errors, errors[1:])):
        failed.append("error decreased as views were removed")
    if errors[-1] > MAX_FEWEST_OVER_MOST * errors[0]:
        failed.append(f"{VIEW_COUNTS[-1]}-view error exceeds {MAX_FEWEST_OVER_MOST:g}x the {VIEW_COUNTS[0]}-view error")
    return failed


def main() -> None:
    here = Path(__file__).resolve().parent
    outputs = here / "outputs"
    outputs.mkdir(parents=True, exist_ok=True)

    params = SyntheticParams(shape="ellipsoid", n_views=max(VIEW_COUNTS), width=96, height=96, seed=1)
    scene = synth_scene(params, outputs / "scene")
    reference = ground_truth_surface(params)
    base = TrainConfig().with_overrides(**{"sampling.stride": 2, "seed": 1})

    rows = []
    for n in VIEW_COUNTS:
        result = fit(scene, base.with_overrides(views=n), outputs / f"run_{n:02d}")
        report = eval_geometry(result.mesh, reference)
        rows.append({"views": n, "mean_distance": report.mean_distance, "max_distance": report.max_distance})

    df = pd.DataFrame(rows)
    write_csv_stable(outputs / "view_count.csv", df)

    errors = df["mean_distance"].tolist()
    failed = _trend_failures(errors)
    if failed:
        sys.exit("; ".join(failed) + f": {errors}")


if __name__ == "__main__":
    main()
