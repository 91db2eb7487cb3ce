"""Landmark CSV input and metrics / log CSV output (pandas)."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import pandas as pd

from meshvr.losses.geometric import LandmarkSet

LANDMARK_COLUMNS = ["view", "vertex", "u", "v"]
METRIC_COLUMNS = ["scope", "metric", "value"]


def write_csv_stable(path: Path, df: pd.DataFrame) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(p, index=False, lineterminator="\n", float_format="%.17g")


def records_to_frame(rows: Iterable[Mapping[str, Any]], columns: list[str] | None = None) -> pd.DataFrame:
    df = pd.DataFrame(list(rows))
    if columns is not None:
        for c in columns:
            if c not in df.columns:
                df[c] = np.nan
        df = df.loc[:, columns]
    return df


def read_landmarks(path: Path, *, n_vertices: int | None = None) -> LandmarkSet:
    """Rows (view, vertex, u, v[, contour]); contour rows (contour=1) are dropped."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"landmark file not found: {p}")
    df = pd.read_csv(p)
    missing = [c for c in LANDMARK_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{p}: missing landmark columns {missing}")
    if df[LANDMARK_COLUMNS].isna().any().any():
        bad = df.index[df[LANDMARK_COLUMNS].isna().any(axis=1)].tolist()
        raise ValueError(f"{p}: empty landmark fields in rows {bad[:10]}")
    if "contour" in df.columns:
        df = df.loc[df["contour"].fillna(0).astype(int) == 0]
    lm = LandmarkSet(
        view_ids=df["view"].to_numpy(dtype=np.int64),
        vertex_ids=df["vertex"].to_numpy(dtype=np.int64),
        pixels=df[["u", "v"]].to_numpy(dtype=np.float64),
    )
    if n_vertices is not None:
        lm.validate(n_vertices)
    return lm


def write_landmarks(path: Path, landmarks: LandmarkSet) -> None:
    df = pd.DataFrame(
        {
            "view": landmarks.view_ids,
            "vertex": landmarks.vertex_ids,
            "u": landmarks.pixels[:, 0],
            "v": landmarks.pixels[:, 1],
        }
    )
    write_csv_stable(path, df.loc[:, LANDMARK_COLUMNS])


def read_vertex_ids(path: Path) -> np.ndarray:
    """Region file for eval exclusion: a CSV with a `vertex` column."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"vertex list not found: {p}")
    df = pd.read_csv(p)
    if "vertex" not in df.columns:
        raise ValueError(f"{p}: missing column 'vertex'")
    if df["vertex"].isna().any():
        raise ValueError(f"{p}: empty vertex ids")
    return df["vertex"].to_numpy(dtype=np.int64)


def write_metrics(path: Path, rows: Iterable[Mapping[str, Any]]) -> None:
    write_csv_stable(path, records_to_frame(rows, METRIC_COLUMNS))


def write_per_vertex(path: Path, distances: np.ndarray, included: np.ndarray) -> None:
    df = pd.DataFrame(
        {
            "vertex": np.arange(distances.shape[0], dtype=np.int64),
            "distance": distances,
            "included": included.astype(np.int64),
        }
    )
    write_csv_stable(path, df)


__all__ = [
    "LANDMARK_COLUMNS",
    "METRIC_COLUMNS",
    "read_landmarks",
    "read_vertex_ids",
    "records_to_frame",
    "write_csv_stable",
    "write_landmarks",
    "write_metrics",
    "write_per_vertex",
]
