"""Central finite-difference checks of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from meshvr.optim.params import GradStore, ParamStore

LossFn = Callable[[ParamStore], float]


@dataclass(frozen=True)
class GroupCheck:
    group: str
    n_checked: int
    max_rel_err: float
    worst_index: int
    analytic: float
    numeric: float


@dataclass(frozen=True)
class FdReport:
    eps: float
    groups: dict[str, GroupCheck]

    def max_rel_err(self) -> float:
        return max((g.max_rel_err for g in self.groups.values()), default=0.0)

    def passed(self, thresholds: Mapping[str, float], default: float = 1e-3) -> bool:
        return all(g.max_rel_err < thresholds.get(name, default) for name, g in self.groups.items())

    def rows(self) -> list[dict[str, object]]:
        return [
            {
                "group": g.group,
                "n_checked": g.n_checked,
                "max_rel_err": g.max_rel_err,
                "worst_index": g.worst_index,
                "analytic": g.analytic,
                "numeric": g.numeric,
            }
            for g in self.groups.values()
        ]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def pick_indices(params: ParamStore, per_group: int, rng: np.random.Generator, names: Optional[list[str]] = None) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for name in names or params.names():
        size = params[name].size
        k = min(per_group, size)
        out[name] = np.sort(rng.choice(size, size=k, replace=False))
    return out


def fd_check(
    loss_fn: LossFn,
    params: ParamStore,
    grads: GradStore,
    subset: Mapping[str, np.ndarray],
    eps: float = 1e-5,
    *,
    floor: float = 1e-6,
) -> FdReport:
    """Compare analytic `grads` with (L(x+eps) - L(x-eps)) / 2eps on flat indices per group."""
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    report: dict[str, GroupCheck] = {}
    for name, indices in subset.items():
        flat_idx = np.asarray(indices, dtype=np.int64)
        numeric = np.empty(flat_idx.size)
        for k, i in enumerate(flat_idx):
            probe = params.copy()
            base = probe[name].reshape(-1).copy()
            base[i] += eps
            probe.groups[name] = base.reshape(probe[name].shape)
            up = loss_fn(probe)
            base[i] -= 2.0 * eps
            probe.groups[name] = base.reshape(probe[name].shape)
            down = loss_fn(probe)
            numeric[k] = (up - down) / (2.0 * eps)
        analytic = grads[name].reshape(-1)[flat_idx]
        err = relative_error(analytic, numeric, floor)
        w = int(np.argmax(err)) if err.size else 0
        report[name] = GroupCheck(
            group=name,
            n_checked=int(flat_idx.size),
            max_rel_err=float(err.max()) if err.size else 0.0,
            worst_index=int(flat_idx[w]) if err.size else -1,
            analytic=float(analytic[w]) if err.size else 0.0,
            numeric=float(numeric[w]) if err.size else 0.0,
        )
    return FdReport(eps=eps, groups=report)


__all__ = ["FdReport", "GroupCheck", "fd_check", "pick_indices", "relative_error"]
