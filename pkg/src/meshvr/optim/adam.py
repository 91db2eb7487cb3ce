"""Adam with per-group learning rates and bias correction."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from meshvr.core.errors import ShapeMismatchError
from meshvr.optim.params import GradStore, ParamStore, group_family

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: dict[str, int] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            self.beta1,
            self.beta2,
            self.eps,
            {k: x.copy() for k, x in self.m.items()},
            {k: x.copy() for k, x in self.v.items()},
            dict(self.step),
        )


@dataclass(frozen=True)
class AdamReport:
    updated: tuple[str, ...]
    rejected: tuple[str, ...]


def lr_for(name: str, lrs: Mapping[str, float]) -> float:
    """Exact group name wins over its family ('planes.xy' -> 'planes')."""
    if name in lrs:
        return float(lrs[name])
    fam = group_family(name)
    if fam in lrs:
        return float(lrs[fam])
    raise KeyError(f"no learning rate for parameter group {name!r}")


def adam_step(params: ParamStore, grads: GradStore, lrs: Mapping[str, float], state: AdamState) -> AdamReport:
    """Update every learnable group in place; groups with non-finite gradients are skipped."""
    updated: list[str] = []
    rejected: list[str] = []
    for name in params.learnable_names():
        g = grads[name]
        p = params.groups[name]
        if g.shape != p.shape:
            raise ShapeMismatchError(f"adam: gradient for {name!r} has shape {g.shape}, expected {p.shape}")
        if not np.isfinite(g).all():
            logger.warning("adam: non-finite gradient in group %r, step rejected", name)
            rejected.append(name)
            continue
        lr = lr_for(name, lrs)
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
            state.step[name] = 0
        t = state.step[name] + 1
        state.step[name] = t
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / (1.0 - state.beta1 ** t)
        v_hat = state.v[name] / (1.0 - state.beta2 ** t)
        params.groups[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        updated.append(name)
    params.project()
    return AdamReport(tuple(updated), tuple(rejected))


__all__ = ["AdamReport", "AdamState", "adam_step", "lr_for"]
