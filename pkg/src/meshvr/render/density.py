"""Distance -> opacity conversion between consecutive ray samples.

Signed mode (default): logistic CDF Phi_s(x) = sigmoid(s x) and
alpha_k = max(1 - Phi_s(d_{k+1}) / Phi_s(d_k), 0), evaluated through
log-sigmoids so |s x| in the hundreds stays finite.

Unsigned mode: rational CDF Psi(u) = s u / (1 + s u) on unsigned distances,
alpha_k = |Psi(u_k) - Psi(u_{k+1})| / (max(Psi_k, Psi_{k+1}) + 1e-10).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal, Optional

import numpy as np

DensityMode = Literal["signed", "unsigned"]

_UNSIGNED_EPS = 1e-10


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(log_sigmoid(x))


@dataclass(frozen=True)
class DensityMapping:
    scale: float
    mode: DensityMode = "signed"

    def __post_init__(self) -> None:
        if not (np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"DensityMapping: scale s must be > 0, got {self.scale}")
        if self.mode not in ("signed", "unsigned"):
            raise ValueError(f"DensityMapping: unknown mode {self.mode!r}")

    def with_scale(self, scale: float) -> "DensityMapping":
        return DensityMapping(float(scale), self.mode)

    def band(self, factor: float = 4.0) -> float:
        """Distance beyond which samples carry negligible weight."""
        return factor / self.scale


@dataclass(frozen=True)
class AlphaContext:
    mode: DensityMode
    scale: float
    d0: np.ndarray        # (..., n-1) distance at k
    d1: np.ndarray        # (..., n-1) distance at k+1
    active: np.ndarray    # (..., n-1) pair contributes


def _signed_pairs(d0: np.ndarray, d1: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    r = log_sigmoid(s * d1) - log_sigmoid(s * d0)
    alpha = np.where(r < 0.0, -np.expm1(np.minimum(r, 0.0)), 0.0)
    return np.clip(alpha, 0.0, 1.0), r


def _unsigned_pairs(d0: np.ndarray, d1: np.ndarray, s: float) -> np.ndarray:
    u0, u1 = np.abs(d0), np.abs(d1)
    p0 = s * u0 / (1.0 + s * u0)
    p1 = s * u1 / (1.0 + s * u1)
    return np.clip(np.abs(p0 - p1) / (np.maximum(p0, p1) + _UNSIGNED_EPS), 0.0, 1.0)


def pair_alphas(
    distances: np.ndarray,
    mapping: DensityMapping,
    pair_mask: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, AlphaContext]:
    """Per-sample alphas for distances of shape (..., n).

    alpha_k uses samples k and k+1; the last sample gets 0, as does any pair
    masked out by `pair_mask` (shape (..., n-1)).
    """
    d = np.asarray(distances, dtype=np.float64)
    d0, d1 = d[..., :-1], d[..., 1:]
    active = np.ones(d0.shape, dtype=bool) if pair_mask is None else np.asarray(pair_mask, dtype=bool)
    if mapping.mode == "signed":
        a, _ = _signed_pairs(d0, d1, mapping.scale)
    else:
        a = _unsigned_pairs(d0, d1, mapping.scale)
    a = np.where(active, a, 0.0)
    alpha = np.concatenate([a, np.zeros(d.shape[:-1] + (1,))], axis=-1)
    return alpha, AlphaContext(mapping.mode, mapping.scale, d0, d1, active)


def pair_alphas_vjp(ctx: AlphaContext, grad_alpha: np.ndarray) -> tuple[np.ndarray, float]:
    """Returns (dL/d distances with shape (..., n), dL/ds)."""
    g = np.asarray(grad_alpha, dtype=np.float64)[..., :-1] * ctx.active
    s = ctx.scale
    d0, d1 = ctx.d0, ctx.d1
    if ctx.mode == "signed":
        _, r = _signed_pairs(d0, d1, s)
        live = r < 0.0
        da_dr = np.where(live, -np.exp(np.minimum(r, 0.0)), 0.0)
        q0 = sigmoid(-s * d0)
        q1 = sigmoid(-s * d1)
        gr = g * da_dr
        g_d0 = gr * (-s * q0)
        g_d1 = gr * (s * q1)
        g_s = float(np.sum(gr * (d1 * q1 - d0 * q0)))
    else:
        sign0 = np.where(d0 < 0.0, -1.0, 1.0)
        sign1 = np.where(d1 < 0.0, -1.0, 1.0)
        u0, u1 = np.abs(d0), np.abs(d1)
        p0 = s * u0 / (1.0 + s * u0)
        p1 = s * u1 / (1.0 + s * u1)
        m = np.maximum(p0, p1) + _UNSIGNED_EPS
        num = np.abs(p0 - p1)
        sgn = np.sign(p0 - p1)
        first_max = p0 >= p1
        da_dp0 = sgn / m - np.where(first_max, num / (m * m), 0.0)
        da_dp1 = -sgn / m - np.where(first_max, 0.0, num / (m * m))
        dp0_du = s / (1.0 + s * u0) ** 2
        dp1_du = s / (1.0 + s * u1) ** 2
        g_d0 = g * da_dp0 * dp0_du * sign0
        g_d1 = g * da_dp1 * dp1_du * sign1
        dp0_ds = u0 / (1.0 + s * u0) ** 2
        dp1_ds = u1 / (1.0 + s * u1) ** 2
        g_s = float(np.sum(g * (da_dp0 * dp0_ds + da_dp1 * dp1_ds)))
    grad_d = np.zeros(d0.shape[:-1] + (d0.shape[-1] + 1,))
    grad_d[..., :-1] += g_d0
    grad_d[..., 1:] += g_d1
    return grad_d, g_s


def alpha_from_distances(s_k: Any, s_k1: Any, mapping: DensityMapping) -> float | np.ndarray:
    """alpha for a single pair (or arrays of pairs) of consecutive distances."""
    a = np.asarray(s_k, dtype=np.float64)
    b = np.asarray(s_k1, dtype=np.float64)
    if mapping.mode == "signed":
        alpha, _ = _signed_pairs(a, b, mapping.scale)
    else:
        alpha = _unsigned_pairs(a, b, mapping.scale)
    return float(alpha) if alpha.ndim == 0 else alpha


__all__ = [
    "AlphaContext",
    "DensityMapping",
    "DensityMode",
    "alpha_from_distances",
    "log_sigmoid",
    "pair_alphas",
    "pair_alphas_vjp",
    "sigmoid",
]
