"""Three-layer MLP decoder: (tri-plane feature, encoded view) -> RGB.

Hidden layers use ReLU; the output goes through a logistic so colours stay in
[0, 1]. Forward returns a cache consumed by `backward`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from meshvr.core.errors import ShapeMismatchError

DECODER_PARAM_NAMES = ("w0", "b0", "w1", "b1", "w2", "b2")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -x))


@dataclass
class MlpDecoder:
    w0: np.ndarray  # (in, hidden)
    b0: np.ndarray
    w1: np.ndarray  # (hidden, hidden)
    b1: np.ndarray
    w2: np.ndarray  # (hidden, 3)
    b2: np.ndarray

    def __post_init__(self) -> None:
        shapes = [(self.w0, self.b0), (self.w1, self.b1), (self.w2, self.b2)]
        for k, (w, b) in enumerate(shapes):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeMismatchError(f"decoder layer {k}: weight {w.shape} and bias {b.shape} disagree")
        if self.w1.shape[0] != self.w0.shape[1] or self.w2.shape[0] != self.w1.shape[1]:
            raise ShapeMismatchError("decoder: consecutive layer widths disagree")
        if self.w2.shape[1] != 3:
            raise ShapeMismatchError(f"decoder: output width must be 3, got {self.w2.shape[1]}")

    @classmethod
    def create(
        cls,
        in_dim: int,
        *,
        hidden: int = 64,
        rng: Optional[np.random.Generator] = None,
    ) -> "MlpDecoder":
        """Fan-in scaled uniform init (bound 1/sqrt(fan_in)) for weights and biases."""
        rng = rng or np.random.default_rng(0)
        dims = [(in_dim, hidden), (hidden, hidden), (hidden, 3)]
        arrays: list[np.ndarray] = []
        for fan_in, fan_out in dims:
            bound = 1.0 / np.sqrt(fan_in)
            arrays.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            arrays.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(*arrays)

    @property
    def in_dim(self) -> int:
        return int(self.w0.shape[0])

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in DECODER_PARAM_NAMES}

    def forward(self, x: Any) -> tuple[np.ndarray, tuple[np.ndarray, ...]]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeMismatchError(f"decoder input has shape {x.shape}, expected (N, {self.in_dim})")
        z0 = x @ self.w0 + self.b0
        h0 = np.maximum(z0, 0.0)
        z1 = h0 @ self.w1 + self.b1
        h1 = np.maximum(z1, 0.0)
        out = _sigmoid(h1 @ self.w2 + self.b2)
        return out, (x, z0, h0, z1, h1, out)

    def backward(self, cache: tuple[np.ndarray, ...], grad_out: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """Returns (dL/dx, {param name: gradient})."""
        x, z0, h0, z1, h1, out = cache
        g2 = grad_out * out * (1.0 - out)
        gh1 = g2 @ self.w2.T
        g1 = gh1 * (z1 > 0.0)
        gh0 = g1 @ self.w1.T
        g0 = gh0 * (z0 > 0.0)
        grads = {
            "w2": h1.T @ g2,
            "b2": g2.sum(axis=0),
            "w1": h0.T @ g1,
            "b1": g1.sum(axis=0),
            "w0": x.T @ g0,
            "b0": g0.sum(axis=0),
        }
        return g0 @ self.w0.T, grads


def decoder_input(encoded_view: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Concatenate [t(p), PE(v_c)] row-wise."""
    enc = np.atleast_2d(np.asarray(encoded_view, dtype=np.float64))
    feat = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if enc.shape[0] != feat.shape[0]:
        if enc.shape[0] == 1:
            enc = np.repeat(enc, feat.shape[0], axis=0)
        else:
            raise ShapeMismatchError(f"{enc.shape[0]} encoded views for {feat.shape[0]} feature rows")
    return np.concatenate([feat, enc], axis=1)


def decode(decoder: MlpDecoder, encoded_view: Any, features: Any) -> np.ndarray:
    """RGB in [0,1] for one sample (1-D inputs) or a batch (2-D inputs)."""
    single = np.asarray(features).ndim == 1
    rgb, _ = decoder.forward(decoder_input(np.asarray(encoded_view), np.asarray(features)))
    return rgb[0] if single else rgb


__all__ = ["DECODER_PARAM_NAMES", "MlpDecoder", "decode", "decoder_input"]
