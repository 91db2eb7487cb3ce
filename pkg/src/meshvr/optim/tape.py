"""Reverse-mode tape with a registry of vector-Jacobian products.

Each recorded entry names an op, the slots it read and the slots it wrote,
plus a context object. Slots are plain strings; parameter groups use their
group names so gradients for them come out of `backward` directly.

A VJP receives (ctx, grads of the outputs) and returns one gradient (or None)
per input slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from meshvr.core.errors import MissingVjpError
from meshvr.optim.params import GradStore, ParamStore

GradTuple = tuple[Optional[np.ndarray], ...]
VjpFn = Callable[[Any, GradTuple], Sequence[Optional[np.ndarray]]]

_VJP_REGISTRY: dict[str, VjpFn] = {}


def register_vjp(op: str) -> Callable[[VjpFn], VjpFn]:
    def deco(fn: VjpFn) -> VjpFn:
        if op in _VJP_REGISTRY and _VJP_REGISTRY[op] is not fn:
            raise ValueError(f"VJP for op {op!r} is already registered")
        _VJP_REGISTRY[op] = fn
        return fn

    return deco


def get_vjp(op: str) -> VjpFn:
    try:
        return _VJP_REGISTRY[op]
    except KeyError:
        raise MissingVjpError(f"no VJP registered for op {op!r}") from None


@dataclass(frozen=True)
class TapeEntry:
    op: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    ctx: Any


class Tape:
    def __init__(self) -> None:
        self.entries: list[TapeEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, op: str, inputs: Sequence[str], outputs: Sequence[str], ctx: Any = None) -> None:
        self.entries.append(TapeEntry(op, tuple(inputs), tuple(outputs), ctx))

    def backward(self, seeds: Mapping[str, Any]) -> dict[str, np.ndarray]:
        """Propagate output gradients back through every entry; returns all slot gradients."""
        fns = [get_vjp(e.op) for e in self.entries]
        grads: dict[str, np.ndarray] = {k: np.asarray(v, dtype=np.float64) for k, v in seeds.items()}
        for entry, fn in zip(reversed(self.entries), reversed(fns)):
            outs = tuple(grads.get(o) for o in entry.outputs)
            if all(g is None for g in outs):
                continue
            in_grads = fn(entry.ctx, outs)
            if len(in_grads) != len(entry.inputs):
                raise RuntimeError(f"VJP for {entry.op!r} returned {len(in_grads)} gradients for {len(entry.inputs)} inputs")
            for name, g in zip(entry.inputs, in_grads):
                if g is None:
                    continue
                grads[name] = grads[name] + g if name in grads else np.asarray(g, dtype=np.float64)
        return grads


def backward(tape: Tape, loss_slot: str, params: ParamStore, *, scale: float = 1.0) -> GradStore:
    """dL/d(group) for every learnable group; other groups stay exactly zero."""
    grads = tape.backward({loss_slot: np.asarray(scale, dtype=np.float64)})
    return GradStore.from_mapping(params, grads)


@register_vjp("scalar_loss")
def _scalar_loss_vjp(ctx: Sequence[np.ndarray], outs: GradTuple) -> list[Optional[np.ndarray]]:
    # ctx holds the local gradient of the scalar w.r.t. each input
    g = outs[0]
    assert g is not None
    return [None if local is None else float(g) * local for local in ctx]


@register_vjp("weighted_sum")
def _weighted_sum_vjp(ctx: Sequence[float], outs: GradTuple) -> list[np.ndarray]:
    g = outs[0]
    assert g is not None
    return [np.asarray(float(g) * w) for w in ctx]


__all__ = ["Tape", "TapeEntry", "backward", "get_vjp", "register_vjp"]
