"""Parameter registry, reverse tape, Adam and finite-difference checks."""

from __future__ import annotations

from .adam import AdamReport, AdamState, adam_step
from .gradcheck import FdReport, fd_check
from .params import GradStore, ParamStore
from .tape import Tape, backward, register_vjp

__all__ = [
    "AdamReport",
    "AdamState",
    "FdReport",
    "GradStore",
    "ParamStore",
    "Tape",
    "adam_step",
    "backward",
    "fd_check",
    "register_vjp",
]
