"""Tri-plane appearance field: feature planes, view encoding and MLP decoder."""

from __future__ import annotations

from .decoder import DECODER_PARAM_NAMES, MlpDecoder, decode, decoder_input
from .encoding import PositionalEncoding, positional_encoding
from .triplanes import (
    PLANE_NAMES,
    TriPlanes,
    TriplaneSample,
    sample_triplanes,
    triplanes_feature_vjp,
    triplanes_point_vjp,
)

__all__ = [
    "DECODER_PARAM_NAMES",
    "MlpDecoder",
    "PLANE_NAMES",
    "PositionalEncoding",
    "TriPlanes",
    "TriplaneSample",
    "decode",
    "decoder_input",
    "positional_encoding",
    "sample_triplanes",
    "triplanes_feature_vjp",
    "triplanes_point_vjp",
]
