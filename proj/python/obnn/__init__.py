"""Oblivious inference for binarized neural networks over garbled circuits."""

from ._core import (
    Error,
    Model,
    ParseError,
    ProtocolError,
    StructuralError,
    TransportError,
    ValidationError,
    arch_cost,
    blb_bounds,
    compile_report,
    conv1d_cost,
    conv2d_cost,
    explore,
    garbled_infer,
    lba_bounds,
    plain_infer,
    popcount_gates,
    quantize_threshold,
    verify,
)

__all__ = [
    "Error",
    "Model",
    "ParseError",
    "ProtocolError",
    "StructuralError",
    "TransportError",
    "ValidationError",
    "arch_cost",
    "blb_bounds",
    "compile_report",
    "conv1d_cost",
    "conv2d_cost",
    "explore",
    "garbled_infer",
    "lba_bounds",
    "plain_infer",
    "popcount_gates",
    "quantize_threshold",
    "verify",
]
