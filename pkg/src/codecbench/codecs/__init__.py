"""Encoder adapters and the built-in toy codec."""

from .adapters import (EncodeResult, EncoderAdapter, RateTargetOutcome, complexity_ratio,
                       encode_with_qp, format_ratio, qp_sweep, target_bitrate_search)
from .toy import payload_sizes, toy_decode, toy_encode

__all__ = [
    "EncodeResult", "EncoderAdapter", "RateTargetOutcome", "complexity_ratio", "encode_with_qp",
    "format_ratio", "qp_sweep", "target_bitrate_search", "payload_sizes", "toy_decode", "toy_encode",
]
