"""Z-structures on free and direct products of groups, on concrete models."""

from __future__ import annotations

from .models import CarrierSet, IntLineModel, ZStructureModel, get_model
from .words import IDENTITY, ONE, FreeProduct, Letter, ReducedWord, concat, format_word, letter_at, parse_word, prefix, reduce

__version__ = "0.1.0"

__all__ = [
    "CarrierSet",
    "FreeProduct",
    "IDENTITY",
    "IntLineModel",
    "Letter",
    "ONE",
    "ReducedWord",
    "ZStructureModel",
    "concat",
    "format_word",
    "get_model",
    "letter_at",
    "parse_word",
    "prefix",
    "reduce",
]
