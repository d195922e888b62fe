"""Adaptive approximate-membership filters over a blocked quotient filter.

``TelescopingFilter`` fixes false positives by switching the colliding
element to a fresh remainder chunk; ``ExtensionFilter`` lengthens the
colliding fingerprint instead.  Both keep per-block adaptivity state in a
56-bit arithmetic code.
"""

from adaptfilter.bitrsqf import FilterFull, QuotientFilter
from adaptfilter.exaf import ExtensionFilter, UncompressedExtensionFilter
from adaptfilter.hashkit import FingerprintParams, HashExhausted, SelectorOutOfRange, hash128
from adaptfilter.intcoder import CodeOverflow, ExtensionModel, Fixed256, Geometric
from adaptfilter.taf import QueryOutcome, TelescopingFilter, UncompressedTelescopingFilter

__all__ = [
    "CodeOverflow",
    "ExtensionFilter",
    "ExtensionModel",
    "FilterFull",
    "FingerprintParams",
    "Fixed256",
    "Geometric",
    "HashExhausted",
    "QueryOutcome",
    "QuotientFilter",
    "SelectorOutOfRange",
    "TelescopingFilter",
    "UncompressedExtensionFilter",
    "UncompressedTelescopingFilter",
    "hash128",
]
