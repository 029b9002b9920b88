"""Toric resolutions, integral spectral sequences and Ekedahl invariants."""

from .fan import CyclicQuotientType, Fan, ResolutionRecord, quotient_cone, resolve_fan
from .groups import AbelianGroup, GradedAbelianGroup
from .motivic import EkedahlReport, LAbClass, ekedahl_solve

__all__ = [
    "AbelianGroup",
    "CyclicQuotientType",
    "EkedahlReport",
    "Fan",
    "GradedAbelianGroup",
    "LAbClass",
    "ResolutionRecord",
    "ekedahl_solve",
    "quotient_cone",
    "resolve_fan",
]
