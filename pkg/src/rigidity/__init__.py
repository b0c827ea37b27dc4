"""Certified construction of rigidity sequences for rationally independent rotations."""

from .angle import CertifiedBool, Outcome, PrecReal, cert_less, dist_to_int, frac
from .config import RunConfig
from .errors import RigidityError
from .family import AlphaFamily, FamilyKind
from .fejer import TrigPoly, build_witness, verify_witness
from .measure import AtomicMeasure, MeasureTower, choose_partner, eta, interval_masses, mu_eval
from .search import SearchWindow, box_infimum, in_A, simultaneous_hits
from .sequence import RigiditySequence, build_base_sequence, build_sequence, interleave, theorem1_check
from .verify import coverage, divisibility_profile, obstruction_check, remark7_check

__all__ = [
    "AlphaFamily",
    "AtomicMeasure",
    "CertifiedBool",
    "FamilyKind",
    "MeasureTower",
    "Outcome",
    "PrecReal",
    "RigidityError",
    "RigiditySequence",
    "RunConfig",
    "SearchWindow",
    "TrigPoly",
    "box_infimum",
    "build_base_sequence",
    "build_sequence",
    "build_witness",
    "cert_less",
    "choose_partner",
    "coverage",
    "dist_to_int",
    "divisibility_profile",
    "eta",
    "frac",
    "in_A",
    "interleave",
    "interval_masses",
    "mu_eval",
    "obstruction_check",
    "remark7_check",
    "simultaneous_hits",
    "theorem1_check",
    "verify_witness",
]
