"""Verification harness: experiment runners, structured reports, CLI."""

from .report import SCHEMA_VERSION, Check, Report
from .scan import default_weight_catalog, scan_characterization
from .verify import (
    verify_annulus_reduction,
    verify_family_equivalence,
    verify_nearest_center_property,
    verify_scale_equivalence,
)

__all__ = [
    "SCHEMA_VERSION",
    "Check",
    "Report",
    "default_weight_catalog",
    "scan_characterization",
    "verify_annulus_reduction",
    "verify_family_equivalence",
    "verify_nearest_center_property",
    "verify_scale_equivalence",
]
