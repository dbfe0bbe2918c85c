"""Grounding text, 3D box geometry and detection evaluation."""

import json

from gr3dkit import _core
from gr3dkit._core import (
    FORMAT_VERSION,
    Error,
    canonical_text,
    iou2d,
    iou3d,
    normalize_intrinsics,
    parse,
    sample_region_points,
)

__all__ = [
    "FORMAT_VERSION",
    "Error",
    "canonical_text",
    "evaluate_2d",
    "evaluate_3d",
    "evaluate_gcot",
    "iou2d",
    "iou3d",
    "normalize_intrinsics",
    "parse",
    "sample_region_points",
]


def evaluate_3d(pred, gt, thresholds=None, all_points=False, jobs=1):
    """Evaluates JSON-lines text; returns the report as a dict."""
    return json.loads(_core.evaluate_3d(pred, gt, thresholds, all_points, jobs))


def evaluate_2d(pred, gt, thresholds=None, all_points=False, jobs=1):
    return json.loads(_core.evaluate_2d(pred, gt, thresholds, all_points, jobs))


def evaluate_gcot(records):
    return json.loads(_core.evaluate_gcot(records))
