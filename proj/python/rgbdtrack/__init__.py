"""Desk-scale RGB-D tracking toolkit.

Long-term tracking evaluation protocol (precision/recall/F-score over a
confidence-threshold sweep), formula-computed per-frame attributes, dataset
validation, a deterministic synthetic sequence generator and box utilities,
backed by the C++ core.
"""

from ._core import (
    BoundingBox,
    GroundTruthEntry,
    Prediction,
    SequenceRecord,
    ToolkitError,
    attribute_window,
    box_area,
    box_center,
    box_loss,
    clip_to_frame,
    compute_attribute_flags,
    evaluate_dataset,
    f_measure,
    iou,
    list_sequences,
    load_sequence,
    mean_box_depth,
    precision,
    read_results,
    recall,
    soft_argmax,
    sweep_thresholds,
    track_oracle,
    validate_dataset,
    write_default_dataset,
    write_results,
)

__all__ = [
    "BoundingBox",
    "GroundTruthEntry",
    "Prediction",
    "SequenceRecord",
    "ToolkitError",
    "attribute_window",
    "box_area",
    "box_center",
    "box_loss",
    "clip_to_frame",
    "compute_attribute_flags",
    "evaluate_dataset",
    "f_measure",
    "iou",
    "list_sequences",
    "load_sequence",
    "mean_box_depth",
    "precision",
    "read_results",
    "recall",
    "soft_argmax",
    "sweep_thresholds",
    "track_oracle",
    "validate_dataset",
    "write_default_dataset",
    "write_results",
]

__version__ = "0.1.0"
