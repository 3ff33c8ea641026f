"""Camera calibration for broadcast sports-field images.

Annotations are dictionaries mapping segment labels (see ``segment_labels()``)
to lists of ``[x, y]`` raster pixels. Angles are in radians, positions in
meters, with the field plane at z = 0 and z pointing down.
"""

from ._core import (
    CalibrationResult,
    CameraParams,
    DecompositionResult,
    EvalCounts,
    FieldCalibError,
    ImageDims,
    RadialDistortion,
    __version__,
    ac_at_t,
    calibrate,
    completeness_ratio,
    compound_score,
    decompose,
    deg2rad,
    homography_from_camera,
    iou,
    project,
    rad2deg,
    render_annotations,
    reproject,
    sample_camera,
    segment_labels,
)

__all__ = [
    "CalibrationResult",
    "CameraParams",
    "DecompositionResult",
    "EvalCounts",
    "FieldCalibError",
    "ImageDims",
    "RadialDistortion",
    "__version__",
    "ac_at_t",
    "calibrate",
    "completeness_ratio",
    "compound_score",
    "decompose",
    "deg2rad",
    "homography_from_camera",
    "iou",
    "project",
    "rad2deg",
    "render_annotations",
    "reproject",
    "sample_camera",
    "segment_labels",
]
