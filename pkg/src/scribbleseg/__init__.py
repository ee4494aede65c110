"""Scribble-seeded interactive foreground/background segmentation.

The n x n graph-Laplacian label-smoothing problem is approximated by
per-dimension histogram eigenfunctions (b bins << n pixels), making the solve
cost independent of the image size except for histogramming and
interpolation. Features are pixel-to-pivot affinities over colour, space and
geodesic distance, with pivots sampled from the scribble contours.
"""

from .errors import (
    AnnotationError,
    DataError,
    DecodeError,
    DegenerateDataError,
    DimensionError,
    ManifestError,
    NumericError,
)
from .imgdata import (
    BACKGROUND,
    FOREGROUND,
    UNLABELED,
    DatasetManifest,
    GroundTruthMask,
    ImageRGB,
    ScribbleMap,
    load_dataset,
    load_image,
    load_mask,
    load_scribbles,
    save_mask,
)
from .features import AffinityConfig, FeatureMatrix, PivotSet, sample_pivots
from .segmenter import (
    SegmentationResult,
    SegmenterParams,
    SessionState,
    postprocess,
    segment_incremental,
    segment_single_pass,
    start_session,
)
from .robot import RobotTrace, Stroke, next_stroke, run_robot
from .evaluation import (
    Confusion,
    EvalReport,
    avg_strokes,
    confusion,
    evaluate_dataset,
    fscore,
    jaccard,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityConfig",
    "AnnotationError",
    "BACKGROUND",
    "Confusion",
    "DataError",
    "DatasetManifest",
    "DecodeError",
    "DegenerateDataError",
    "DimensionError",
    "EvalReport",
    "FOREGROUND",
    "FeatureMatrix",
    "GroundTruthMask",
    "ImageRGB",
    "ManifestError",
    "NumericError",
    "PivotSet",
    "RobotTrace",
    "ScribbleMap",
    "SegmentationResult",
    "SegmenterParams",
    "SessionState",
    "Stroke",
    "UNLABELED",
    "avg_strokes",
    "confusion",
    "evaluate_dataset",
    "fscore",
    "jaccard",
    "load_dataset",
    "load_image",
    "load_mask",
    "load_scribbles",
    "next_stroke",
    "postprocess",
    "run_robot",
    "sample_pivots",
    "save_mask",
    "segment_incremental",
    "segment_single_pass",
    "start_session",
]
