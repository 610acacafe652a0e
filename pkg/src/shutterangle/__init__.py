"""Exposure fraction (shutter angle) estimation from optical flow and linear blur."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DataError,
    EstimationFailedError,
    FormatError,
    ParameterError,
    ShapeError,
    ShutterAngleError,
    TruncationError,
)
from .estimator import (
    CameraTiming,
    ClipEstimate,
    FrameEstimate,
    estimate_clip,
    estimate_frame,
    mean_absolute_error,
)
from .evaluation import evaluate_manifest, parse_sweep, read_manifest
from .field_model import (
    Frame,
    Vec2Field,
    load_frame,
    load_vector_field,
    read_frame,
    read_vector_field,
    save_frame,
    save_vector_field,
    write_frame,
    write_vector_field,
)
from .forensics import TamperVerdict, detect_tamper, localize_inconsistency
from .patch_search import PatchLocation, SummedAreaTable, best_patch, build_sat
from .synth import (
    GroundTruth,
    SynthClip,
    SynthConfig,
    generate_texture,
    interpolate_clip,
    load_clip,
    perturb_field,
    quantize_blur,
    render_clip,
    save_clip,
    subsample_clip,
    tamper,
)
from .validity import EstimationParams, compute_validity, pixel_valid
