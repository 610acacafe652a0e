"""Synthetic uniform-translation clips with exact flow and blur ground truth.

A random texture is translated by a constant ``velocity`` (px/frame).  Each
frame integrates the texture over its exposure window by averaging ``S``
bilinear samples taken at time offsets ``i + (j + 0.5) / S * alpha``
(in frame intervals), so the ground truth is:

* flow between consecutive frames: ``velocity`` everywhere;
* blur kernel of every frame: ``alpha * velocity`` everywhere.

Texture noise generator
-----------------------
Pixel ``n`` (row-major) of the white-noise canvas is drawn as follows, all
arithmetic on unsigned 64-bit integers modulo 2**64::

    s = splitmix64(seed + (n + 1) * 0x9E3779B97F4A7C15)   # n-th splitmix64 output
    s = s or 0x9E3779B97F4A7C15                            # xorshift state must be non-zero
    s ^= s >> 12; s ^= s << 25; s ^= s >> 27               # xorshift64*
    u = ((s * 0x2545F4914F6CDD1D) >> 11) * 2**-53          # uniform in [0, 1)

    splitmix64(z):
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

The noise is box-blurred twice with a 5x5 box (radius 2, reflected edges)
and rescaled to [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, FormatError, ParameterError
from .field_model import (
    MAX_DIMENSION,
    Frame,
    Vec2Field,
    load_frame,
    load_vector_field,
    save_frame,
    save_vector_field,
)

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
META_SCHEMA = "shutterangle.clip/1"


def _splitmix64_mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform_noise(seed: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) from the generator in the module docstring."""
    n = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        s = _splitmix64_mix(np.uint64(seed % 2**64) + n * GOLDEN_GAMMA)
        s = np.where(s == 0, GOLDEN_GAMMA, s)
        s ^= s >> np.uint64(12)
        s ^= s << np.uint64(25)
        s ^= s >> np.uint64(27)
        s = s * np.uint64(0x2545F4914F6CDD1D)
    return (s >> np.uint64(11)).astype(np.float64) * 2.0**-53


def generate_texture(seed: int, width: int, height: int) -> Frame:
    """Deterministic band-limited noise texture in [0, 1]."""
    noise = uniform_noise(seed, width * height).reshape(height, width)
    smooth = ndimage.uniform_filter(noise, size=5, mode="reflect")
    smooth = ndimage.uniform_filter(smooth, size=5, mode="reflect")
    lo, hi = smooth.min(), smooth.max()
    if hi > lo:
        smooth = (smooth - lo) / (hi - lo)
    else:
        smooth = np.zeros_like(smooth)
    return Frame(np.clip(smooth, 0.0, 1.0))


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for a uniform-translation clip.

    ``noise_sigma`` is the std of additive Gaussian intensity noise applied
    to every rendered frame (then clamped to [0, 1]).
    """

    width: int = 320
    height: int = 240
    velocity: tuple[float, float] = (10.0, 0.0)
    alpha: float = 0.24
    n_frames: int = 30
    seed: int = 0
    supersamples: int = 64
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "velocity", tuple(float(c) for c in self.velocity))
        if len(self.velocity) != 2 or not all(math.isfinite(c) for c in self.velocity):
            raise ConfigurationError(f"velocity must be a finite 2-vector, got {self.velocity}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("frame dimensions must be positive")
        if self.n_frames < 2:
            raise ConfigurationError("a clip needs at least 2 frames")
        if self.supersamples < 1:
            raise ConfigurationError("supersamples must be >= 1")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")

    @property
    def blur_vector(self) -> tuple[float, float]:
        return (self.alpha * self.velocity[0], self.alpha * self.velocity[1])

    def sample_times(self) -> np.ndarray:
        """Exposure sample offsets, in frame intervals, relative to each frame start."""
        j = np.arange(self.supersamples, dtype=np.float64)
        return (j + 0.5) / self.supersamples * self.alpha

    def as_dict(self) -> dict:
        d = asdict(self)
        d["velocity"] = list(self.velocity)
        return d


@dataclass(frozen=True)
class GroundTruth:
    """Exact fields for one consecutive frame pair."""

    flow: Vec2Field
    blur: Vec2Field

    @classmethod
    def for_config(cls, config: SynthConfig) -> "GroundTruth":
        return cls(
            flow=Vec2Field.constant(config.width, config.height, config.velocity),
            blur=Vec2Field.constant(config.width, config.height, config.blur_vector),
        )


@dataclass
class SynthClip:
    """Rendered frames plus one :class:`GroundTruth` per consecutive pair."""

    frames: list[Frame]
    ground_truth: list[GroundTruth]
    alpha: float
    apparent_alpha: float
    config: SynthConfig | None = None
    history: list[dict] = field(default_factory=list)
    quantized_blur: bool = False

    def pairs(self) -> list[tuple[Vec2Field, Vec2Field]]:
        return [(gt.flow, gt.blur) for gt in self.ground_truth]


def _canvas_layout(config: SynthConfig):
    """Texture size and per-axis origin so every sample stays inside the canvas."""
    t_max = (config.n_frames - 1) + config.sample_times()[-1]
    origin = []
    extent = []
    for c, size in ((config.velocity[0], config.width), (config.velocity[1], config.height)):
        lo, hi = sorted((0.0, t_max * c))
        o = math.ceil(hi)
        # samples reach o - hi .. o - lo (+1 for the bilinear neighbour)
        origin.append(o)
        extent.append(size + math.floor(o - lo) + 2)
    return (extent[0], extent[1]), (origin[0], origin[1])


def _shift_kernel(bx: np.ndarray, by: np.ndarray) -> dict[tuple[int, int], float]:
    """Integer-offset weights equivalent to averaging bilinear samples at (bx, by)."""
    kernel: dict[tuple[int, int], float] = {}
    w = 1.0 / len(bx)
    for x, y in zip(bx.tolist(), by.tolist()):
        ix, iy = math.floor(x), math.floor(y)
        ax, ay = x - ix, y - iy
        for dy, wy in ((0, 1.0 - ay), (1, ay)):
            for dx, wx in ((0, 1.0 - ax), (1, ax)):
                if wx * wy != 0.0:
                    key = (iy + dy, ix + dx)
                    kernel[key] = kernel.get(key, 0.0) + w * wx * wy
    return kernel


def _render_frame(texture: np.ndarray, config: SynthConfig, index: int, origin) -> np.ndarray:
    vx, vy = config.velocity
    t = index + config.sample_times()
    bx = origin[0] - t * vx
    by = origin[1] - t * vy
    h, w = config.height, config.width
    out = np.zeros((h, w))
    for (iy, ix), weight in sorted(_shift_kernel(bx, by).items()):
        out += weight * texture[iy:iy + h, ix:ix + w]
    if config.noise_sigma > 0:
        rng = np.random.default_rng([config.seed % 2**64, index])
        out += rng.normal(0.0, config.noise_sigma, size=out.shape)
    return np.clip(out, 0.0, 1.0)


def render_clip(config: SynthConfig) -> SynthClip:
    """Render ``config.n_frames`` frames and their exact ground truth.

    Raises:
        ConfigurationError: the required texture canvas exceeds the size cap.
    """
    (tw, th), origin = _canvas_layout(config)
    if tw > MAX_DIMENSION or th > MAX_DIMENSION:
        raise ConfigurationError(
            f"texture canvas {tw}x{th} needed for this motion exceeds the {MAX_DIMENSION} cap"
        )
    texture = generate_texture(config.seed, tw, th).pixels
    frames = [Frame(_render_frame(texture, config, i, origin)) for i in range(config.n_frames)]
    gt = GroundTruth.for_config(config)
    return SynthClip(
        frames=frames,
        ground_truth=[gt] * (config.n_frames - 1),
        alpha=config.alpha,
        apparent_alpha=config.alpha,
        config=config,
    )


def quantize_blur(blur: Vec2Field) -> Vec2Field:
    """Round each component to the nearest integer, ties away from zero."""
    d = blur.data
    return Vec2Field(np.copysign(np.floor(np.abs(d) + 0.5), d) + 0.0)


def perturb_field(field: Vec2Field, sigma_px: float, seed: int) -> Vec2Field:
    """Add i.i.d. Gaussian noise of std ``sigma_px`` to every component."""
    if sigma_px < 0:
        raise ParameterError(f"sigma_px must be >= 0, got {sigma_px}")
    if sigma_px == 0:
        return field
    rng = np.random.default_rng(seed % 2**64)
    return Vec2Field(field.data + rng.normal(0.0, sigma_px, size=field.data.shape))


def subsample_clip(frames: list[Frame], gt_per_frame: list[GroundTruth], k: int):
    """Keep frames 0, k, 2k, ... as if the others had been deleted.

    The flow between kept frames is the sum of the ``k`` flows it spans;
    blur is that of the kept frame.  The apparent exposure fraction drops
    to ``alpha / k``.

    Raises:
        ConfigurationError: fewer than two frames survive.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"subsampling factor must be a positive integer, got {k}")
    if len(gt_per_frame) != len(frames) - 1:
        raise ParameterError("expected one ground-truth pair per consecutive frame pair")
    if k == 1:
        return list(frames), list(gt_per_frame)
    kept = frames[::k]
    if len(kept) < 2:
        raise ConfigurationError(f"subsampling {len(frames)} frames by {k} leaves fewer than 2")
    gt = []
    for m in range(len(kept) - 1):
        span = gt_per_frame[m * k:(m + 1) * k]
        flow = span[0].flow.data.copy()
        for g in span[1:]:
            flow += g.flow.data
        gt.append(GroundTruth(flow=Vec2Field(flow), blur=span[0].blur))
    return kept, gt


def _shift_frame(frame: Frame, dx: float, dy: float) -> Frame:
    shifted = ndimage.shift(frame.pixels, (dy, dx), order=1, mode="nearest")
    return Frame(np.clip(shifted, 0.0, 1.0))


def interpolate_clip(frames: list[Frame], gt_per_frame: list[GroundTruth], m: int):
    """Blur-preserving frame-rate upsampling by an integer factor ``m``.

    Between every source pair, ``m - 1`` intermediates are synthesized by
    translating the earlier frame along a fraction of its mean flow, so they
    carry the source blur.  Flows are divided by ``m`` and blur is kept, which
    raises the apparent exposure fraction to ``m * alpha``.  A clip of ``n``
    frames becomes ``(n - 1) * m + 1`` frames.
    """
    if int(m) != m or m < 1:
        raise ParameterError(f"interpolation factor must be a positive integer, got {m}")
    if len(gt_per_frame) != len(frames) - 1:
        raise ParameterError("expected one ground-truth pair per consecutive frame pair")
    if m == 1:
        return list(frames), list(gt_per_frame)
    out_frames = []
    out_gt = []
    for frame, gt in zip(frames[:-1], gt_per_frame):
        step = GroundTruth(flow=Vec2Field(gt.flow.data / m), blur=gt.blur)
        mean_u = float(gt.flow.u.mean())
        mean_v = float(gt.flow.v.mean())
        out_frames.append(frame)
        for j in range(1, m):
            out_frames.append(_shift_frame(frame, mean_u * j / m, mean_v * j / m))
        out_gt.extend([step] * m)
    out_frames.append(frames[-1])
    return out_frames, out_gt


def tamper(clip: SynthClip, mode: str, factor: int) -> SynthClip:
    """Apply ``subsample_clip`` (``mode="delete"``) or ``interpolate_clip``.

    A factor of 1 returns an unchanged copy with no history entry.
    """
    if mode not in ("delete", "interpolate"):
        raise ParameterError(f"unknown tamper mode {mode!r}")
    if factor == 1:
        return replace(clip, frames=list(clip.frames), ground_truth=list(clip.ground_truth),
                       history=list(clip.history))
    if mode == "delete":
        frames, gt = subsample_clip(clip.frames, clip.ground_truth, factor)
        apparent = clip.apparent_alpha / factor
    elif mode == "interpolate":
        frames, gt = interpolate_clip(clip.frames, clip.ground_truth, factor)
        apparent = clip.apparent_alpha * factor
    return SynthClip(
        frames=frames,
        ground_truth=gt,
        alpha=clip.alpha,
        apparent_alpha=apparent,
        config=clip.config,
        history=clip.history + [{"mode": mode, "factor": int(factor)}],
        quantized_blur=clip.quantized_blur,
    )


# -- clip directories ---------------------------------------------------------
#
#   <dir>/frames/frame_0000.pgm ...
#   <dir>/flow/flow_0000.flo ...   flow from frame i to frame i+1
#   <dir>/blur/blur_0000.flo ...   blur kernel map of frame i
#   <dir>/manifest.jsonl           one estimator manifest row
#   <dir>/meta.json                config echo and apparent alpha


def _dump_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_clip(clip: SynthClip, out_dir, clip_id: str | None = None, subset: str = "synthetic") -> Path:
    out = Path(out_dir)
    for sub in ("frames", "flow", "blur"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    clip_id = clip_id or out.name
    rows = []
    for i, frame in enumerate(clip.frames):
        save_frame(out / "frames" / f"frame_{i:04d}.pgm", frame)
    for i, gt in enumerate(clip.ground_truth):
        flow_rel = f"flow/flow_{i:04d}.flo"
        blur_rel = f"blur/blur_{i:04d}.flo"
        save_vector_field(out / flow_rel, gt.flow)
        save_vector_field(out / blur_rel, gt.blur)
        rows.append({"flow_path": flow_rel, "blur_path": blur_rel})

    manifest = {"clip_id": clip_id, "subset": subset, "alpha_gt": clip.apparent_alpha, "frames": rows}
    (out / "manifest.jsonl").write_text(json.dumps(manifest, sort_keys=True) + "\n")

    meta = {
        "schema": META_SCHEMA,
        "clip_id": clip_id,
        "alpha": clip.alpha,
        "apparent_alpha": clip.apparent_alpha,
        "n_frames": len(clip.frames),
        "quantized_blur": clip.quantized_blur,
        "tamper": clip.history,
        "config": clip.config.as_dict() if clip.config else None,
    }
    if clip.config is not None:
        meta["flow_vector"] = list(clip.config.velocity)
        meta["blur_vector"] = list(clip.config.blur_vector)
    _dump_json(out / "meta.json", meta)
    return out


def load_clip(clip_dir) -> SynthClip:
    """Read a directory written by :func:`save_clip`."""
    src = Path(clip_dir)
    meta_path = src / "meta.json"
    if not meta_path.is_file():
        raise FileNotFoundError(f"{meta_path} not found")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{meta_path}: {exc}") from None
    frames = [load_frame(p) for p in sorted((src / "frames").glob("*.pgm"))]
    flows = sorted((src / "flow").glob("*.flo"))
    blurs = sorted((src / "blur").glob("*.flo"))
    if len(flows) != len(blurs) or len(flows) != len(frames) - 1:
        raise FormatError(
            f"{src}: {len(frames)} frames, {len(flows)} flow and {len(blurs)} blur fields"
        )
    gt = [GroundTruth(load_vector_field(f), load_vector_field(b)) for f, b in zip(flows, blurs)]
    cfg = meta.get("config")
    config = None
    if cfg:
        cfg = dict(cfg)
        cfg["velocity"] = tuple(cfg["velocity"])
        config = SynthConfig(**cfg)
    return SynthClip(
        frames=frames,
        ground_truth=gt,
        alpha=meta["alpha"],
        apparent_alpha=meta["apparent_alpha"],
        config=config,
        history=list(meta.get("tamper", [])),
        quantized_blur=bool(meta.get("quantized_blur", False)),
    )

