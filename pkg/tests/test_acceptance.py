"""Exit criteria of the package, one test per criterion, tolerances fixed."""

import json
import math
import struct
import time

import numpy as np
import pytest

from shutterangle import (
    DataError,
    EstimationFailedError,
    EstimationParams,
    FormatError,
    SynthConfig,
    TruncationError,
    Vec2Field,
    compute_validity,
    detect_tamper,
    estimate_clip,
    perturb_field,
    quantize_blur,
    read_vector_field,
    render_clip,
    save_vector_field,
    tamper,
    write_vector_field,
)
from shutterangle.cli import main
from shutterangle.estimator import median
from shutterangle.patch_search import best_patch

from .test_validity import brute_valid

DEFAULT = EstimationParams()  # D = 30, phi = 5 deg


def noisy_clip_pairs(alpha, velocity, n_frames, sigma, seed, quantize=False, size=96):
    flow = Vec2Field.constant(size, size, velocity)
    blur = Vec2Field.constant(size, size, (alpha * velocity[0], alpha * velocity[1]))
    pairs = []
    for i in range(n_frames):
        f = perturb_field(flow, sigma, seed * 100003 + 2 * i)
        b = perturb_field(blur, sigma, seed * 100003 + 2 * i + 1)
        if quantize:
            b = quantize_blur(b)
        pairs.append((f, b))
    return pairs


@pytest.mark.criterion(1, "closed-loop exactness, |err| <= 1e-9, < 5 s at 320x240")
def test_closed_loop_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.125, 0.24, 0.36, 0.5):
        for velocity in ((10, 0), (6, 8)):
            cfg = SynthConfig(width=320, height=240, velocity=velocity, alpha=alpha, n_frames=30, seed=1)
            clip = render_clip(cfg)
            est = estimate_clip(clip.pairs(), DEFAULT)
            assert est.n_frames_used == 29
            worst = max(worst, abs(est.alpha_glob - alpha))
    elapsed = time.perf_counter() - t0
    print(f"worst error {worst:.3e}, {elapsed:.2f} s")
    assert worst <= 1e-9
    assert elapsed < 5.0


@pytest.mark.criterion(2, "quantized blur, flow norm 20, alpha 0.24: |err| <= 0.04")
@pytest.mark.parametrize("velocity", [(20, 0), (12, 16), (0, -20), (-14.142135623730951, 14.142135623730951)])
def test_quantization_realism(velocity):
    cfg = SynthConfig(width=64, height=64, velocity=velocity, alpha=0.24, n_frames=30)
    clip = render_clip(cfg)
    pairs = [(f, quantize_blur(b)) for f, b in clip.pairs()]
    est = estimate_clip(pairs, DEFAULT)
    assert abs(est.alpha_glob - 0.24) <= 0.04


@pytest.mark.criterion(3, "noise sigma 0.5 px on both fields: |err| <= 0.03")
@pytest.mark.parametrize("velocity", [(20, 0), (12, 16)])
def test_noise_robustness(velocity):
    est = estimate_clip(noisy_clip_pairs(0.25, velocity, 30, 0.5, seed=2024), DEFAULT)
    assert est.n_frames_used == 30
    assert abs(est.alpha_glob - 0.25) <= 0.03


@pytest.mark.criterion(4, "low-alpha degradation: err(0.03) > err(0.24) in every estimated trial of 20")
def test_low_alpha_degradation():
    rng = np.random.default_rng(404)
    declined = 0
    for trial in range(20):
        speed = rng.uniform(50, 80)
        theta = rng.uniform(0, 2 * math.pi)
        v = (speed * math.cos(theta), speed * math.sin(theta))
        high = estimate_clip(noisy_clip_pairs(0.24, v, 30, 0.5, seed=trial, quantize=True), DEFAULT)
        err_high = abs(high.alpha_glob - 0.24)
        try:
            low = estimate_clip(noisy_clip_pairs(0.03, v, 30, 0.5, seed=trial, quantize=True), DEFAULT)
        except EstimationFailedError:
            # 1-2 px quantized kernels can miss the angle or magnitude test in
            # every frame; no estimate is the strongest form of degradation
            declined += 1
            continue
        err_low = abs(low.alpha_glob - 0.03)
        assert err_low > err_high, (trial, err_low, err_high)
    assert declined <= 5


@pytest.mark.criterion(5, "validity mask == scalar predicate on 1000 random 16x16 pairs")
def test_filter_oracle():
    rng = np.random.default_rng(5)
    mismatches = 0
    for i in range(1000):
        phi = float(rng.choice([3.0, 5.0, 7.0, rng.uniform(1, 60)]))
        flow = rng.normal(0, rng.uniform(0.5, 8), size=(16, 16, 2))
        blur = flow * rng.uniform(-1.3, 1.3, size=(16, 16, 1)) + rng.normal(0, rng.uniform(0, 1), size=(16, 16, 2))
        blur[rng.uniform(size=(16, 16)) < 0.1] = 0.0
        mask = compute_validity(Vec2Field(flow), Vec2Field(blur), EstimationParams(1, phi))
        for y in range(16):
            for x in range(16):
                mismatches += bool(mask[y, x]) != brute_valid(flow[y, x], blur[y, x], phi)
    assert mismatches == 0


def windowed_best(mask, d):
    """Direct window sums from strided views, no prefix sums."""
    counts = np.lib.stride_tricks.sliding_window_view(mask.astype(np.int64), (d, d)).sum(axis=(2, 3))
    best = counts.max()
    if best == 0:
        return None
    y0, x0 = np.argwhere(counts == best)[0]
    return int(x0), int(y0), int(best)


@pytest.mark.criterion(6, "best_patch == exhaustive search on 500 masks up to 64x64")
def test_patch_oracle():
    rng = np.random.default_rng(6)
    mismatches = 0
    for i in range(500):
        d = int(rng.choice([2, 3, 5, 10]))
        h, w = rng.integers(d, 65, size=2)
        density = rng.choice([0.0, 0.005, 0.05, 0.3, 0.9, 1.0])
        mask = rng.uniform(size=(h, w)) < density
        got = best_patch(mask, d)
        want = windowed_best(mask, d)
        got = None if got is None else (got.x0, got.y0, got.valid_count)
        mismatches += got != want
    assert mismatches == 0


@pytest.mark.criterion(7, "deletion k=3 on alpha 0.36: within 5% of 0.12, verdict deletion k_hat=3")
def test_deletion_forensics():
    clip = render_clip(SynthConfig(width=64, height=64, velocity=(10, 0), alpha=0.36, n_frames=31))
    tampered = tamper(clip, "delete", 3)
    assert tampered.apparent_alpha == pytest.approx(0.12)
    est = estimate_clip(tampered.pairs(), DEFAULT)
    assert abs(est.alpha_glob - 0.12) <= 0.05 * 0.12
    verdict = detect_tamper(est, 0.36)
    assert verdict.verdict == "deletion" and verdict.k_hat == 3


@pytest.mark.criterion(8, "2x interpolation on alpha 0.24: within 5% of 0.48, verdict interpolation")
def test_interpolation_forensics():
    clip = render_clip(SynthConfig(width=64, height=64, velocity=(10, 0), alpha=0.24, n_frames=16))
    before = estimate_clip(clip.pairs(), DEFAULT).alpha_glob
    est = estimate_clip(tamper(clip, "interpolate", 2).pairs(), DEFAULT)
    assert abs(est.alpha_glob - 0.48) <= 0.05 * 0.48
    assert est.alpha_glob > before
    assert detect_tamper(est, 0.24).verdict == "interpolation"


@pytest.mark.criterion(9, "1000 field files round-trip byte-identically; bad magic/truncation/NaN rejected")
def test_format_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    for i in range(1000):
        w, h = (int(x) for x in rng.integers(1, 17, size=2))
        bits = rng.integers(0, 2**32, size=2 * w * h, dtype=np.uint64).astype(np.uint32)
        values = bits.view(np.float32)
        values[~np.isfinite(values)] = 0.0
        buf = b"PIEH" + struct.pack("<ii", w, h) + values.astype("<f4").tobytes()
        path = tmp_path / f"{i % 10}.flo"
        save_vector_field(path, read_vector_field(buf))
        assert path.read_bytes() == buf

    good = write_vector_field(Vec2Field.constant(3, 2, (1.5, -2.0)))
    with pytest.raises(FormatError, match="magic"):
        read_vector_field(b"XXXX" + good[4:])
    with pytest.raises(TruncationError):
        read_vector_field(good[:-1])
    nan = bytearray(good)
    nan[12 + 8 * 4 + 4:12 + 8 * 4 + 8] = struct.pack("<f", float("nan"))
    with pytest.raises(DataError) as exc:
        read_vector_field(bytes(nan))
    assert exc.value.pixel == (1, 1)


@pytest.mark.criterion(10, "estimate --threads 1 and --threads 8 give identical reports on 100 frames")
def test_thread_determinism(tmp_path):
    (tmp_path / "flow").mkdir()
    (tmp_path / "blur").mkdir()
    pairs = noisy_clip_pairs(0.3, (9, -4), 100, 0.7, seed=10, quantize=True, size=48)
    for i, (f, b) in enumerate(pairs):
        save_vector_field(tmp_path / "flow" / f"{i:04d}.flo", f)
        save_vector_field(tmp_path / "blur" / f"{i:04d}.flo", b)
    reports = []
    for threads in (1, 8):
        out = tmp_path / f"r{threads}.json"
        assert main(["estimate", "--flow-dir", str(tmp_path / "flow"), "--blur-dir", str(tmp_path / "blur"),
                     "--threads", str(threads), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        report.pop("timing")
        reports.append(report)
    assert len(reports[0]["clips"][0]["frames"]) == 100
    assert reports[0] == reports[1]


@pytest.mark.criterion(11, "median moves only within clean order statistics when 14/30 frames are x10")
def test_median_robustness():
    pairs = noisy_clip_pairs(0.25, (20, 0), 30, 0.5, seed=11)
    alphas = estimate_clip(pairs, DEFAULT).alphas
    assert len(alphas) == 30
    m = median(alphas)
    rng = np.random.default_rng(11)
    for trial in range(200):
        bad = set(rng.choice(30, size=14, replace=False).tolist())
        corrupted = [a * 10 if i in bad else a for i, a in enumerate(alphas)]
        clean = sorted(a for i, a in enumerate(alphas) if i not in bad)
        m2 = median(corrupted)
        # 14 corruptions shift the 15th/16th order statistics by at most 14 clean ranks
        lo = (clean[0] + clean[1]) / 2
        hi = (clean[14] + clean[15]) / 2
        assert lo <= m2 <= hi
        assert abs(m2 - m) <= max(hi - m, m - lo)
