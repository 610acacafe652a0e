"""Command-line entry point: ``shutterangle {estimate,synth,tamper,detect,eval}``.

Exit codes:
    0   success (``detect``: consistent)
    1   I/O, format or parameter error
    2   ``estimate``: a clip produced no valid frame
    3   ``detect``: frame deletion
    4   ``detect``: frame interpolation
    5   ``detect``: indeterminate
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import EstimationFailedError, ShutterAngleError
from .estimator import ClipEstimate, FrameEstimate, estimate_clip
from .evaluation import ClipEntry, evaluate_manifest, load_pairs, parse_sweep, read_manifest, report_to_csv
from .forensics import DEFAULT_REL_TOL, detect_tamper, localize_inconsistency
from .patch_search import PatchLocation
from .synth import SynthConfig, load_clip, quantize_blur, render_clip, save_clip, tamper
from .validity import DEFAULT_MAX_ANGLE, DEFAULT_PATCH_SIZE, EstimationParams

RUN_SCHEMA = "shutterangle.run/1"
VERDICT_SCHEMA = "shutterangle.verdict/1"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ESTIMATE = 2
EXIT_CODES = {"consistent": 0, "deletion": 3, "interpolation": 4, "indeterminate": 5}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors must map to exit 1, not argparse's default 2
    def error(self, message):
        raise CliError(f"{self.prog}: {message}")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _pair_directories(flow_dir: Path, blur_dir: Path) -> ClipEntry:
    for d in (flow_dir, blur_dir):
        if not d.is_dir():
            raise CliError(f"{d}: not a directory")
    flows = sorted(flow_dir.glob("*.flo"))
    blurs = sorted(blur_dir.glob("*.flo"))
    if not flows and not blurs:
        raise CliError("no frame pairs found")
    if len(flows) != len(blurs):
        n = min(len(flows), len(blurs))
        orphans = [str(p) for p in (flows[n:] + blurs[n:])]
        raise CliError("unpaired field files: " + ", ".join(orphans))
    return ClipEntry(clip_id=flow_dir.parent.name or "clip", subset="default", alpha_gt=None,
                     frames=list(zip(flows, blurs)))


def _clip_record(entry: ClipEntry, est: ClipEstimate | None, error: str | None = None) -> dict:
    rec = {"clip_id": entry.clip_id, "subset": entry.subset, "alpha_gt": entry.alpha_gt}
    if est is None:
        rec.update(alpha_glob=None, error=error, frames=[], n_frames_used=0,
                   n_frames_total=len(entry.frames), skipped=list(range(len(entry.frames))))
    else:
        rec.update(alpha_glob=est.alpha_glob, frames=[f.as_dict() for f in est.frames],
                   n_frames_used=est.n_frames_used, n_frames_total=est.n_frames_total,
                   skipped=est.skipped)
    return rec


def cmd_estimate(args) -> int:
    t0 = time.perf_counter()
    params = EstimationParams(args.patch_size, args.max_angle, args.min_magnitude)
    if args.manifest:
        entries = read_manifest(args.manifest)
        if not entries:
            raise CliError("no frame pairs found")
    elif args.flow_dir and args.blur_dir:
        entries = [_pair_directories(Path(args.flow_dir), Path(args.blur_dir))]
    else:
        raise CliError("give --manifest or both --flow-dir and --blur-dir")

    clips = []
    warnings = []
    status = EXIT_OK
    for entry in entries:
        if not entry.frames:
            raise CliError(f"clip {entry.clip_id}: no frame pairs found")
        pairs = load_pairs(entry)
        try:
            est = estimate_clip(pairs, params, threads=args.threads)
        except EstimationFailedError as exc:
            clips.append(_clip_record(entry, None, str(exc)))
            warnings.append(f"clip {entry.clip_id}: estimation failed, {exc}")
            status = EXIT_NO_ESTIMATE
            continue
        for i in est.skipped:
            warnings.append(f"clip {entry.clip_id}: frame {i} skipped, no valid positions")
        clips.append(_clip_record(entry, est))

    report = {
        "schema": RUN_SCHEMA,
        "tool_version": __version__,
        "parameters": params.as_dict(),
        "clips": clips,
        "alpha_glob": clips[0]["alpha_glob"] if len(clips) == 1 else None,
        "warnings": warnings,
        "timing": {"elapsed_seconds": time.perf_counter() - t0},
    }
    _write_or_print(_dumps(report), args.out)
    return status


def _parse_pair(text: str, sep: str, kind=float):
    parts = text.lower().split(sep)
    if len(parts) != 2:
        raise CliError(f"expected two values separated by {sep!r}, got {text!r}")
    try:
        return tuple(kind(p) for p in parts)
    except ValueError:
        raise CliError(f"cannot parse {text!r}") from None


def cmd_synth(args) -> int:
    width, height = _parse_pair(args.size, "x", int)
    config = SynthConfig(
        width=width,
        height=height,
        velocity=_parse_pair(args.velocity, ","),
        alpha=args.alpha,
        n_frames=args.frames,
        seed=args.seed,
        supersamples=args.supersamples,
        noise_sigma=args.noise_sigma,
    )
    clip = render_clip(config)
    if args.quantize_blur:
        q = quantize_blur(clip.ground_truth[0].blur)
        clip.ground_truth = [type(gt)(gt.flow, q) for gt in clip.ground_truth]
        clip.quantized_blur = True
    save_clip(clip, args.out, clip_id=args.clip_id, subset=args.subset)
    return EXIT_OK


def cmd_tamper(args) -> int:
    clip = load_clip(args.in_dir)
    out = tamper(clip, args.mode, args.factor)
    save_clip(out, args.out, subset=args.subset)
    return EXIT_OK


def _clip_from_report(report: dict, clip_id: str | None) -> ClipEstimate:
    clips = report.get("clips") or []
    if clip_id is not None:
        clips = [c for c in clips if c.get("clip_id") == clip_id]
        if not clips:
            raise CliError(f"clip {clip_id!r} not in report")
    if len(clips) != 1:
        raise CliError(f"report holds {len(clips)} clips; pick one with --clip-id")
    rec = clips[0]
    if rec.get("alpha_glob") is None:
        raise CliError(f"clip {rec.get('clip_id')!r} has no estimate")
    frames = [
        FrameEstimate(
            frame_index=f["frame_index"],
            alpha_patch=f["alpha_patch"],
            patch=PatchLocation(f["patch"][0], f["patch"][1], f["n_valid"]),
            n_valid=f["n_valid"],
        )
        for f in rec.get("frames", [])
    ]
    return ClipEstimate(alpha_glob=rec["alpha_glob"], frames=frames,
                        n_frames_total=rec.get("n_frames_total", len(frames)),
                        skipped=rec.get("skipped", []))


def cmd_detect(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.report}: invalid JSON, {exc}") from None
    clip = _clip_from_report(report, args.clip_id)
    verdict = detect_tamper(clip, args.alpha_ref, args.rel_tol)
    out = {"schema": VERDICT_SCHEMA, **verdict.as_dict(), "rel_tol": args.rel_tol, "segments": None}
    if len(clip.frames) >= args.window:
        segs = localize_inconsistency(clip.frames, args.window, args.rel_tol)
        out["segments"] = [list(s) for s in segs]
    _write_or_print(_dumps(out), args.out)
    return EXIT_CODES[verdict.verdict]


def cmd_eval(args) -> int:
    grid = parse_sweep(args.sweep)
    entries = read_manifest(args.manifest)
    report = evaluate_manifest(entries, grid, threads=args.threads)
    report["tool_version"] = __version__
    out = Path(args.out)
    _write_or_print(_dumps(report), str(out))
    out.with_suffix(".csv").write_text(report_to_csv(report))
    if entries and report["n_failed"] == len(entries):
        print("all manifest rows failed", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shutterangle", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the exposure fraction of clips")
    p.add_argument("--manifest")
    p.add_argument("--flow-dir")
    p.add_argument("--blur-dir")
    p.add_argument("--patch-size", type=int, default=DEFAULT_PATCH_SIZE)
    p.add_argument("--max-angle", type=float, default=DEFAULT_MAX_ANGLE)
    p.add_argument("--min-magnitude", type=float, default=1.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("synth", help="render a synthetic oracle clip")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--velocity", required=True, help="VX,VY in px/frame (use --velocity=-3,4 for negatives)")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--size", default="320x240")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--supersamples", type=int, default=64)
    p.add_argument("--quantize-blur", action="store_true")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--clip-id")
    p.add_argument("--subset", default="synthetic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("tamper", help="simulate frame deletion or interpolation")
    p.add_argument("--mode", choices=["delete", "interpolate"], required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--subset", default="synthetic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tamper)

    p = sub.add_parser("detect", help="classify an estimate against a reference exposure fraction")
    p.add_argument("--report", required=True)
    p.add_argument("--alpha-ref", type=float, required=True)
    p.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    p.add_argument("--clip-id")
    p.add_argument("--window", type=int, default=9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="MAE over a manifest and a parameter sweep")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sweep", default="D=10,20,30;phi=3,5,7")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise CliError("--threads must be >= 1")
        return args.func(args)
    except (CliError, ShutterAngleError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
