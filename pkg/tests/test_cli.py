import json
import shutil

import pytest

from shutterangle import Vec2Field, save_vector_field
from shutterangle.cli import main


def strip_timing(path):
    report = json.loads(path.read_text())
    report.pop("timing")
    return report


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def clip_dir(tmp_path):
    out = tmp_path / "clip"
    assert main(["synth", "--alpha", "0.25", "--velocity", "8,0", "--frames", "6",
                 "--size", "48x40", "--seed", "4", "--out", str(out)]) == 0
    return out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


def test_synth_meta_records_blur_vector(tmp_path):
    out = tmp_path / "s"
    assert main(["synth", "--alpha", "0.24", "--velocity", "10,0", "--frames", "3",
                 "--size", "40x32", "--out", str(out)]) == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["blur_vector"] == [2.4, 0.0]
    assert meta["apparent_alpha"] == 0.24
    assert sorted(p.name for p in (out / "flow").iterdir()) == ["flow_0000.flo", "flow_0001.flo"]


def test_synth_reproducible(tmp_path):
    args = ["synth", "--alpha", "0.3", "--velocity", "5,-3", "--frames", "4", "--size", "32x32",
            "--seed", "11", "--noise-sigma", "0.01", "--quantize-blur"]
    assert main(args + ["--out", str(tmp_path / "a"), "--clip-id", "x"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--clip-id", "x"]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_estimate_closed_loop_from_directories(clip_dir, tmp_path):
    out = tmp_path / "r.json"
    assert main(["estimate", "--flow-dir", str(clip_dir / "flow"), "--blur-dir", str(clip_dir / "blur"),
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["parameters"] == {"patch_size": 30, "max_angle": 5.0, "min_magnitude": 1.0}
    assert report["alpha_glob"] == pytest.approx(0.25, abs=1e-9)
    assert len(report["clips"][0]["frames"]) == 5
    assert report["warnings"] == []


def test_estimate_from_manifest(clip_dir, tmp_path):
    out = tmp_path / "r.json"
    assert main(["estimate", "--manifest", str(clip_dir / "manifest.jsonl"), "--out", str(out)]) == 0
    rec = json.loads(out.read_text())["clips"][0]
    assert rec["alpha_gt"] == 0.25 and rec["alpha_glob"] == pytest.approx(0.25, abs=1e-9)


def test_estimate_float32_storage_resolution(tmp_path):
    # 2.4 is not a float32; the stored fields limit the closed loop to ~1e-8
    out = tmp_path / "s"
    main(["synth", "--alpha", "0.24", "--velocity", "10,0", "--frames", "3", "--size", "40x32", "--out", str(out)])
    main(["estimate", "--manifest", str(out / "manifest.jsonl"), "--out", str(tmp_path / "r.json")])
    alpha = json.loads((tmp_path / "r.json").read_text())["alpha_glob"]
    assert abs(alpha - 0.24) <= 0.24 * 2.0**-23


def test_estimate_empty_directory(tmp_path, capsys):
    (tmp_path / "f").mkdir()
    (tmp_path / "b").mkdir()
    assert main(["estimate", "--flow-dir", str(tmp_path / "f"), "--blur-dir", str(tmp_path / "b")]) == 1
    assert "no frame pairs found" in capsys.readouterr().err


def test_estimate_orphans_listed(clip_dir, capsys):
    (clip_dir / "blur" / "blur_0004.flo").unlink()
    assert main(["estimate", "--flow-dir", str(clip_dir / "flow"), "--blur-dir", str(clip_dir / "blur")]) == 1
    assert "flow_0004.flo" in capsys.readouterr().err


def test_estimate_patch_too_large(tmp_path):
    for sub in ("f", "b"):
        (tmp_path / sub).mkdir()
        save_vector_field(tmp_path / sub / "0.flo", Vec2Field.constant(640, 480, (10, 0)))
    assert main(["estimate", "--flow-dir", str(tmp_path / "f"), "--blur-dir", str(tmp_path / "b"),
                 "--patch-size", "10000", "--out", str(tmp_path / "r.json")]) == 1


def test_estimate_no_valid_frames_exit_2(tmp_path):
    for sub, vec in (("f", (10, 0)), ("b", (0, 0))):
        (tmp_path / sub).mkdir()
        save_vector_field(tmp_path / sub / "0.flo", Vec2Field.constant(40, 40, vec))
    out = tmp_path / "r.json"
    assert main(["estimate", "--flow-dir", str(tmp_path / "f"), "--blur-dir", str(tmp_path / "b"),
                 "--out", str(out)]) == 2
    report = json.loads(out.read_text())
    assert report["alpha_glob"] is None and report["warnings"]


def test_bad_magic_exit_1(clip_dir):
    (clip_dir / "flow" / "flow_0000.flo").write_bytes(b"XXXX" + b"\x00" * 16)
    assert main(["estimate", "--manifest", str(clip_dir / "manifest.jsonl")]) == 1


def test_usage_error_exit_1():
    assert main(["estimate", "--patch-size", "abc"]) == 1
    assert main(["frobnicate"]) == 1


def test_threads_identical(clip_dir, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    base = ["estimate", "--manifest", str(clip_dir / "manifest.jsonl"), "--patch-size", "20"]
    assert main(base + ["--threads", "1", "--out", str(a)]) == 0
    assert main(base + ["--threads", "4", "--out", str(b)]) == 0
    assert strip_timing(a) == strip_timing(b)


@pytest.mark.parametrize("mode, factor, apparent", [("delete", 3, 0.12), ("interpolate", 2, 0.72), ("delete", 1, 0.36)])
def test_tamper_updates_meta(tmp_path, mode, factor, apparent):
    src = tmp_path / "src"
    main(["synth", "--alpha", "0.36", "--velocity", "10,0", "--frames", "7", "--size", "40x32", "--out", str(src)])
    dst = tmp_path / "dst"
    assert main(["tamper", "--mode", mode, "--factor", str(factor), "--in", str(src), "--out", str(dst)]) == 0
    meta = json.loads((dst / "meta.json").read_text())
    assert meta["apparent_alpha"] == pytest.approx(apparent)
    if factor == 1:
        assert meta["tamper"] == []
        fields = {k: v for k, v in tree_bytes(src).items() if k.endswith((".flo", ".pgm"))}
        assert fields == {k: v for k, v in tree_bytes(dst).items() if k.endswith((".flo", ".pgm"))}
    else:
        assert meta["tamper"] == [{"mode": mode, "factor": factor}]


def test_tamper_then_estimate_then_detect(tmp_path, capsys):
    src, dst = tmp_path / "src", tmp_path / "dst"
    main(["synth", "--alpha", "0.25", "--velocity", "8,0", "--frames", "13", "--size", "40x40", "--out", str(src)])
    assert main(["tamper", "--mode", "delete", "--factor", "2", "--in", str(src), "--out", str(dst)]) == 0
    report = tmp_path / "r.json"
    assert main(["estimate", "--manifest", str(dst / "manifest.jsonl"), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["alpha_glob"] == pytest.approx(0.125, abs=1e-9)
    capsys.readouterr()
    assert main(["detect", "--report", str(report), "--alpha-ref", "0.25", "--window", "3"]) == 3
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["verdict"] == "deletion" and verdict["k_hat"] == 2
    assert verdict["segments"] == []


def write_report(path, alpha):
    frames = [{"frame_index": i, "alpha_patch": alpha, "patch": [0, 0], "n_valid": 900} for i in range(5)]
    path.write_text(json.dumps({"clips": [{"clip_id": "c", "alpha_glob": alpha, "frames": frames,
                                           "n_frames_total": 5, "skipped": []}]}))
    return path


@pytest.mark.parametrize("alpha, code", [(0.240, 0), (0.075, 3), (0.412, 4), (0.17, 5)])
def test_detect_exit_codes(tmp_path, alpha, code):
    report = write_report(tmp_path / "r.json", alpha)
    rel_tol = "0.2" if code == 5 else "0.25"
    out = tmp_path / "v.json"
    assert main(["detect", "--report", str(report), "--alpha-ref", "0.24", "--rel-tol", rel_tol,
                 "--out", str(out)]) == code
    assert json.loads(out.read_text())["schema"] == "shutterangle.verdict/1"


def test_detect_bad_reference(tmp_path):
    report = write_report(tmp_path / "r.json", 0.2)
    assert main(["detect", "--report", str(report), "--alpha-ref", "1.5"]) == 1


def test_eval_sweep(clip_dir, tmp_path):
    out = tmp_path / "eval.json"
    assert main(["eval", "--manifest", str(clip_dir / "manifest.jsonl"),
                 "--sweep", "D=10,20,30;phi=3,5,7", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert len(report["cells"]) == 9
    assert all(c["mae"]["synthetic"] == pytest.approx(0.0, abs=1e-9) for c in report["cells"])
    csv_lines = out.with_suffix(".csv").read_text().splitlines()
    assert csv_lines[0] == "D,phi,synthetic,Average" and len(csv_lines) == 10


@pytest.mark.parametrize("sweep", ["D=10,20;", "D=a;phi=3", "phi=3", "D=10;phi=3;D=20", "X=1;phi=2"])
def test_eval_malformed_sweep(clip_dir, tmp_path, capsys, sweep):
    assert main(["eval", "--manifest", str(clip_dir / "manifest.jsonl"), "--sweep", sweep,
                 "--out", str(tmp_path / "e.json")]) == 1
    assert "sweep" in capsys.readouterr().err


def test_eval_all_rows_failed(clip_dir, tmp_path):
    shutil.rmtree(clip_dir / "flow")
    assert main(["eval", "--manifest", str(clip_dir / "manifest.jsonl"), "--out", str(tmp_path / "e.json")]) == 1
