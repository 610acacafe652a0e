# %% [markdown]
# # Parameter sweep over a manifest
#
# Write a few oracle clips with quantized blur, one subset per exposure, and
# tabulate the mean absolute error for every (D, phi) cell.

# %%
import json
import tempfile
from pathlib import Path

import shutterangle as sa
from shutterangle.evaluation import evaluate_manifest, parse_sweep, read_manifest, report_to_csv

root = Path(tempfile.mkdtemp())
rows = []
for i, (alpha, subset) in enumerate([(0.12, "8ms"), (0.24, "16ms"), (0.36, "24ms")]):
    clip = sa.render_clip(sa.SynthConfig(width=64, height=64, velocity=(24, 7), alpha=alpha, n_frames=6, seed=i))
    blur = sa.quantize_blur(clip.ground_truth[0].blur)
    clip.ground_truth = [sa.GroundTruth(g.flow, blur) for g in clip.ground_truth]
    sa.save_clip(clip, root / f"clip{i}", subset=subset)
    row = json.loads((root / f"clip{i}" / "manifest.jsonl").read_text())
    row["frames"] = [{k: f"clip{i}/{v}" for k, v in fr.items()} for fr in row["frames"]]
    rows.append(json.dumps(row))
(root / "all.jsonl").write_text("\n".join(rows) + "\n")

# %%
report = evaluate_manifest(read_manifest(root / "all.jsonl"), parse_sweep("D=10,20,30;phi=3,5,7"))
print(report_to_csv(report))
