#!/usr/bin/env python3
"""Three-frame single-object scene whose hypothesis id changes once.

Writes the scene and tracking file, runs `ovmot eval --format json`, and
checks MOTA and IDS against a count done here from the raw records.
"""

import argparse
import json
import os
import subprocess
import sys

TOL = 1e-9


def write_inputs(workdir):
    os.makedirs(workdir, exist_ok=True)
    frames = []
    hyps = []
    hyp_ids = [1, 2, 2]
    for f in range(3):
        box = [float(f), 0.0, 0.5, 1.0, 1.0, 1.0, 0.0]
        frames.append({
            "frame_index": f,
            "detections": [],
            "gt": [{"gt_id": 1, "box": box, "class": "Car"}],
        })
        hyps.append({"frame": f, "track_id": hyp_ids[f], "class": "Car", "box": box, "score": 0.9})
    scene = {
        "schema_version": 1,
        "header": {
            "frame_rate": 10,
            "z_convention": "center",
            "vocabulary": {"base": ["Car"], "novel": ["Bus"], "placeholder": "Unknown"},
        },
        "frames": frames,
    }
    scene_path = os.path.join(workdir, "scene.json")
    hyp_path = os.path.join(workdir, "hyp.jsonl")
    with open(scene_path, "w") as fh:
        json.dump(scene, fh)
    with open(hyp_path, "w") as fh:
        for h in hyps:
            fh.write(json.dumps(h) + "\n")
    return scene, hyps, scene_path, hyp_path


def recount(scene, hyps):
    # Boxes coincide exactly, so each gt is matched to the hyp in its frame.
    by_frame = {h["frame"]: h for h in hyps}
    gt_total = 0
    fn = fp = ids = 0
    last = {}
    for fr in scene["frames"]:
        gt_total += len(fr["gt"])
        h = by_frame.get(fr["frame_index"])
        for g in fr["gt"]:
            if h is None:
                fn += 1
                continue
            prev = last.get(g["gt_id"])
            if prev is not None and prev != h["track_id"]:
                ids += 1
            last[g["gt_id"]] = h["track_id"]
    return 1.0 - (fp + fn + ids) / gt_total, ids


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--workdir", required=True)
    args = ap.parse_args()

    scene, hyps, scene_path, hyp_path = write_inputs(args.workdir)
    want_mota, want_ids = recount(scene, hyps)
    proc = subprocess.run(
        [args.cli, "eval", "--gt", scene_path, "--hyp", hyp_path, "--format", "json", "--splits", "all"],
        capture_output=True, text=True)
    if proc.returncode != 0:
        print(proc.stderr, file=sys.stderr)
        return 1
    report = json.loads(proc.stdout)
    row = report["splits"][0]
    got_mota, got_ids = row["mota"], row["ids"]
    ok = abs(got_mota - want_mota) <= TOL and abs(got_mota - 0.6667) <= 1e-4 and got_ids == want_ids == 1
    print(f"{'PASS' if ok else 'FAIL'} metric-hand-oracle: MOTA {got_mota:.10f} vs {want_mota:.10f}, "
          f"IDS {got_ids} vs {want_ids}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
