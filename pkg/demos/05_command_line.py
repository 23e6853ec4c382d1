"""
Driving runs from the command line
==================================

The ``gcf`` entry point reads a JSON configuration and writes a run
directory: snapshot bodies, one SVG per planar snapshot, a diagnostics
CSV and a manifest. Here the commands are called in-process.
"""

import json
import tempfile
from pathlib import Path

from gcflab import cli, io

work = Path(tempfile.mkdtemp(prefix="gcf-demo-"))
config = {"n": 2, "resolution": [128], "initial": {"kind": "ellipsoid", "semi_axes": [2, 1]}, "snapshot_every": 200}
(work / "ellipse.json").write_text(json.dumps(config))

# gcf run --config ellipse.json --out run
cli.main(["run", "--config", str(work / "ellipse.json"), "--out", str(work / "run")])
manifest = io.read_manifest(work / "run" / "manifest.json")
print("snapshots:", len(manifest["snapshots"]), "first svg:", manifest["snapshots"][0]["svg"])
cols = io.read_diagnostics_csv(work / "run" / "diagnostics.csv")
print("CSV columns:", list(cols)[:5], "...")

# gcf polar --in body.json --out polar.json
(work / "body.json").write_text(json.dumps({"n": 2, "kind": "ball", "radius": 2, "resolution": [64]}))
cli.main(["polar", "--in", str(work / "body.json"), "--out", str(work / "polar.json")])
print("polar of the radius-2 disc:", io.load_body(work / "polar.json").values[:3])

# gcf sweep --param cfl_factor --values 0.1,0.25,0.5 ...
cli.main(["sweep", "--param", "cfl_factor", "--values", "0.1,0.25,0.5",
          "--config", str(work / "ellipse.json"), "--out", str(work / "sweep")])  # fmt: skip

# gcf verify --suite duality --n 2
cli.main(["verify", "--suite", "duality", "--n", "2"])
print("outputs in", work)
