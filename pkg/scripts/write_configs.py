"""Regenerate configs/*.json from the built-in examples."""

import json
from pathlib import Path

from weakdisorder.canonical import CANONICAL

out = Path(__file__).resolve().parent.parent / "configs"
out.mkdir(exist_ok=True)
for name, build in CANONICAL.items():
    d = build()
    d["output_dir"] = f"out/{name}"
    (out / f"{name}.json").write_text(json.dumps(d, indent=2) + "\n")
    print(out / f"{name}.json")
