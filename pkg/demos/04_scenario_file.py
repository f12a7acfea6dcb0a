"""Write a scenario file, edit it, and run it through the command line.

Run:  python3 demos/04_scenario_file.py /tmp/robustqp-demo
"""

import dataclasses
import sys
from pathlib import Path

from robustqp import cli, scenarios
from robustqp.io import dump_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "robustqp-demo")
out.mkdir(parents=True, exist_ok=True)

s = dataclasses.replace(scenarios.fig12(2.0), name="my-limit", t_end=4.0)
path = out / "my-limit.yaml"
path.write_text(dump_scenario(s))
print(path.read_text()[:400], "...\n")

code = cli.main(["run", str(path), "--out", str(out)])
print(f"exit code {code}; outputs in {out}")
