"""Stiffening a Cartesian task on a lightly damped two-link arm.

Every 3 s the set-point flips and the task stiffness rises by 50. With plain
output feedback an episode eventually turns unstable; the heterogeneous law
with eps=1 rides through the whole ramp.

Run:  python3 demos/03_planar_gain_ramp.py
"""

from robustqp import scenarios
from robustqp.sim import run_scenario, scenario_metrics

for name in ("planar-gain-ramp", "planar-gain-ramp-robust"):
    s = scenarios.builtin(name)
    log = run_scenario(s)
    m = scenario_metrics(s, log)
    flags = "".join("X" if f else "." for f in m.segment_flags)
    ks = log.column("task0_ks")[-1]
    print(f"{name:24s} episodes [{flags:10s}] first unstable={m.first_unstable_segment} "
          f"last Ks={ks:g} blow-up={log.blowup}")
