"""Joint limit q <= 3 under a persistent load, three ways.

A feedforward barrier keeps the desired state inside the limit, but the servo
sags past it by its static offset. Feeding the measured state into the barrier
instead chatters around the boundary. The robust row mixes both: measured
h, h_dot plus a desired-side damping term scaled by eps.

Run:  python3 demos/02_barrier_modes.py
"""

import numpy as np

from robustqp import scenarios
from robustqp.model import DesiredState
from robustqp.plant import SYSTEM_2, steady_state
from robustqp.sim import run_scenario, scenario_metrics

offset = steady_state(SYSTEM_2, DesiredState([3.0], [0.0]), 5.0).q[0] - 3.0
print(f"static servo offset under 5 N m: {offset:.5f} rad\n")

names = ["fig7-ffwd", "fig7-fb"] + [f"fig12-eps-{e:g}" for e in scenarios.FIG12_EPS]
for name in names:
    s = scenarios.builtin(name)
    log = run_scenario(s)
    m = scenario_metrics(s, log)
    print(f"{name:16s} max(-h)={m.overshoot_beyond_boundary[0]:.5f}  "
          f"min(h_d)={np.min(log.column('barrier0_hd')):+.2e}  "
          f"osc={m.oscillation_index:5.3f}  t_boundary={m.time_to_boundary[0]:.3f} s")
