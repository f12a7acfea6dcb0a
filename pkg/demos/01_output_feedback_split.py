"""Why feeding the measured error back into the desired dynamics is fragile.

The same 1-DoF servo follows a unit set-point twice. With a soft task gain
the loop settles; stiffening it to Ks=30 lets the servo lag feed back into the
integrator and the oscillation grows. Adding a desired-side damping term
(the heterogeneous law) restores a settled response at the stiff gain even
under a constant load.

Run:  python3 demos/01_output_feedback_split.py
"""

from robustqp import scenarios
from robustqp.sim import run_scenario, scenario_metrics


def describe(name: str) -> None:
    s = scenarios.builtin(name)
    log = run_scenario(s)
    m = scenario_metrics(s, log)
    q_end = log.column("q_hat_0")[-1]
    print(f"{name:14s} q(T)={q_end:+.4f}  osc={m.oscillation_index:5.3f}  "
          f"flagged={m.instability_flag}  settle={m.settling_time:.2f} s")


if __name__ == "__main__":
    print("measured output feedback")
    describe("fig4-left")
    describe("fig4-right")
    print("\nheterogeneous feedback, Ks=30 with a 5 N m load, Ki = eps * Kd")
    for eps in scenarios.FIG8_EPS:
        describe(f"fig8-eps-{eps:g}")
