"""Built-in scenario catalogue.

The 1-DoF entries use the two identified servo parameter sets; the planar
entries use a lightly damped servo on every joint of a two-link chain.
"""

from __future__ import annotations

import math

from . import plant
from .control import HETEROGENEOUS, NEGATIVE_DAMPING, OUTPUT_FEEDBACK
from .kinematics import PlanarChain, fk
from .sim import (
    FEEDFORWARD,
    BarrierConfig,
    Disturbance,
    GainRamp,
    Scenario,
    Setpoint,
    TaskConfig,
)

R10 = math.sqrt(10.0)
R30 = math.sqrt(30.0)

# barrier pole at -50: Ks_h = 2500, Kd_h = 100
BARRIER_POLE = -50.0
BARRIER_KS = BARRIER_POLE**2
BARRIER_KD = -2.0 * BARRIER_POLE

FIG8_EPS = (0.01, 0.1, 1.0, 2.0)
FIG12_EPS = (0.02, 0.2, 2.0, 5.0)

PLANAR_LINKS = (0.5, 0.5)
PLANAR_Q0 = (-0.5, 1.0)


def _joint_task(law, ks, kd, ref, ki=0.0, name="position"):
    return TaskConfig(
        kind="joint",
        law=law,
        Ks=(ks,),
        Kd=(kd,),
        Ki=(ki,),
        setpoints=(Setpoint(0.0, (ref,)),),
        name=name,
    )


def fig4(ks: float, name: str) -> Scenario:
    return Scenario(
        name=name,
        servos=(plant.SYSTEM_1,),
        tasks=(_joint_task(OUTPUT_FEEDBACK, ks, 2.0 * math.sqrt(ks), 1.0),),
        t_end=10.0,
        osc_window=2.5,
        description=f"System 1 joint set-point under measured output feedback, Ks={ks:g}",
    )


def fig8(eps: float) -> Scenario:
    kd = 2.0 * R30
    return Scenario(
        name=f"fig8-eps-{eps:g}",
        servos=(plant.SYSTEM_1,),
        tasks=(_joint_task(HETEROGENEOUS, 30.0, kd, 1.0, ki=eps * kd),),
        disturbances=(Disturbance(0, 5.0, 0.0),),
        t_end=10.0,
        description=f"System 1 heterogeneous feedback with Ki = {eps:g} Kd under a 5 N m load",
    )


def fig10(variant: str) -> Scenario:
    if variant == "a":
        law, kd, ki = HETEROGENEOUS, 2.0 * R30, 2.0 * R30
    else:
        law, kd, ki = NEGATIVE_DAMPING, -1.8 * R30, 3.2 * R30
    return Scenario(
        name=f"fig10-{variant}",
        servos=(plant.SYSTEM_1,),
        tasks=(_joint_task(law, 30.0, kd, 1.0, ki=ki),),
        disturbances=(Disturbance(0, 5.0, 10.0),),
        t_end=15.0,
        description=f"System 1 load step at t=10 s, {law} gains (variant {variant})",
    )


def _barrier_scenario(name: str, mode: str, ki_h: float, description: str) -> Scenario:
    return Scenario(
        name=name,
        servos=(plant.SYSTEM_2,),
        tasks=(_joint_task(OUTPUT_FEEDBACK, 10.0, 2.0 * R10, 5.0),),
        barriers=(
            BarrierConfig(
                kind="joint-upper",
                mode=mode,
                Ks_h=BARRIER_KS,
                Kd_h=BARRIER_KD,
                Ki_h=ki_h,
                joint=0,
                limit=3.0,
                name="q_max",
            ),
        ),
        disturbances=(Disturbance(0, 5.0, 0.0),),
        t_end=8.0,
        description=description,
    )


def fig7(mode: str) -> Scenario:
    tag = "ffwd" if mode == "feedforward-ecbf" else "fb"
    return _barrier_scenario(
        f"fig7-{tag}", mode, 0.0, f"System 2 joint limit q <= 3 with a {mode} row under a 5 N m load"
    )


def fig12(eps: float) -> Scenario:
    return _barrier_scenario(
        f"fig12-eps-{eps:g}",
        "recbf",
        eps * BARRIER_KD,
        f"System 2 joint limit q <= 3 with a robust barrier row, Ki_h = {eps:g} Kd_h",
    )


def planar_gain_ramp(law: str = OUTPUT_FEEDBACK, eps: float = 0.0, name: str = "planar-gain-ramp",
                     ks_start: float = 400.0, episodes: int = 10, episode: float = 3.0) -> Scenario:
    """Cartesian set-points alternating in y while the task stiffness steps up by 50 per episode."""
    chain = PlanarChain(PLANAR_LINKS)
    home = fk(chain, PLANAR_Q0)
    points = tuple(
        Setpoint(k * episode, (float(home[0]), float(home[1] + (0.2 if k % 2 == 0 else -0.2))))
        for k in range(episodes)
    )
    kd = 2.0 * math.sqrt(ks_start)
    return Scenario(
        name=name,
        servos=(plant.UNDERDAMPED,) * 2,
        link_lengths=PLANAR_LINKS,
        q0=PLANAR_Q0,
        tasks=(
            TaskConfig(
                kind="cartesian",
                law=law,
                Ks=(ks_start,),
                Kd=(kd,),
                Ki=(eps * kd,),
                setpoints=points,
                name="end-effector",
            ),
        ),
        gain_ramp=GainRamp(ks_start, 50.0, episode, kd_ratio=2.0, ki_eps=eps),
        t_end=episodes * episode,
        osc_window=1.0,
        description=f"two-link chain, {law} Cartesian task, Ks ramped by 50 per {episode:g} s episode",
    )


def planar_halfplane_recbf() -> Scenario:
    """End-effector confined to a small rectangle while external pushes hit the joints."""
    chain = PlanarChain(PLANAR_LINKS)
    cx, cy = (float(v) for v in fk(chain, PLANAR_Q0))
    x_max, x_min, y_max, y_min = 0.05, -0.02, 0.05, -0.05
    lam = -20.0
    ks_h, kd_h = lam * lam, -2.0 * lam
    faces = (
        ("x_max", (-1.0, 0.0), cx + x_max),
        ("x_min", (1.0, 0.0), -(cx + x_min)),
        ("y_max", (0.0, -1.0), cy + y_max),
        ("y_min", (0.0, 1.0), -(cy + y_min)),
    )
    barriers = tuple(
        BarrierConfig(
            kind="halfplane",
            mode="recbf",
            Ks_h=ks_h,
            Kd_h=kd_h,
            Ki_h=2.0 * kd_h,
            normal=normal,
            offset=offset,
            activation=0.04,
            name=label,
        )
        for label, normal, offset in faces
    )
    return Scenario(
        name="planar-halfplane-recbf",
        servos=(plant.SYSTEM_2,) * 2,
        link_lengths=PLANAR_LINKS,
        q0=PLANAR_Q0,
        tasks=(
            TaskConfig(
                kind="cartesian",
                law=OUTPUT_FEEDBACK,
                Ks=(10.0,),
                Kd=(2.0 * R10,),
                setpoints=(Setpoint(0.0, (cx + 0.1, cy)), Setpoint(4.0, (cx, cy - 0.1))),
                name="end-effector",
            ),
        ),
        barriers=barriers,
        disturbances=(
            Disturbance(0, 3.0, 2.0, 2.2),
            Disturbance(1, -3.0, 5.0, 5.2),
            Disturbance(0, 2.0, 6.0),
        ),
        t_end=8.0,
        description="two-link chain inside a rectangle of half-plane barriers, pulse and persistent pushes",
    )


def comparison_lemma(dt: float = 5e-5, h0: float = 0.05, lam: float = -1.0, t_end: float = 3.0) -> Scenario:
    """Disturbance-free 1-DoF run whose feedforward barrier row stays active as an equality."""
    return Scenario(
        name="comparison-lemma",
        servos=(plant.SYSTEM_1,),
        tasks=(_joint_task(FEEDFORWARD, 10.0, 2.0 * R10, 5.0),),
        barriers=(
            BarrierConfig(
                kind="joint-upper",
                mode="feedforward-ecbf",
                Ks_h=lam * lam,
                Kd_h=-2.0 * lam,
                limit=3.0,
                always_active=True,
                name="q_max",
            ),
        ),
        q0=(3.0 - h0,),
        dt=dt,
        t_end=t_end,
        description="feedforward barrier held at equality; checks the exponential lower bound",
    )


def _catalogue() -> dict:
    items = [
        fig4(10.0, "fig4-left"),
        fig4(30.0, "fig4-right"),
        fig7("feedforward-ecbf"),
        fig7("feedback-ecbf"),
        *(fig8(e) for e in FIG8_EPS),
        fig10("a"),
        fig10("b"),
        *(fig12(e) for e in FIG12_EPS),
        planar_gain_ramp(),
        planar_gain_ramp(HETEROGENEOUS, 1.0, name="planar-gain-ramp-robust"),
        planar_halfplane_recbf(),
    ]
    return {s.name: s for s in items}


BUILTINS = _catalogue()


def builtin(name: str) -> Scenario:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown built-in scenario {name!r}; see 'list'") from None


def list_builtin() -> list[tuple[str, str]]:
    return [(name, s.description) for name, s in BUILTINS.items()]
