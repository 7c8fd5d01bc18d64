"""Fixed-priority planning for robot teams.

Robots plan one after another.  Robot ``i`` sees the plans that robots
``0..i-1`` made at this time step as obstacles moving along the horizon,
matched step by step.  Robots that have reached their goal become static
obstacles for everyone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mpc import Controller, StepDiagnostics, World


@dataclass
class TeamPlan:
    """Per-robot state plans (length N+1) made at one time step, in priority order."""

    states: list = field(default_factory=list)


def moving_obstacles(controllers, upto):
    """Horizon-indexed footprints of unfinished robots ``0..upto-1``."""
    moving = {}
    for j in range(upto):
        ctrl = controllers[j]
        if ctrl.at_goal():
            continue
        seq = ctrl.predicted_footprints()
        for pi in range(len(ctrl.shape.pieces)):
            moving[("robot", j, pi)] = [pieces[pi] for pieces in seq]
    return moving


def parked_obstacles(controllers, parked_order):
    return [piece for j in parked_order for piece in controllers[j].footprint()]


def plan_team_step(controllers: list[Controller], world: World, parked_order=None):
    """Advance every robot by one step in priority order.

    Parameters
    ----------
    controllers : list of Controller
        Index order is priority order.
    world : World
        Static obstacles shared by the team.
    parked_order : list of int, optional
        Robots already at their goal, in the order they arrived.  Their
        footprints are appended to the static obstacles so that obstacle
        indices stay stable across steps.  Updated in place.

    Returns
    -------
    inputs : list of ndarray
    plan : TeamPlan
    diagnostics : list of StepDiagnostics
    """
    parked_order = [] if parked_order is None else parked_order
    for j, ctrl in enumerate(controllers):
        if ctrl.at_goal() and j not in parked_order:
            parked_order.append(j)
    inputs, diags, plan = [], [], TeamPlan()
    for i, ctrl in enumerate(controllers):
        if ctrl.at_goal():
            u, _, d = ctrl.step(world)
        else:
            others = [j for j in parked_order if j != i]
            local = World(list(world.obstacles) + parked_obstacles(controllers, others),
                          moving_obstacles(controllers, i))
            u, _, d = ctrl.step(local)
        inputs.append(u)
        diags.append(d)
        plan.states.append(ctrl.last_plan.copy())
    return inputs, plan, diags


def pairwise_min_distance(controllers) -> float:
    """Exact signed distance between the closest pair of robots."""
    from .geometry import signed_distance

    best = np.inf
    for i in range(len(controllers)):
        for j in range(i + 1, len(controllers)):
            for a in controllers[i].footprint():
                for b in controllers[j].footprint():
                    best = min(best, signed_distance(a, b))
    return float(best)


__all__ = ["TeamPlan", "plan_team_step", "moving_obstacles", "pairwise_min_distance", "StepDiagnostics"]
