"""
Closed-loop simulation: synthetic human, fixture controller, whole-body IK
and base repulsion, advanced at a fixed control period.
"""

import math

import numpy as np

from .capsule import Capsule2D, closest_batch, disc_points, repulsive_velocity
from .ergonomics import compute_joint_angles, compute_planes, compute_score
from .fixture import FixtureController
from .human import SyntheticHuman, comfortable_pelvis, synthesize_keypoints
from .kinematics import (
    ModeState,
    base_velocity_map,
    dls_solve,
    integrate_joints,
    kinematics,
    mode_update,
    null_space_command,
    pose_error,
)
from .trace import MODES, TraceBuilder, trace_columns


class SimulationError(RuntimeError):
    """Numerical failure; ``trace`` holds every record up to the last good tick."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def _leg_cloud(human, pelvis, n):
    return np.vstack([disc_points(c, human.leg_radius, n) for c in human.legs(pelvis)])


def run_scenario(sc, baseline=None, seed=None):
    """Simulate ``sc`` and return its :class:`~ergofix.trace.TraceLog`.

    ``baseline`` and ``seed`` override the scenario's own settings.
    """
    baseline = sc.baseline if baseline is None else baseline
    rng = np.random.default_rng(sc.seed if seed is None else seed)
    model, Tc = sc.chain, sc.T_c
    n_q = model.n_q
    q = np.array(sc.q0, dtype=float)

    p_hand0, Q_hand0, _ = kinematics(model, q)
    hs = sc.human
    pelvis0 = hs.pelvis if hs.pelvis is not None else comfortable_pelvis(p_hand0, hs.heading, hs.side, hs.geom)
    human = SyntheticHuman(pelvis=pelvis0, heading=hs.heading, side=hs.side, geom=hs.geom,
                           leg_offset=hs.leg_offset, leg_radius=hs.leg_radius)
    ctrl = FixtureController(sc.profiles["arm"], p_hand0, Q_hand0)
    mode = ModeState(a_th=sc.a_th)
    W_q = sc.ik.W_q_arm
    K_x_rate = sc.ik.K_x / Tc
    rep_cfg = sc.repulsion

    builder = TraceBuilder(trace_columns(n_q))
    prev_angles = prev_planes = None
    req_idx = 0
    v_hand = np.zeros(3)

    def _step(k, t):
        nonlocal prev_angles, prev_planes, req_idx, mode, W_q
        p_hand, Q_hand, J = kinematics(model, q)

        # human posture
        bend = float(sc.trunk_bend(t)) if sc.trunk_bend is not None else 0.0
        pelvis = pelvis0 + sc.pelvis_offset(t) if sc.pelvis_offset is not None else pelvis0
        kp, reach_clamped = synthesize_keypoints(human, p_hand, bend, pelvis)
        angles = compute_joint_angles(kp, prev_angles, prev_planes)
        try:
            prev_planes = compute_planes(kp, prev_planes)
        except ValueError:
            pass
        prev_angles = angles
        score = compute_score(angles, sc.thresholds)
        a = 1.0 if baseline else float(score.a)

        # mode requests
        requested = None
        while req_idx < len(sc.mode_requests) and sc.mode_requests[req_idx][0] <= t + 0.5 * Tc:
            requested = sc.mode_requests[req_idx][1]
            req_idx += 1
        mode, params, W_q, switched = mode_update(mode, requested, float(score.a), sc.profiles, sc.ik, baseline)
        if switched:
            ctrl.set_params(params)

        # human wrench
        if sc.hand_reference is not None:
            noise = rng.normal(0.0, sc.force_noise, 3) if sc.force_noise > 0 else None
            f_h = sc.force_model.force(p_hand0 + sc.hand_reference(t), p_hand, v_hand, noise)
        else:
            f_h = np.zeros(3)
        F = np.concatenate([f_h, np.zeros(3)])

        # admittance
        p_adm, Q_adm = ctrl.state.p.copy(), ctrl.state.Q.copy()
        v, diag = ctrl.tick(F, a)

        # whole-body IK with null-space repulsion
        x_e = pose_error(p_hand, Q_hand, p_adm, Q_adm)
        Jb = J @ base_velocity_map(q[2], model.n_arm)
        qdot_p, J_star = dls_solve(Jb, sc.ik.W_x, W_q, v, x_e, K_x_rate)
        capsule = Capsule2D.for_base(q[0], q[1], q[2], rep_cfg.L, rep_cfg.r_c)
        legs = _leg_cloud(human, pelvis, hs.leg_points)
        cloud = [legs] + [disc_points(o.center, o.radius, hs.leg_points) for o in sc.obstacles if o.active(t)]
        rep = repulsive_velocity(capsule, np.vstack(cloud), rep_cfg, q[:2], q[2])
        v_r = np.zeros(n_q)
        v_r[:2] = rep.v_xy
        qdot = null_space_command(qdot_p, J_star, Jb, v_r)
        if rep.v_xy.any():
            ns_twist = float(np.linalg.norm(Jb @ (qdot - qdot_p)))
            J_norm = float(np.linalg.norm(Jb, 2))
        else:
            ns_twist = J_norm = 0.0
        _, _, d_legs, valid = closest_batch(capsule, legs, rep_cfg.r_s)
        d = float(d_legs[valid].min()) if valid.any() else math.inf

        st, led = ctrl.state, ctrl.state.ledger
        row = [t, *q, *p_adm, *Q_adm, *st.p_g, *st.Q_g, *p_hand, *kp.wrist, *v, *F, *diag.u_c,
               a, score.a, score.a_a, score.a_f, score.a_r, score.a_e, score.a_b,
               *angles.as_array(), float(angles.degenerate), float(reach_clamped),
               diag.f, diag.d_vp, diag.d_vo, diag.d_fp, diag.d_fo, diag.p_e_norm, diag.Psi_e, diag.phi_n,
               led.V, led.V0, led.work_in, led.bound,
               MODES.index(mode.mode), float(mode.pending), float(switched),
               *rep.v_xy, d, float(rep.blocked), float(np.linalg.norm(x_e)), ns_twist, J_norm]
        builder.append(row)

        q_next, _ = integrate_joints(model, q, qdot, Tc)
        if not np.all(np.isfinite(q_next)):
            raise SimulationError(f"non-finite joint state at t={t:.6f} s", builder.build("diverged"))
        return q_next, (Jb @ qdot)[:3]

    for k in range(sc.n_ticks):
        t = k * Tc
        try:
            q, v_hand = _step(k, t)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SimulationError(f"t={t:.6f} s: {exc}", builder.build(str(exc))) from exc
    return builder.build()
