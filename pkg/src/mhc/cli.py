"""Unified command-line interface.

Subcommands: dataset, sim, reward, train, eval, plan, fsm, serve, convert.
All validation failures exit nonzero with a machine-parseable diagnostic of
the form ``error: <ExceptionType>: <message>``.  The environment variable
MHC_SEED overrides every seed argument and config seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import directives as dv
from . import evaluation as ev
from .convert import convert_modality
from .data.augment import AugmentSpec, build_mplus
from .data.dataset import MotionDataset
from .data.synthetic import CLIP_NAMES, make_clips
from .errors import MhcError
from .motion.clip import MotionClip
from .motion.skeleton import SkeletonSpec, sim13_skeleton
from .rewards import TrackingConfig, energy_cost, tracking_reward
from .simcore.config import SimConfig


def _seed_override(seed: int) -> int:
    env = os.environ.get("MHC_SEED", "").strip()
    return int(env) if env else seed


def _load_skeleton(path: str | None) -> SkeletonSpec:
    return SkeletonSpec.load(path) if path else sim13_skeleton()


def _load_controller(spec: str, skel: SkeletonSpec):
    if spec == "zero":
        return ev.ZeroController()
    if spec == "teleport":
        return ev.TeleportController()
    return ev.PolicyController.load(spec, skel)


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------


def cmd_dataset_synth(args) -> int:
    skel = _load_skeleton(args.skeleton)
    names = args.clips.split(",") if args.clips else list(CLIP_NAMES)
    ds = MotionDataset(clips=make_clips(skel, names, length=args.length), skeleton=skel)
    ds.save(args.out)
    print(f"wrote {len(ds.clips)} clips to {args.out}")
    return 0


def cmd_dataset_augment(args) -> int:
    ds = MotionDataset.load(getattr(args, "in"))
    spec = AugmentSpec.for_skeleton(ds.skeleton)
    mplus = build_mplus(ds, spec, n_combos=args.combos, seed=_seed_override(args.seed))
    mplus.save(args.out)
    print(f"wrote {len(mplus.clips)} clips ({args.combos} combined) to {args.out}")
    return 0


def cmd_dataset_validate(args) -> int:
    ds = MotionDataset.load(getattr(args, "in"))
    for clip in ds.clips:
        clip.validate()
    print(f"ok: {len(ds.clips)} clips, {ds.frame_count} frames")
    return 0


# ---------------------------------------------------------------------------
# sim / reward
# ---------------------------------------------------------------------------


def cmd_sim_rollout(args) -> int:
    skel = _load_skeleton(args.skeleton)
    directive = dv.load_directive(args.directive, skel.joint_count)
    controller = _load_controller(args.policy, skel)
    from .motion.pose import Pose, rest_pose

    if args.init == "directive":
        # rebuild kinematically: loaded directives zero-fill unselected channels
        t0 = directive.target_pose(0)
        initial = Pose.from_kinematics(
            skel, t0.root_pos, t0.root_rot6d, t0.lin_vel, t0.ang_vel, t0.joint_rot6d
        )
    else:
        initial = rest_pose(skel)
    clip = ev.rollout_directive(controller, skel, SimConfig(), directive, initial)
    clip.save(args.out)
    print(f"wrote {len(clip)} frames to {args.out}")
    return 0


def cmd_reward_eval(args) -> int:
    skel = _load_skeleton(args.skeleton)
    clip = MotionClip.load(args.pose, skel)
    directive = dv.load_directive(args.directive, skel.joint_count)
    cfg = TrackingConfig()
    rows = []
    t = min(len(clip), len(directive))
    for i in range(t):
        pose = clip.frame(i)
        target = directive.target_pose(i)
        r_h, r_o, r_v, r_l = tracking_reward(pose, target, directive.mask, cfg)
        rows.append((i, r_h, r_o, r_v, r_l, r_h + r_o + r_v + r_l))
    with open(args.csv, "w") as fh:
        fh.write("frame,r_h,r_o,r_v,r_l,r_tr\n")
        for row in rows:
            fh.write(",".join(f"{x:.10g}" for x in row) + "\n")
    print(f"wrote {t} rows to {args.csv}")
    return 0


# ---------------------------------------------------------------------------
# train / eval
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    from .learn.trainer import TrainConfig, train

    if args.config:
        cfg = TrainConfig.from_json_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = TrainConfig()
    env = os.environ.get("MHC_SEED", "").strip()
    if env:
        cfg = TrainConfig.from_json_dict({**cfg.to_json_dict(), "seed": int(env)})
    if args.dataset:
        ds = MotionDataset.load(args.dataset)
    else:
        skel = sim13_skeleton()
        ds = MotionDataset(clips=make_clips(skel, ("walk", "run", "wave", "idle")), skeleton=skel)
    result = train(ds, cfg, args.out)
    last = result.metrics[-1]
    print(f"trained {cfg.iterations} iterations; final r_tr={last['r_tr']:.4f} -> {result.out_dir}")
    return 0


def cmd_eval(args) -> int:
    ds = MotionDataset.load(args.dataset)
    controller = _load_controller(args.checkpoint, ds.skeleton)
    params = ev.ProtocolParams(n_episodes=args.episodes)
    reports = ev.run_protocol(
        args.protocol, controller, ds, params, seed=_seed_override(args.seed)
    )
    with open(args.csv, "w") as fh:
        fh.write("protocol,mask,episode,mpjpe_mm,fail_fraction,success,error\n")
        for report in reports:
            for row in report.rows():
                fh.write(
                    f"{row['protocol']},{row['mask']},{row['episode']},"
                    f"{row['mpjpe_mm']:.10g},{row['fail_fraction']:.10g},{row['success']},{row['error']}\n"
                )
    for report in reports:
        print(
            f"{report.protocol} [{report.mask_desc}] mpjpe={report.mean_mpjpe:.2f}mm "
            f"success={report.success_fraction:.2f} (budget {report.budget})"
        )
    return 0


# ---------------------------------------------------------------------------
# plan / fsm
# ---------------------------------------------------------------------------


def cmd_plan_collect(args) -> int:
    from .planning import CollectParams, GotoTask, collect_transitions_scripted, collect_transitions_sim, default_action_set
    from .planning.persist import save_transitions

    actions = default_action_set()
    task = GotoTask(goal=(args.goal_x, args.goal_y))
    params = CollectParams(episodes=args.episodes, steps_per_episode=args.steps, arena_radius=args.arena)
    seed = _seed_override(args.seed)
    if args.policy == "scripted":
        transitions = collect_transitions_scripted(actions, task, params, seed=seed)
    else:
        ds = MotionDataset.load(args.dataset)
        controller = _load_controller(args.policy, ds.skeleton)
        transitions = collect_transitions_sim(controller, ds, actions, task, params, seed=seed)
    if args.project_xy:
        from .planning import Transition

        transitions = [
            Transition(t.state[:2], t.action, t.reward, t.next_state[:2], t.terminal)
            for t in transitions
        ]
    save_transitions(args.out, transitions, meta={"goal": [args.goal_x, args.goal_y], "task": "goto"})
    print(f"wrote {len(transitions)} transitions to {args.out}")
    return 0


def cmd_plan_build(args) -> int:
    from .planning import build_dac_mdp
    from .planning.persist import load_transitions, save_mdp

    transitions, meta = load_transitions(args.transitions)
    reward_fn = None
    if args.negate:
        from .planning import GotoTask, task_reward

        goal = tuple(meta.get("goal", (0.0, 0.0)))

        def reward_fn(s, a, sn, _task=GotoTask(goal)):
            state = sn if len(sn) > 2 else np.array([sn[0], sn[1], 0, 0, 0, 0.85])
            return -task_reward(_task, state)

    mdp = build_dac_mdp(transitions, k=args.k, smoothing_cost=args.cost, gamma=args.gamma, reward_fn=reward_fn)
    save_mdp(args.out, mdp, meta=meta)
    print(f"built mdp over {mdp.n_states} states, {len(mdp.action_ids)} actions -> {args.out}")
    return 0


def cmd_plan_solve(args) -> int:
    from .planning import value_iteration
    from .planning.persist import load_mdp, save_mdp

    mdp, meta = load_mdp(getattr(args, "in"))
    values = value_iteration(mdp, tol=args.tol, max_iters=args.max_iters)
    save_mdp(args.out, mdp, meta=meta)
    print(f"solved in {len(mdp.residuals)} sweeps; mean value {np.mean(values):.4f} -> {args.out}")
    return 0


def cmd_plan_rollout(args) -> int:
    from .planning import default_action_set, greedy_policy
    from .planning.collect import ScriptedRootActor
    from .planning.persist import load_mdp

    mdp, meta = load_mdp(args.mdp)
    if mdp.values is None:
        raise MhcError("mdp is unsolved; run `mhc plan solve` first")
    goal = meta.get("goal", [0.0, 0.0])
    actions = {a.id: a for a in default_action_set()}
    rng = np.random.default_rng(_seed_override(args.seed))
    actor = ScriptedRootActor(
        (goal[0] + rng.uniform(-5, 5), goal[1] + rng.uniform(-5, 5)), 0.0, arena_radius=8.0
    )
    rows = []
    for step_i in range(args.steps):
        state = actor.abstract(goal)
        query = state[:2] if mdp.states.shape[1] == 2 else state
        action = actions[greedy_policy(mdp, mdp.values, query)]
        for _ in range(30):
            actor.step(action)
        rows.append((step_i, float(np.hypot(*actor.abstract(goal)[:2])), action.id, action.describe()))
    with open(args.out, "w") as fh:
        fh.write("step,goal_dist,action_id,action\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]:.10g},{r[2]},{r[3]}\n")
    print(f"rollout: final goal distance {rows[-1][1]:.2f} m -> {args.out}")
    return 0


def cmd_fsm_run(args) -> int:
    from .planning import FsmRuntime, FsmSpec, fsm_step, goto_fsm
    from .planning.collect import ScriptedRootActor
    from .planning.actions import DirectiveAction

    fsm = FsmSpec.load(args.fsm) if args.fsm else goto_fsm()
    goal = (args.goal_x, args.goal_y)
    actor = ScriptedRootActor((args.start_x, args.start_y), 0.0, arena_radius=10.0)
    runtime = FsmRuntime(state=fsm.start)
    rows = []
    for step_i in range(args.steps):
        rel = np.array([goal[0] - actor.pos[0], goal[1] - actor.pos[1]])
        ctx = {
            "goal_dist": float(np.linalg.norm(rel)),
            "goal_heading": float(np.arctan2(rel[1], rel[0])),
            "fallen": False,
            "time_in_state": runtime.time_in_state(),
        }
        emission, runtime = fsm_step(fsm, runtime, ctx)
        if emission["type"] == "joystick":
            action = DirectiveAction(
                id=-1, kind="joystick", speed=float(emission["speed"]),
                heading=float(emission["heading"]), facing=float(emission["facing"]),
                height=float(emission["height"]),
            )
        else:
            action = DirectiveAction(id=-1, kind="clip", clip_name=emission["name"])
        actor.step(action)
        rows.append((step_i, runtime.state, ctx["goal_dist"]))
    with open(args.out, "w") as fh:
        fh.write("step,state,goal_dist\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]},{r[2]:.10g}\n")
    print(f"fsm finished in state {rows[-1][1]} at distance {rows[-1][2]:.2f} m -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# serve / convert
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    from .server import SessionConfig, serve_session

    skel = _load_skeleton(args.skeleton)
    controller = _load_controller(args.checkpoint, skel)
    ensemble = None
    if args.checkpoint not in ("zero", "teleport"):
        try:
            from . import checkpoint as ckpt
            from .adversary import DiscriminatorEnsemble, StyleFeatures

            tree, meta = ckpt.load_tree(args.checkpoint)
            feats = StyleFeatures(skel)
            hidden = tuple(meta["config"]["disc_hidden"])
            from .learn.nets import MlpSpec

            ensemble = DiscriminatorEnsemble(
                features=feats,
                spec=MlpSpec(feats.window_dim, hidden, 1, head="logit"),
                params=tree["disc"],
            )
        except (KeyError, MhcError):
            ensemble = None
    print(f"serving on {args.host}:{args.port} (realtime={not args.no_realtime})")
    serve_session(
        controller,
        skel,
        SessionConfig(),
        host=args.host,
        port=args.port,
        realtime=not args.no_realtime,
        transport=args.transport,
        ensemble=ensemble,
        max_ticks=args.max_ticks,
    )
    return 0


def cmd_convert(args) -> int:
    skel = _load_skeleton(args.skeleton)
    occlusion = args.visible.split(",") if args.visible else None
    directive = convert_modality(getattr(args, "in"), skel, occlusion=occlusion)
    dv.save_directive(directive, args.out)
    print(f"wrote directive [{directive.mask.describe()}] with {len(directive)} frames to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    ds = sub.add_parser("dataset", help="synthesize, augment or validate datasets")
    dsub = ds.add_subparsers(dest="subcommand", required=True)
    synth = dsub.add_parser("synth")
    synth.add_argument("--out", required=True)
    synth.add_argument("--skeleton")
    synth.add_argument("--clips")
    synth.add_argument("--length", type=int, default=300)
    synth.set_defaults(func=cmd_dataset_synth)
    aug = dsub.add_parser("augment")
    aug.add_argument("--in", required=True)
    aug.add_argument("--out", required=True)
    aug.add_argument("--combos", type=int, default=6)
    aug.add_argument("--seed", type=int, default=0)
    aug.set_defaults(func=cmd_dataset_augment)
    val = dsub.add_parser("validate")
    val.add_argument("--in", required=True)
    val.set_defaults(func=cmd_dataset_validate)

    sim = sub.add_parser("sim", help="simulator rollouts")
    ssub = sim.add_subparsers(dest="subcommand", required=True)
    roll = ssub.add_parser("rollout")
    roll.add_argument("--skeleton")
    roll.add_argument("--directive", required=True)
    roll.add_argument("--policy", default="zero")
    roll.add_argument("--out", required=True)
    roll.add_argument("--init", choices=("directive", "rest"), default="directive")
    roll.set_defaults(func=cmd_sim_rollout)

    rew = sub.add_parser("reward", help="reward evaluation")
    rsub = rew.add_subparsers(dest="subcommand", required=True)
    reval = rsub.add_parser("eval")
    reval.add_argument("--pose", required=True)
    reval.add_argument("--directive", required=True)
    reval.add_argument("--csv", required=True)
    reval.add_argument("--skeleton")
    reval.set_defaults(func=cmd_reward_eval)

    tr = sub.add_parser("train", help="train a controller")
    tr.add_argument("--config")
    tr.add_argument("--dataset")
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_train)

    evp = sub.add_parser("eval", help="run an evaluation protocol")
    evp.add_argument("protocol", choices=ev.PROTOCOLS)
    evp.add_argument("--checkpoint", required=True)
    evp.add_argument("--dataset", required=True)
    evp.add_argument("--seed", type=int, default=0)
    evp.add_argument("--csv", required=True)
    evp.add_argument("--episodes", type=int, default=20)
    evp.set_defaults(func=cmd_eval)

    plan = sub.add_parser("plan", help="data-driven planning")
    psub = plan.add_subparsers(dest="subcommand", required=True)
    pc = psub.add_parser("collect")
    pc.add_argument("--policy", default="scripted")
    pc.add_argument("--dataset")
    pc.add_argument("--episodes", type=int, default=150)
    pc.add_argument("--steps", type=int, default=600)
    pc.add_argument("--arena", type=float, default=6.0)
    pc.add_argument("--goal-x", type=float, default=0.0)
    pc.add_argument("--goal-y", type=float, default=0.0)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--project-xy", action="store_true", help="store goal-relative xy only")
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_plan_collect)
    pb = psub.add_parser("build")
    pb.add_argument("--transitions", required=True)
    pb.add_argument("--k", type=int, default=5)
    pb.add_argument("--cost", type=float, default=1.0)
    pb.add_argument("--gamma", type=float, default=0.99)
    pb.add_argument("--negate", action="store_true")
    pb.add_argument("--out", required=True)
    pb.set_defaults(func=cmd_plan_build)
    ps = psub.add_parser("solve")
    ps.add_argument("--in", required=True)
    ps.add_argument("--tol", type=float, default=1e-8)
    ps.add_argument("--max-iters", type=int, default=20000)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_plan_solve)
    pr = psub.add_parser("rollout")
    pr.add_argument("--mdp", required=True)
    pr.add_argument("--steps", type=int, default=20)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_plan_rollout)

    fsm = sub.add_parser("fsm", help="run a finite state machine")
    fsub = fsm.add_subparsers(dest="subcommand", required=True)
    frun = fsub.add_parser("run")
    frun.add_argument("--fsm")
    frun.add_argument("--goal-x", type=float, default=0.0)
    frun.add_argument("--goal-y", type=float, default=0.0)
    frun.add_argument("--start-x", type=float, default=4.0)
    frun.add_argument("--start-y", type=float, default=0.0)
    frun.add_argument("--steps", type=int, default=300)
    frun.add_argument("--out", required=True)
    frun.set_defaults(func=cmd_fsm_run)

    srv = sub.add_parser("serve", help="live steering session server")
    srv.add_argument("--checkpoint", default="zero")
    srv.add_argument("--skeleton")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=7731)
    srv.add_argument("--no-realtime", action="store_true")
    srv.add_argument("--transport", choices=("tcp", "ws"), default="tcp")
    srv.add_argument("--max-ticks", type=int)
    srv.set_defaults(func=cmd_serve)

    conv = sub.add_parser("convert", help="convert modality files to directives")
    conv.add_argument("--in", required=True)
    conv.add_argument("--out", required=True)
    conv.add_argument("--skeleton")
    conv.add_argument("--visible", help="comma-separated visible joint names (occlusion spec)")
    conv.set_defaults(func=cmd_convert)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MhcError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
