from .actions import DirectiveAction, action_directive, default_action_set, joystick_directive
from .collect import CollectParams, ScriptedRootActor, collect_transitions_scripted, collect_transitions_sim
from .dacmdp import DacMdp, Transition, build_dac_mdp, greedy_policy, value_iteration
from .fsm import FsmRuntime, FsmSpec, FsmState, FsmTransition, fsm_step, goto_fsm, resolve_emission
from .tasks import GotoTask, HeadingTask, abstract_state, goal_distance, task_reward

__all__ = [
    "DirectiveAction",
    "action_directive",
    "default_action_set",
    "joystick_directive",
    "CollectParams",
    "ScriptedRootActor",
    "collect_transitions_scripted",
    "collect_transitions_sim",
    "DacMdp",
    "Transition",
    "build_dac_mdp",
    "greedy_policy",
    "value_iteration",
    "FsmRuntime",
    "FsmSpec",
    "FsmState",
    "FsmTransition",
    "fsm_step",
    "goto_fsm",
    "resolve_emission",
    "GotoTask",
    "HeadingTask",
    "abstract_state",
    "goal_distance",
    "task_reward",
]
