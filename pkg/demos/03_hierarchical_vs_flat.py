"""Hierarchical sub-goal agents against flat baselines in the room replica.

Trains the hierarchical model and the three flat variants for one seed under
the same env-step budget and prints, for every plan step, the step count at
which its trailing success rate first exceeded 0.9.  Takes about a minute.

    python demos/03_hierarchical_vs_flat.py [budget] [seed]
"""
import sys

from gazehrl.env import RoomEnv, expert_rollout, load_room1, room1_goals, room1_plan
from gazehrl.hrl import VARIANTS, run_experiment

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 300_000
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0

layout = load_room1()
env, goals, plan = RoomEnv(layout), room1_goals(layout), room1_plan()
print(layout.render(env.reset()))
_, actions, marks = expert_rollout(env, goals, plan)
print(f"\nplan {plan}: the shortest expert route takes {len(actions)} actions")
print(f"expert completes the plan steps after actions {marks}\n")

results = {v: run_experiment(v, env, goals, plan, budget, seed=seed) for v in VARIANTS}
print("plan step  goal  " + "  ".join(f"{v:>10}" for v in results))
for k, g in enumerate(plan):
    cells = [str(s.learned_at[k]) if s.learned_at[k] is not None else "-" for s in results.values()]
    print(f"{k:9d}  {g:4d}  " + "  ".join(f"{c:>10}" for c in cells))
print("\nsteps learned: " + ", ".join(f"{v} {s.progress}/{len(plan)}" for v, s in results.items()))
