"""From raw gaze logs to an ordered sub-goal plan.

Generates the bundled synthetic episodes, builds one saliency map per
episode, turns the hot spots into agent-sized boxes, merges them across
episodes and votes on the order in which the player visited them.

    python demos/01_subgoals_from_gaze.py
"""
from gazehrl.events import FIXATION, detect_events
from gazehrl.saliency import saliency_map, threshold_mask
from gazehrl.subgoals import extract_subgoals, majority_vote, match_trajectory, merge_across_episodes
from gazehrl.synthetic import make_dataset

ds = make_dataset(seed=0)
print(f"{len(ds.logs)} episodes; episode {ds.corrupted} carries a scripted labelling glitch\n")

log = ds.logs[0]
events = detect_events(log.gaze_samples())
fix = [e for e in events if e.kind == FIXATION]
print(f"episode 0: {len(log.frames)} frames, {len(events)} gaze events, {len(fix)} fixations")

per_episode = []
for log in ds.logs:
    smap = saliency_map(log)
    mask = threshold_mask(smap, 0.4)
    boxes = extract_subgoals(mask)
    per_episode.append(boxes)
    print(f"  {log.episode_id}: {len(mask)} salient pixels -> {len(boxes)} boxes")

goals = merge_across_episodes(per_episode, 0.3)
print(f"\nmerged proposals: {len(goals)}")
for i, b in enumerate(goals):
    print(f"  id {i:2d}: x={b.x:3d} y={b.y:3d} w={b.w:2d} h={b.h:2d} score={b.score:.2f}")

orders = [match_trajectory(log, goals) for log in ds.logs]
for log, order in zip(ds.logs, orders):
    print(f"visit order {log.episode_id}: {order}")
plan = majority_vote(orders)
print(f"\nvoted plan ({len(plan.steps)} steps): {list(plan.steps)}")
print(f"unique sub-goals on the plan: {len(plan.unique_goals)}")
print(f"proposals never visited (gaze distractors): {sorted(set(range(len(goals))) - set(plan.unique_goals))}")
