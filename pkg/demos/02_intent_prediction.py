"""Predicting the next sub-goal from gaze features.

Builds one sample per plan step from the synthetic episodes (gaze since the
previous sub-goal, labelled with the goal reached next), then contrasts a
separable feature set with the same set under shuffled labels.

    python demos/02_intent_prediction.py
"""
import numpy as np

from gazehrl import intent
from gazehrl.saliency import saliency_map, threshold_mask
from gazehrl.subgoals import extract_subgoals, majority_vote, match_trajectory, merge_across_episodes
from gazehrl.synthetic import make_dataset, separable_features

ds = make_dataset()
goals = merge_across_episodes([extract_subgoals(threshold_mask(saliency_map(log), 0.4)) for log in ds.logs], 0.3)
plan = list(majority_vote([match_trajectory(log, goals) for log in ds.logs]).steps)
samples = [s for log in ds.logs for s in intent.build_samples(log, goals, plan)]
print(f"{len(samples)} samples, {len(samples[0].features)} features each (4 per AOI)")

first = samples[0].features.reshape(-1, 4)
print("first sample, AOIs with any gaze (duration ms, recent, glances, first glance ms):")
for a, row in enumerate(first):
    if row.any():
        print(f"  AOI {a:2d}: {row[0]:7.1f} {row[1]:.0f} {row[2]:.0f} {row[3]:7.1f}")
print(f"label: {samples[0].label}")

res = intent.cross_validate(samples, k=5, seed=0)
print(f"\nsynthetic episodes, 5-fold CV accuracy: {res.mean:.3f}")

X, y = separable_features(n_per_class=50)
sep = intent.cross_validate(X, y, k=10)
rnd = intent.cross_validate(X, np.random.default_rng(0).permutation(y), k=10)
print(f"separable set, 10-fold CV:     {sep.mean:.3f}")
print(f"shuffled labels, 10-fold CV:   {rnd.mean:.3f} (chance is {1 / 7:.3f})")
