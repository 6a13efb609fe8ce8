import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazehrl.env import CellGoal, RoomEnv, load_layout, load_room1, room1_goals, room1_plan
from gazehrl.hrl import (
    VARIANTS,
    HierarchicalTrainer,
    MetaPolicy,
    TrainStats,
    UnknownVariant,
    meta_dagger,
    rollout_plan,
    run_experiment,
    train_low_level,
    trailing_performance,
)
from gazehrl.qlearning import QTable

CORRIDOR = "..........\nA........D\n##########"


def corridor():
    env = RoomEnv(load_layout(CORRIDOR))
    goals = [CellGoal(1, 1, 1, 1), CellGoal(4, 1, 4, 1), CellGoal(7, 1, 7, 1)]
    return env, goals, [0, 1, 2]


def test_trailing_examples():
    assert trailing_performance([True] * 100)[-1] == 1.0
    assert trailing_performance([True] * 90 + [False] * 10, 100)[-1] == pytest.approx(0.9)
    assert trailing_performance([]) == []
    assert trailing_performance([False, True, True], 2) == [0.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        trailing_performance([True], 0)


@given(st.lists(st.booleans(), max_size=300), st.integers(1, 120))
def test_trailing_matches_direct_count(outcomes, w):
    series = trailing_performance(outcomes, w)
    for i, r in enumerate(series):
        win = outcomes[max(0, i + 1 - w) : i + 1]
        assert r == sum(win) / len(win)
        assert 0.0 <= r <= 1.0


def test_peak_trailing_full_window():
    st_ = TrainStats(1, trailing=[(i, 0, 1.0 if i < 5 else 0.5) for i in range(10)])
    assert st_.peak_trailing(0, window=5) == 1.0  # fifth entry is the first full window
    assert st_.peak_trailing(0, window=6) == 0.5
    assert st_.peak_trailing(0, window=20) == 0.0
    assert st_.peak_trailing(0, window=20, full_window=False) == 1.0


def test_low_level_adjacent_goal_learns_fast():
    env, goals, plan = corridor()
    _, stats = train_low_level(env, 0, plan, goals, budget=10_000, seed=0)
    assert stats.learned_at[0] is not None and stats.learned_at[0] <= 10_000


def test_low_level_budget_zero():
    env, goals, plan = corridor()
    _, stats = train_low_level(env, 0, plan, goals, budget=0)
    assert stats.status == "budget_exhausted" and stats.trailing == [] and stats.total_steps == 0


def test_low_level_deterministic():
    env, goals, plan = corridor()
    a = train_low_level(env, 1, plan, goals, budget=20_000, seed=3)[1]
    b = train_low_level(env, 1, plan, goals, budget=20_000, seed=3)[1]
    assert a == b


def test_room1_first_step_learned_quickly():
    env = RoomEnv(load_room1())
    _, stats = train_low_level(env, 0, room1_plan(), room1_goals(), budget=30_000, seed=0)
    assert stats.learned_at[0] is not None


def test_meta_expert_iteration_follows_plan():
    env, goals, plan = corridor()
    meta = meta_dagger(env, plan, goals, [QTable() for _ in plan], iterations=1)
    assert [y for _, y in meta.dataset] == plan[:1]


def test_meta_with_perfect_agents():
    env, goals, plan = corridor()
    trainer = HierarchicalTrainer(env, goals, plan, seed=0)
    trainer.train(50_000)
    meta = meta_dagger(env, plan, goals, trainer.agents, iterations=1)
    assert [y for _, y in meta.dataset] == plan
    before = dict(meta.table)
    n = len(meta.dataset)
    meta_dagger(env, plan, goals, trainer.agents, iterations=2, meta=meta)
    assert len(meta.dataset) > n and meta.table == before
    assert rollout_plan(env, plan, goals, trainer.agents, meta) == plan


def test_wrong_meta_choice_ends_episode_without_low_level_steps():
    env, goals, plan = corridor()
    meta = MetaPolicy()
    meta.aggregate((-1, False), 2)
    meta.fit()
    trainer = HierarchicalTrainer(env, goals, plan, meta=meta)
    assert trainer.episode(budget=1000) == 0
    assert trainer.stats.total_steps == 0 and trainer.wrong_choices == 1
    # the expert label was still aggregated
    assert ((-1, False), 0) in meta.dataset


def test_meta_policy_majority_and_default():
    m = MetaPolicy()
    for s, y in [((0, False), 1), ((0, False), 2), ((0, False), 1), ((1, True), 3)]:
        m.aggregate(s, y)
    m.fit()
    assert m.predict((0, False)) == 1
    assert m.predict((5, True)) == 1
    assert MetaPolicy().predict((0, False)) is None


def test_unknown_variant():
    env, goals, plan = corridor()
    with pytest.raises(UnknownVariant):
        run_experiment("bogus", env, goals, plan, 100)
    with pytest.raises(ValueError):
        run_experiment("fullmodel", env, goals, plan, 0)


def test_variant_weights():
    assert (VARIANTS["fullmodel"].alpha, VARIANTS["fullmodel"].beta, VARIANTS["fullmodel"].gamma) == (0, 0, 0)
    assert VARIANTS["singlegoal"].gamma == 1 and VARIANTS["singledist"].beta == 1 and VARIANTS["singledir"].alpha == 1


@pytest.mark.parametrize("variant", list(VARIANTS))
def test_variants_run_and_are_deterministic(variant):
    env, goals, plan = corridor()
    a = run_experiment(variant, env, goals, plan, 5_000, seed=1)
    b = run_experiment(variant, env, goals, plan, 5_000, seed=1)
    assert a == b and a.variant == variant
    assert a.total_steps <= 5_000
    assert all(0 <= r <= 1 for _, _, r in a.trailing)
