import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazehrl.events import (
    FIXATION,
    SACCADE,
    AoiHit,
    InsufficientSamples,
    aoi_hits,
    detect_events,
    events_to_csv,
    sample_velocities,
)
from gazehrl.ingest import GazeSample
from gazehrl.subgoals import BoxProposal, SubGoalSet
from oracles import interval_labels

DT = 10.0


def stream(points, dt=DT, t0=0.0):
    return [GazeSample(t0 + i * dt, x, y) for i, (x, y) in enumerate(points)]


def two_clusters(n=30):
    return stream([(20, 20)] * n + [(120, 150)] * n)


def test_stationary_samples_form_one_fixation():
    s = [GazeSample(i * 500 / 49, 33, 44) for i in range(50)]
    (ev,) = detect_events(s)
    assert ev.kind == FIXATION
    assert ev.duration == pytest.approx(500)
    assert (ev.centroid_x, ev.centroid_y) == (33, 44)


def test_two_clusters_with_sweep():
    s = two_clusters()
    ev = detect_events(s)
    assert [e.kind for e in ev] == [FIXATION, SACCADE, FIXATION]
    # brute-force per-interval classification agrees on the saccade position
    flags = interval_labels(s, 30.0, 10.0)
    i = flags.index(False)
    assert ev[1].t_start == s[i].t and ev[1].t_end == s[i + 1].t


def test_insufficient_samples():
    with pytest.raises(InsufficientSamples):
        detect_events([GazeSample(0, 1, 1)])


def test_velocity_units():
    # 10 px in 100 ms at 10 px/deg = 10 deg/s
    assert sample_velocities(stream([(0, 0), (10, 0)], dt=100), 10.0) == [10.0]


def test_short_fixation_absorbed_into_saccades():
    # far jumps around a 3-sample (20 ms) pause
    pts = [(0, 0)] * 20 + [(80, 0), (80, 0), (80, 0), (150, 100)] + [(150, 100)] * 20
    ev = detect_events(stream(pts))
    assert [e.kind for e in ev] == [FIXATION, SACCADE, FIXATION]


def test_invalid_parameters():
    with pytest.raises(ValueError):
        detect_events(two_clusters(), px_per_degree=0)


paths_st = st.lists(st.tuples(st.integers(0, 159), st.integers(0, 209), st.integers(1, 40)), min_size=2, max_size=15)


def expand(path):
    pts = []
    for x, y, n in path:
        pts += [(x, y)] * n
    return pts


@given(paths_st)
def test_events_tile_the_timeline(path):
    s = stream(expand(path))
    ev = detect_events(s)
    assert ev[0].t_start == s[0].t and ev[-1].t_end == s[-1].t
    for a, b in zip(ev, ev[1:]):
        assert a.t_end == b.t_start
        assert a.kind != b.kind


@given(paths_st)
def test_fixations_are_long_or_alone(path):
    ev = detect_events(stream(expand(path)))
    if any(e.kind == SACCADE for e in ev):
        assert all(e.duration >= 100 for e in ev if e.kind == FIXATION)


@given(paths_st, st.sampled_from([2.0, 3.0, 0.5]))
def test_scale_consistent(path, f):
    s = stream(expand(path))
    scaled = [GazeSample(g.t, g.x * f, g.y * f) for g in s]
    a = detect_events(s, px_per_degree=10.0)
    b = detect_events(scaled, px_per_degree=10.0 * f)
    assert [(e.kind, e.t_start, e.t_end) for e in a] == [(e.kind, e.t_start, e.t_end) for e in b]


AOIS = SubGoalSet((BoxProposal(0, 0, 50, 50, 0.5), BoxProposal(100, 100, 50, 50, 0.4), BoxProposal(10, 10, 50, 50, 0.9), BoxProposal(110, 140, 30, 30, 0.3)))


def test_aoi_hits_examples():
    ev = detect_events(stream([(20, 20)] * 30 + [(120, 145)] * 30))
    hits = aoi_hits(ev, AOIS)
    # (20, 20) lies in AOIs 0 and 2, (120, 145) in 1 and 3; higher score wins
    assert [h.aoi_id for h in hits] == [2, 1]
    # boxes are half-open, so y = 150 falls outside AOI 1
    assert [h.aoi_id for h in aoi_hits(detect_events(two_clusters()), AOIS)] == [2, 3]
    assert aoi_hits([e for e in ev if e.centroid_x > 200], AOIS) == []


def test_aoi_hit_in_single_box():
    ev = detect_events(stream([(120, 150)] * 20))
    assert aoi_hits(ev, SubGoalSet((BoxProposal(0, 0, 5, 5, 1), BoxProposal(0, 0, 5, 5, 1), BoxProposal(0, 0, 5, 5, 1), BoxProposal(110, 140, 30, 30, 0.3))))[0].aoi_id == 3


@given(paths_st)
def test_hits_inside_fixations(path):
    ev = detect_events(stream(expand(path)))
    for h in aoi_hits(ev, AOIS):
        assert h.t_end > h.t_start
        assert any(e.kind == FIXATION and e.t_start <= h.t_start and h.t_end <= e.t_end for e in ev)


def test_events_csv():
    text = events_to_csv(detect_events(two_clusters(3)))
    assert text.splitlines()[0] == "kind,t_start,t_end,cx,cy"
    assert AoiHit(1, 5, 8).duration == 3
