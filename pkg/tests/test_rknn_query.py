import numpy as np
import pytest

from conftest import random_points, random_trajectories
from kinetic_rknn.errors import InvalidParameterError, TimeTravelError
from kinetic_rknn.kinetic_engine import initialize
from kinetic_rknn.ksyg_knn import all_knn, build_ksyg
from kinetic_rknn.oracle import brute_rknn
from kinetic_rknn.range_tree import build_range_tree
from kinetic_rknn.rknn_query import rknn_kinetic, rknn_static
from kinetic_rknn.trajectories import Trajectory


def _static_setup(family, pts, k):
    indexed = list(enumerate(pts))
    trees = [build_range_tree(indexed, family, l) for l in range(family.cone_count)]
    table = all_knn(build_ksyg(pts, k, family, trees=trees), pts, k)
    return trees, table


def test_two_point_definition(family2):
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    trees, table = _static_setup(family2, pts, 1)
    ans = rknn_static(pts, table, trees, np.array([-0.5, 0.0]), 1)
    assert ans.members == (0,)
    far = rknn_static(pts, table, trees, np.array([40.0, -3.0]), 1)
    assert far.members == ()


def test_boundary_equality_is_a_member(family2):
    # |pq| exactly equal to the k-th neighbor distance counts as a member
    pts = np.array([[0.0, 0.0], [2.0, 0.0]])
    trees, table = _static_setup(family2, pts, 1)
    ans = rknn_static(pts, table, trees, np.array([-2.0, 0.0]), 1)
    assert ans.members == (0,)


def test_coincident_query_is_flagged(family2):
    rng = np.random.default_rng(0)
    pts = random_points(rng, 12, 2)
    trees, table = _static_setup(family2, pts, 2)
    ans = rknn_static(pts, table, trees, pts[4].copy(), 2)
    assert ans.coincident
    assert 4 in ans.members  # distance zero always passes the filter


def test_static_matches_brute(family2, family3):
    rng = np.random.default_rng(1)
    for family in (family2, family3):
        d = family.dimension
        n, k = 36, 3
        pts = random_points(rng, n, d)
        trees, table = _static_setup(family, pts, k)
        for _ in range(25):
            q = rng.uniform(-1.5, 1.5, size=d)
            ans = rknn_static(pts, table, trees, q, k)
            ref = brute_rknn(pts, q, k)
            assert ans.members == ref.members
            assert len(ans.members) <= ans.candidates_examined
            assert ans.candidates_examined <= family.cone_count * k


def test_candidate_sufficiency(family2):
    # every definitional member is generated as a per-cone first-k candidate
    from kinetic_rknn.range_tree import first_k

    rng = np.random.default_rng(6)
    pts = random_points(rng, 48, 2)
    k = 4
    trees, _table = _static_setup(family2, pts, k)
    for _ in range(40):
        q = rng.uniform(-1.5, 1.5, size=2)
        candidates = set()
        for tree in trees:
            candidates.update(first_k(tree, q, k).point_ids)
        ref = brute_rknn(pts, q, k)
        assert set(ref.members) <= candidates


def test_static_and_kinetic_agree_for_stationary_points(family2):
    rng = np.random.default_rng(2)
    pts = random_points(rng, 20, 2)
    trajs = [Trajectory.make(i, [[float(c)] for c in pts[i]]) for i in range(20)]
    k = 2
    trees, table = _static_setup(family2, pts, k)
    state = initialize(trajs, k, family2, 0.0)
    for t in (0.0, 1.5, 7.25):
        for _ in range(10):
            q = rng.uniform(-1.5, 1.5, size=2)
            a = rknn_static(pts, table, trees, q, k, time=t)
            b = rknn_kinetic(state, q, k, t)
            assert a.members == b.members


def test_kinetic_membership_flip_at_crossing(family2):
    # two points on a line trade roles as q's reverse neighbor at midpoint
    trajs = [
        Trajectory.make(0, [[0.0, 1.0], [0.0]]),   # x = t
        Trajectory.make(1, [[1.0, -1.0], [0.02]]), # x = 1 - t
    ]
    state = initialize(trajs, 1, family2, 0.0)
    q = np.array([-0.25, 0.0])
    # before the crossing each point's nearest is the other; q is closer to
    # point 0 than their separation only after they approach
    early = rknn_kinetic(state, q, 1, 0.1)
    late = rknn_kinetic(state, q, 1, 0.9)
    ref_early = brute_rknn(np.array([tr.position(0.1) for tr in trajs]), q, 1)
    ref_late = brute_rknn(np.array([tr.position(0.9) for tr in trajs]), q, 1)
    assert early.members == ref_early.members
    assert late.members == ref_late.members
    assert early.members != late.members


def test_kinetic_random_agrees_with_brute(family2):
    rng = np.random.default_rng(3)
    trajs = random_trajectories(rng, 24, 2, 2)
    state = initialize(trajs, 3, family2, 0.0)
    for t in np.linspace(0.0, 1.0, 8):
        state.advance(float(t))
        pts = state.current_positions()
        for _ in range(6):
            q = rng.uniform(-1.5, 1.5, size=2)
            ans = rknn_kinetic(state, q, 3, float(t))
            assert ans.members == brute_rknn(pts, q, 3).members


def test_time_travel_and_k_mismatch(family2):
    rng = np.random.default_rng(4)
    trajs = random_trajectories(rng, 8, 2, 1)
    state = initialize(trajs, 2, family2, 0.0)
    rknn_kinetic(state, np.zeros(2), 2, 0.5)
    with pytest.raises(TimeTravelError):
        rknn_kinetic(state, np.zeros(2), 2, 0.2)
    with pytest.raises(InvalidParameterError):
        rknn_kinetic(state, np.zeros(2), 3, 0.7)
