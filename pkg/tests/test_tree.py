import itertools
import json

import numpy as np
import pytest

from treetoeplitz.errors import BudgetError, ValidationError
from treetoeplitz.tree import (
    Ball,
    ball_size,
    bfs_distances,
    enumerate_ball,
    geodesic_ray,
    pairwise_distances,
    relabel_branches,
    sphere_size,
    tree_distance,
    validate_word,
)


def test_sphere_sizes():
    assert sphere_size(2, 0) == 1
    assert sphere_size(2, 1) == 3
    assert sphere_size(3, 2) == 12
    assert sphere_size(1, 5) == 2


def test_ball_counts_match_sphere_sums():
    for kappa in (1, 2, 3, 4):
        for radius in range(0, 9):
            if ball_size(kappa, radius) > 100_000:
                continue
            ball = enumerate_ball(kappa, radius)
            assert len(ball) == 1 + sum(
                sphere_size(kappa, l) for l in range(1, radius + 1)
            )


def test_small_ball_examples():
    assert len(enumerate_ball(2, 0)) == 1
    assert len(enumerate_ball(2, 2)) == 10
    assert len(enumerate_ball(1, 3)) == 7  # kappa=1 tree is the integer line


def test_canonical_order_deterministic():
    a = enumerate_ball(3, 3)
    b = enumerate_ball(3, 3)
    assert a.vertices == b.vertices
    depths = [len(w) for w in a.vertices]
    assert depths == sorted(depths)
    for d in set(depths):
        layer = [w for w in a.vertices if len(w) == d]
        assert layer == sorted(layer)


def test_budget_guard():
    with pytest.raises(BudgetError):
        enumerate_ball(2, 30)
    with pytest.raises(BudgetError):
        enumerate_ball(2, 5, budget=10)


def test_word_validation():
    assert validate_word(2, (2, 1, 0)) == (2, 1, 0)
    with pytest.raises(ValidationError):
        validate_word(2, (3,))  # first letter range is 0..kappa
    with pytest.raises(ValidationError):
        validate_word(2, (0, 2))  # later letters range is 0..kappa-1


def test_distance_examples():
    assert tree_distance((), ()) == 0
    assert tree_distance((0,), (1,)) == 2
    assert tree_distance((0, 1), (0,)) == 1


def test_distance_is_metric_small_balls():
    for kappa in (1, 2, 3):
        ball = enumerate_ball(kappa, 3)
        if len(ball) > 200:
            ball = enumerate_ball(kappa, 2)
        vs = ball.vertices
        for u, v in itertools.combinations_with_replacement(vs, 2):
            d = tree_distance(u, v)
            assert d == tree_distance(v, u)
            assert (d == 0) == (u == v)
        for u, v, w in itertools.islice(itertools.product(vs, vs, vs), 0, None, 7):
            assert tree_distance(u, w) <= tree_distance(u, v) + tree_distance(v, w)


@pytest.mark.parametrize("kappa,radius", [(1, 4), (2, 3), (3, 2)])
def test_distance_matches_bfs(kappa, radius):
    ball = enumerate_ball(kappa, radius)
    for src in range(len(ball)):
        via_bfs = bfs_distances(ball, src)
        via_words = [
            tree_distance(ball.vertices[src], w) for w in ball.vertices
        ]
        assert list(via_bfs) == via_words


def test_pairwise_distances_matches_scalar():
    ball = enumerate_ball(2, 4)
    D = pairwise_distances(ball)
    rng = np.random.default_rng(7)
    for _ in range(300):
        i, j = rng.integers(0, len(ball), size=2)
        assert D[i, j] == tree_distance(ball.vertices[i], ball.vertices[j])
    assert (D == D.T).all()
    assert (D.diagonal() == 0).all()


def test_geodesic_ray():
    assert geodesic_ray(2, 0) == [()]
    assert geodesic_ray(2, 2) == [(), (0,), (0, 0)]
    ray = geodesic_ray(3, 6)
    for k, m in itertools.combinations(range(7), 2):
        assert tree_distance(ray[k], ray[m]) == abs(k - m)


def test_relabeling_preserves_distances():
    ball = enumerate_ball(2, 3)
    D = pairwise_distances(ball)
    for root_perm, child_perm in [((1, 0, 2), (1, 0)), ((2, 1, 0), (0, 1))]:
        perm = np.array(relabel_branches(ball, root_perm, child_perm))
        assert sorted(perm) == list(range(len(ball)))
        assert (D[np.ix_(perm, perm)] == D).all()


def test_ball_json_roundtrip():
    ball = enumerate_ball(2, 2)
    obj = json.loads(ball.to_json())
    assert obj["kappa"] == 2 and obj["radius"] == 2
    assert obj["vertices"][0] == []
    back = Ball.from_json(ball.to_json())
    assert back.vertices == ball.vertices


def test_sphere_indices_and_index_of():
    ball = enumerate_ball(2, 2)
    assert ball.index_of(()) == 0
    s1 = ball.sphere_indices(1)
    assert len(s1) == 3
    assert all(len(ball.vertices[i]) == 1 for i in s1)
