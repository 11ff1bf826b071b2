import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plcerf.homology import boundary_matrix, euler_characteristic, rank_mod_p, reduced_betti
from plcerf.mesh import GridSpec, MeshError, closure, grid_complex


def test_empty():
    assert reduced_betti([], 2) == [1, 0, 0]
    assert euler_characteristic([]) == 0


def test_two_points():
    assert reduced_betti([(0,), (5,)], 2) == [0, 1, 0]


def test_circle():
    hexagon = closure([(i, (i + 1) % 6) for i in range(6)])
    assert reduced_betti(hexagon, 2) == [0, 0, 1]


def test_triangle_and_torus(torus3):
    assert euler_characteristic(closure([(0, 1, 2)])) == 1
    assert reduced_betti(closure([(0, 1, 2)]), 3) == [0, 0, 0, 0]
    assert euler_characteristic(torus3) == 0
    # over F_2 and F_3 the torus has H1 of rank 2, H2 of rank 1
    for p in (2, 3):
        assert reduced_betti(torus3, 3, p) == [0, 0, 2, 1]


def test_sphere(sphere):
    assert reduced_betti(sphere, 3) == [0, 0, 0, 1]


def test_not_face_closed():
    with pytest.raises(MeshError):
        reduced_betti([(0, 1)], 2)


def test_boundary_squares_to_zero():
    tris = sorted(closure([(0, 1, 2, 3)]))
    by = {k: [s for s in tris if len(s) == k + 1] for k in range(4)}
    for k in (1, 2):
        d1 = boundary_matrix(by[k - 1], by[k], p=7)
        d2 = boundary_matrix(by[k], by[k + 1], p=7)
        assert not np.any((d1 @ d2) % 7)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=5, max_size=5), min_size=4, max_size=4))
def test_rank_matches_float_rank_over_f2_of_small_full_rank(rows):
    # rank mod 2 never exceeds the rational rank
    m = np.array(rows)
    assert rank_mod_p(m, 2) <= np.linalg.matrix_rank(m)


@settings(max_examples=30, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6)),
               max_size=8))
def test_euler_poincare(tris):
    tris = [t for t in tris if len(set(t)) == 3]
    c = closure(tris)
    b = reduced_betti(c, 3)
    chi = euler_characteristic(c)
    # reduced Euler characteristic: chi - 1 = sum_k (-1)^k dim H~_k
    assert chi - 1 == sum((-1) ** (i - 1) * x for i, x in enumerate(b))


@pytest.mark.parametrize("periodic", [(False, False), (True, False), (True, True)])
def test_grid_homology(periodic):
    c = grid_complex(GridSpec((4, 3), periodic))
    b = reduced_betti(c, 3)
    assert b[1] == 0 and b[2] == sum(periodic) and b[3] == int(all(periodic))
