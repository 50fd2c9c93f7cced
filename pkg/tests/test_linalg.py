import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from sympy import GF
from sympy.polys.matrices import DomainMatrix

from pquot import linalg


@st.composite
def matrices(draw):
    p = draw(st.sampled_from([2, 3, 5, 7, 11]))
    rows, cols = draw(st.integers(1, 6)), draw(st.integers(1, 6))
    data = draw(st.lists(st.lists(st.integers(0, p - 1), min_size=cols, max_size=cols), min_size=rows, max_size=rows))
    return p, np.array(data, dtype=np.int64)


@given(matrices())
def test_rank_matches_sympy(case):
    p, a = case
    dm = DomainMatrix([[GF(p)(int(x)) for x in row] for row in a], a.shape, GF(p))
    assert linalg.rank(a, p) == dm.rank()


@given(matrices())
def test_nullspace_is_a_kernel_basis(case):
    p, a = case
    basis = linalg.nullspace(a, p)
    assert len(basis) == a.shape[1] - linalg.rank(a, p)
    for v in basis:
        assert not np.any(a @ v % p)
    if basis:
        assert linalg.rank(np.array(basis), p) == len(basis)


@given(matrices(), st.data())
def test_solve_finds_solutions_of_consistent_systems(case, data):
    p, a = case
    x0 = np.array(data.draw(st.lists(st.integers(0, p - 1), min_size=a.shape[1], max_size=a.shape[1])), dtype=np.int64)
    b = a @ x0 % p
    x = linalg.solve(a, b, p)
    assert x is not None and np.array_equal(a @ x % p, b)


def test_solve_reports_inconsistency():
    a = np.array([[1, 1], [1, 1]])
    assert linalg.solve(a, np.array([0, 1]), 3) is None
