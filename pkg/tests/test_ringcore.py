import math

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

import oracles
from pquot import Poly, RingCtx, divide_exact, jacobian_det, ord_along, parse_poly, partial, substitute
from pquot.ringcore import (
    CtxMismatch,
    NotDivisible,
    PolySyntaxError,
    ReservedVariable,
    UnknownVariable,
    determinant,
    is_prime,
)
from strategies import polys, rings


@pytest.fixture
def R5():
    return RingCtx(5, ["x", "y", "z"])


def test_is_prime():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


def test_ring_rejects_bad_input():
    with pytest.raises(ValueError):
        RingCtx(4, ["x"])
    with pytest.raises(ValueError):
        RingCtx(3, ["x", "x"])
    with pytest.raises(ValueError):
        RingCtx(3, ["x", "1y"])
    with pytest.raises(ValueError):
        RingCtx(3, ["x"], ["z"])


def test_coefficients_reduce_and_zero_terms_vanish(R5):
    f = parse_poly("7*x + 5*y - 3", R5)
    assert f == parse_poly("2*x + 2", R5)
    assert (f - f).is_zero()
    assert parse_poly("5*x^2", R5) == 0


def test_printing_is_canonical(R5):
    f = parse_poly("y + x^2 - 1 + 3*x*y^-1", R5)
    assert str(f) == "x^2 + y - 2*x*y^-1 - 1"
    assert str(R5.zero()) == "0"
    assert str(parse_poly("-x", R5)) == "-x"
    assert str(parse_poly("4*x", R5)) == "-x"


@given(st.data())
def test_print_parse_round_trip(data):
    ctx = data.draw(rings())
    f = data.draw(polys(ctx, laurent=True))
    assert parse_poly(str(f), ctx) == f


def test_parser_errors_point_at_offending_token(R5):
    with pytest.raises(PolySyntaxError) as exc:
        parse_poly("x + * y", R5)
    assert exc.value.pos == 4
    with pytest.raises(UnknownVariable):
        parse_poly("w + 1", R5)
    with pytest.raises(PolySyntaxError):
        parse_poly("x^y", R5)
    with pytest.raises(PolySyntaxError):
        parse_poly("(x + y", R5)


def test_negative_powers_only_for_monomials(R5):
    assert parse_poly("(2*x*y)^-1", R5) * parse_poly("2*x*y", R5) == 1
    with pytest.raises(ValueError):
        parse_poly("(x + y)^-1", R5)


def test_reserved_variables_are_opaque():
    ctx = RingCtx(3, ["x", "z"], ["z"])
    with pytest.raises(ReservedVariable):
        parse_poly("z*x", ctx)
    assert parse_poly("z*x", ctx, allow_reserved=True).variables_used() == {"x", "z"}


def test_mixing_rings_is_an_error():
    a, b = RingCtx(3, ["x"]), RingCtx(5, ["x"])
    with pytest.raises(CtxMismatch):
        a.var("x") + b.var("x")


@given(st.data())
def test_ring_axioms(data):
    ctx = data.draw(rings())
    f, g, h = (data.draw(polys(ctx, laurent=True)) for _ in range(3))
    assert f + g == g + f
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == 0
    assert f * 1 == f


@given(st.data())
def test_arithmetic_matches_sympy(data):
    ctx = data.draw(rings())
    f, g = data.draw(polys(ctx)), data.draw(polys(ctx))
    expect = oracles.from_sympy(oracles.to_sympy(f) * oracles.to_sympy(g) - oracles.to_sympy(g), ctx)
    assert f * g - g == expect
    assert f**3 == oracles.from_sympy(oracles.to_sympy(f) ** 3, ctx)


@given(st.data())
def test_frobenius_is_additive(data):
    ctx = data.draw(rings())
    f, g = data.draw(polys(ctx, laurent=True)), data.draw(polys(ctx, laurent=True))
    assert (f + g) ** ctx.p == f**ctx.p + g**ctx.p


@given(st.data())
def test_partial_derivatives_match_sympy(data):
    ctx = data.draw(rings())
    f = data.draw(polys(ctx))
    for v, s in zip(ctx.variables, oracles.symbols(ctx)):
        assert partial(f, v) == oracles.from_sympy(sympy.diff(oracles.to_sympy(f), s), ctx)


def test_partial_of_laurent_monomial(R5):
    assert partial(parse_poly("x^-2*y", R5), "x") == parse_poly("-2*x^-3*y", R5)


def test_ord_along(R5):
    assert ord_along(parse_poly("x^2*y + x^3", R5), "x") == 2
    assert ord_along(parse_poly("x^-1 + y", R5), "x") == -1
    assert ord_along(R5.zero(), "x") == math.inf


def test_substitute_and_compose(R5):
    f = parse_poly("x^2*y - z", R5)
    images = {"x": parse_poly("x*y", R5), "y": parse_poly("y^-1", R5), "z": parse_poly("z + 1", R5)}
    assert substitute(f, images) == parse_poly("x^2*y - z - 1", R5)
    T = RingCtx(5, ["u", "v"])
    g = substitute(parse_poly("x + y", R5), {"x": T.var("u"), "y": T.var("v"), "z": T.zero()}, T)
    assert g == parse_poly("u + v", T)


def test_divide_exact(R5):
    f = parse_poly("x^3*y - x*y^3", R5)
    assert divide_exact(f, parse_poly("x - y", R5)) == parse_poly("x^2*y + x*y^2", R5)
    assert divide_exact(parse_poly("x^-1*y + y^2", R5), parse_poly("y", R5)) == parse_poly("x^-1 + y", R5)
    # monomials are units in the Laurent ring
    assert divide_exact(parse_poly("x + 1", R5), parse_poly("y", R5)) == parse_poly("x*y^-1 + y^-1", R5)
    with pytest.raises(NotDivisible):
        divide_exact(parse_poly("x + 1", R5), parse_poly("x + y", R5))


@given(st.data())
def test_divide_exact_inverts_multiplication(data):
    ctx = data.draw(rings())
    f, g = data.draw(polys(ctx)), data.draw(polys(ctx))
    if g:
        assert divide_exact(f * g, g) == f


def test_determinant_matches_sympy():
    ctx = RingCtx(7, ["a", "b"])
    m = [[parse_poly(s, ctx) for s in row] for row in [["a", "b", "1"], ["2", "a*b", "b"], ["a^2", "0", "3"]]]
    sm = sympy.Matrix([[oracles.to_sympy(x) for x in row] for row in m])
    assert determinant(m, ctx) == oracles.from_sympy(sm.det(), ctx)


def test_jacobian_of_blowup_chart():
    src, tgt = RingCtx(3, ["x", "y", "w"]), RingCtx(3, ["u", "v", "s"])
    images = {"x": parse_poly("u", tgt), "y": parse_poly("u*v", tgt), "w": parse_poly("u*s", tgt)}
    assert jacobian_det(images, ["u", "v", "s"]) == parse_poly("u^2", tgt)
