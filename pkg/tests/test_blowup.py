from fractions import Fraction

import pytest

from pquot import Derivation, RingCtx, bracket, jacobian_det, p_power, saturate
from pquot.blowup import (
    ChartError,
    ChartMap,
    DivisorSpec,
    InvalidCenter,
    NonSchematicChart,
    NotMonomialChart,
    chart_discrepancy,
    compose,
    identity_chart,
    monomial_chart,
    pullback_derivation,
    standard_chart,
    strict_transform,
    weighted_chart,
)
from pquot.ringcore import CtxMismatch


def quadratic(p, n):
    ctx = RingCtx(p, [f"x{i}" for i in range(1, n + 1)])
    return ctx, Derivation(ctx, {v: ctx.var(v) ** 2 for v in ctx.variables})


def test_standard_chart_forward_and_inverse():
    ctx, _ = quadratic(3, 3)
    m = standard_chart(ctx, ["x1", "x2", "x3"], "x1", ["u1", "u2", "u3"])
    assert str(m) == "x1 -> u1, x2 -> u1*u2, x3 -> u1*u3"
    assert m.inverse["u2"] == ctx.parse("x1^-1*x2")
    assert jacobian_det(m) == m.target.parse("u1^2")


def test_pullback_of_quadratic_derivation_on_first_chart():
    for p in (2, 3, 5):
        for n in (2, 3, 4):
            ctx, D = quadratic(p, n)
            m = standard_chart(ctx, list(ctx.variables), "x1", [f"u{i}" for i in range(1, n + 1)])
            T = m.target
            psi = Derivation(T, {"u1": T.var("u1"), **{f"u{i}": T.var(f"u{i}") ** 2 - T.var(f"u{i}") for i in range(2, n + 1)}})
            pulled = pullback_derivation(D, m)
            assert pulled == T.var("u1") * psi
            assert saturate(pulled, "u1") == (1, psi)


def test_weighted_chart_rejects_stacky_patches():
    ctx, _ = quadratic(5, 3)
    with pytest.raises(NonSchematicChart):
        weighted_chart(ctx, ["x1", "x2", "x3"], [1, 4, 4], "x2")
    with pytest.raises(InvalidCenter):
        weighted_chart(ctx, ["x1"], [1], "x1")
    with pytest.raises(InvalidCenter):
        standard_chart(ctx, ["x1", "x2"], "x3")


def test_weighted_chart_jacobian():
    ctx, _ = quadratic(5, 3)
    m = weighted_chart(ctx, ["x1", "x2", "x3"], [1, 4, 4], "x1", ["v1", "v2", "v3"])
    assert jacobian_det(m) == m.target.parse("v1^8")


def test_monomial_chart_requires_unimodular_exponents():
    src, tgt = RingCtx(3, ["x", "y"]), RingCtx(3, ["u", "v"])
    with pytest.raises(NotMonomialChart):
        monomial_chart(src, tgt, {"x": "u^2", "y": "v"})
    with pytest.raises(NotMonomialChart):
        monomial_chart(src, tgt, {"x": "u + v", "y": "v"})
    m = monomial_chart(src, tgt, {"x": "2*u*v^-1", "y": "v^-1"})
    assert m.push(m.pull(src.parse("x + y^2"))) == src.parse("x + y^2")


def test_opaque_direction_is_fixed():
    src = RingCtx(3, ["x", "z"], ["z"])
    tgt = RingCtx(3, ["u", "w"], ["w"])
    with pytest.raises(ChartError):
        ChartMap.from_forward(src, tgt, {"x": tgt.var("u"), "z": tgt.var("w")})


def test_compose_checks_rings_and_matches_sequential_pullback():
    ctx, D = quadratic(3, 2)
    a = standard_chart(ctx, ["x1", "x2"], "x1")
    b = standard_chart(a.target, ["x1", "x2"], "x2")
    ab = compose(a, b)
    assert pullback_derivation(D, ab) == pullback_derivation(pullback_derivation(D, a), b)
    other = RingCtx(3, ["p", "q"])
    with pytest.raises(CtxMismatch):
        compose(a, identity_chart(other))


def test_pullback_commutes_with_bracket_and_p_power():
    ctx = RingCtx(3, ["x", "y", "t"])
    D1 = Derivation.parse("x^2 d[x] + t d[y]", ctx)
    D2 = Derivation.parse("y d[x] + x*y d[t]", ctx)
    m = standard_chart(ctx, ["x", "y", "t"], "y")
    assert pullback_derivation(bracket(D1, D2), m) == bracket(pullback_derivation(D1, m), pullback_derivation(D2, m))
    assert pullback_derivation(p_power(D1), m) == p_power(pullback_derivation(D1, m))


def test_strict_transform():
    ctx = RingCtx(3, ["x", "y", "t"])
    m = standard_chart(ctx, ["x", "y", "t"], "x", ["u", "v", "s"])
    assert strict_transform(ctx.parse("t"), m, "u") == (m.target.parse("s"), 1)
    assert strict_transform(ctx.parse("y^2 - x^3"), m, "u") == (m.target.parse("v^2 - u"), 2)


def test_chart_discrepancy_with_boundary():
    ctx, _ = quadratic(3, 3)
    m = standard_chart(ctx, ["x1", "x2", "x3"], "x1", ["u1", "u2", "u3"])
    assert chart_discrepancy(m, None, "u1") == 2
    delta = DivisorSpec([("H", Fraction(1, 2), ctx.parse("x2")), ("G", 1, ctx.parse("x3 - x1^2"))])
    assert chart_discrepancy(m, delta, "u1") == Fraction(2) - Fraction(1, 2) - 1
    with pytest.raises(ValueError):
        DivisorSpec([("H", 1, ctx.parse("x1")), ("H", 1, ctx.parse("x2"))])
