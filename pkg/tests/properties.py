"""Randomized algebraic identities; every comparison is exact.

Collected through criterion 12 of test_acceptance, one case per identity.
"""
from hypothesis import given
from hypothesis import strategies as st

from pquot import bracket, p_power
from pquot.blowup import pullback_derivation, standard_chart
from pquot.quotient import truncated_kernel
from strategies import derivations, polys, rings


@st.composite
def charts(draw, ctx):
    size = draw(st.integers(2, ctx.nvars))
    center = draw(st.permutations(ctx.variables))[:size]
    return standard_chart(ctx, center, draw(st.sampled_from(center)))


@given(st.data())
def leibniz_rule(data):
    ctx = data.draw(rings())
    D = data.draw(derivations(ctx))
    f, g = data.draw(polys(ctx, laurent=True)), data.draw(polys(ctx, laurent=True))
    assert D.apply(f * g) == D.apply(f) * g + f * D.apply(g)


@given(st.data())
def bracket_antisymmetry(data):
    ctx = data.draw(rings())
    a, b = data.draw(derivations(ctx)), data.draw(derivations(ctx))
    assert bracket(a, b) == -bracket(b, a)
    assert bracket(a, a).is_zero()


@given(st.data())
def jacobi_identity(data):
    ctx = data.draw(rings())
    a, b, c = (data.draw(derivations(ctx, max_terms=2)) for _ in range(3))
    total = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
    assert total.is_zero()


@given(st.data())
def bracket_acts_as_commutator(data):
    ctx = data.draw(rings())
    a, b = data.draw(derivations(ctx)), data.draw(derivations(ctx))
    f = data.draw(polys(ctx))
    assert bracket(a, b).apply(f) == a.apply(b.apply(f)) - b.apply(a.apply(f))


@given(st.data())
def hochschild_identity(data):
    ctx = data.draw(rings())
    D = data.draw(derivations(ctx, max_terms=2))
    f = data.draw(polys(ctx, max_terms=2, max_exp=2))
    fD = f * D
    assert p_power(fD) == f**ctx.p * p_power(D) + fD.iterate(f, ctx.p - 1) * D


@given(st.data())
def pullback_preserves_brackets(data):
    ctx = data.draw(rings())
    m = data.draw(charts(ctx))
    a, b = data.draw(derivations(ctx)), data.draw(derivations(ctx))
    assert pullback_derivation(bracket(a, b), m) == bracket(pullback_derivation(a, m), pullback_derivation(b, m))


@given(st.data())
def pullback_preserves_p_powers(data):
    ctx = data.draw(rings())
    m = data.draw(charts(ctx))
    D = data.draw(derivations(ctx, max_terms=2))
    assert pullback_derivation(p_power(D), m) == p_power(pullback_derivation(D, m))


@given(st.data())
def kernel_is_closed_under_products(data):
    ctx = data.draw(rings())
    D = data.draw(derivations(ctx, max_terms=2))
    basis = truncated_kernel(D, 3).basis
    f, g = data.draw(st.sampled_from(basis)), data.draw(st.sampled_from(basis))
    assert D.apply(f) == 0
    assert D.apply(f * g) == 0
    h = data.draw(polys(ctx))
    assert D.apply(h**ctx.p) == 0
