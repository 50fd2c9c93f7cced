from hypothesis import strategies as st

from pquot import Poly, RingCtx
from pquot.derivation import Derivation

PRIMES = [2, 3, 5, 7]
RINGS = {p: RingCtx(p, ["x", "y", "t"]) for p in PRIMES}


@st.composite
def rings(draw, primes=PRIMES):
    return RINGS[draw(st.sampled_from(primes))]


@st.composite
def polys(draw, ctx, max_terms=4, max_exp=3, laurent=False):
    lo = -2 if laurent else 0
    exps = st.tuples(*[st.integers(lo, max_exp)] * ctx.nvars)
    terms = draw(st.dictionaries(exps, st.integers(0, ctx.p - 1), max_size=max_terms))
    return Poly(ctx, terms)


@st.composite
def derivations(draw, ctx, max_terms=3, max_exp=2):
    coeffs = {v: draw(polys(ctx, max_terms=max_terms, max_exp=max_exp)) for v in ctx.variables}
    return Derivation(ctx, coeffs)
