import pytest

import oracles
from pquot import Derivation, RingCtx
from pquot.quotient import (
    GeneratorNotInvariant,
    LaurentNotSupported,
    NoSolutionUpTo,
    PreconditionFailed,
    lift_invariant,
    monomials_upto,
    mprimary_image_check,
    subalgebra_hilbert_match,
    truncated_kernel,
)


def test_monomials_are_graded_lex_ascending():
    assert monomials_upto(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]


def test_kernel_of_coordinate_derivation():
    ctx = RingCtx(3, ["x", "y"])
    kb = truncated_kernel(Derivation.parse("d[x]", ctx), 3)
    assert [str(f) for f in kb.basis] == ["1", "y", "y^2", "y^3", "x^3"]
    assert kb.dims == (1, 2, 3, 5)


def test_kernel_dims_match_sympy_oracle():
    for p, text in [(2, "x^2 d[x] + t d[y]"), (3, "x^2 d[x] + y^2 d[y] + t d[y]"), (5, "x d[x] - y d[y]")]:
        ctx = RingCtx(p, ["x", "y", "t"])
        D = Derivation.parse(text, ctx)
        assert list(truncated_kernel(D, 5).dims) == oracles.kernel_dims(D, 5)


def test_char2_invariant_ring_hilbert_match():
    ctx = RingCtx(2, ["x", "y", "t"])
    D = Derivation.parse("x^2 d[x] + t d[y]", ctx)
    gens = [ctx.parse(g) for g in ("x^2", "y^2", "t", "t*x + x^2*y")]
    assert all(subalgebra_hilbert_match(gens, D, 6).values())
    partial = subalgebra_hilbert_match(gens[:3], D, 3)
    assert partial[2] and not partial[3]
    with pytest.raises(GeneratorNotInvariant):
        subalgebra_hilbert_match([ctx.parse("x")], D, 2)


def test_lift_invariant_certificates():
    for p in (2, 3):
        for n in (2, 3):
            ctx = RingCtx(p, [f"x{i}" for i in range(1, n + 1)] + ["z", "t"])
            D = Derivation(ctx, {**{f"x{i}": ctx.var(f"x{i}") ** 2 for i in range(1, n + 1)}, "z": ctx.var("t")})
            assert lift_invariant(D, ctx.var("z"), "t", 6) == NoSolutionUpTo(6)
    ctx = RingCtx(3, ["x", "y", "t"])
    D = Derivation.parse("x^2 d[x] + t*x^2 d[y]", ctx)
    assert lift_invariant(D, ctx.var("y"), "t", 6) == ctx.parse("-x")


def test_lift_invariant_preconditions():
    ctx = RingCtx(3, ["x", "y", "t"])
    with pytest.raises(PreconditionFailed):
        lift_invariant(Derivation.parse("d[t]", ctx), ctx.var("y"), "t", 3)
    with pytest.raises(PreconditionFailed):
        lift_invariant(Derivation.parse("d[y]", ctx), ctx.var("y"), "t", 3)
    with pytest.raises(LaurentNotSupported):
        truncated_kernel(Derivation.parse("x^-1 d[y]", ctx), 2)


def test_mprimary_check_never_claims_false():
    ctx = RingCtx(3, ["x", "y", "t"])
    assert mprimary_image_check(Derivation.parse("x^2 d[x] + y^2 d[y]", ctx), ["x", "y"]) is True
    assert mprimary_image_check(Derivation.parse("x^2 d[x] + x*y d[y]", ctx), ["x", "y"]) is None
    assert mprimary_image_check(Derivation.parse("d[x] + y^2 d[y]", ctx), ["x", "y"]) is None
