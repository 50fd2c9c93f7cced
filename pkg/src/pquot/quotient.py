"""Invariant subrings of derivations, truncated by total degree.

The kernel of ``f -> D(f)`` on polynomials of degree <= dmax is a linear
algebra problem over F_p: columns are the monomials of degree <= dmax in
ascending graded-lex order, rows are the monomials of their images.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .derivation import Derivation
from .ringcore import AlgebraError, Poly, RingCtx, _term_key, ord_along


class LaurentNotSupported(AlgebraError, ValueError):
    pass


class GeneratorNotInvariant(AlgebraError, ValueError):
    pass


class PreconditionFailed(AlgebraError, ValueError):
    pass


@dataclass(frozen=True)
class NoSolutionUpTo:
    """Bounded certificate: no polynomial of degree <= dmax works."""

    dmax: int

    def __str__(self) -> str:
        return f"no solution up to degree {self.dmax}"


@dataclass(frozen=True)
class KernelBasis:
    dmax: int
    basis: tuple[Poly, ...]
    # dims[d] = dim of {f : deg f <= d, D(f) = 0}, for d = 0..dmax
    dims: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.basis)


def monomials_upto(nvars: int, dmax: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= dmax in ascending graded-lex order."""
    out = []
    for d in range(dmax + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    out.sort(key=_term_key)
    return out


def _require_polynomial(D: Derivation) -> None:
    for v, c in D.coeffs.items():
        if c.is_laurent():
            raise LaurentNotSupported(f"coefficient of d[{v}] is Laurent: {c}")


def _image_matrix(D: Derivation, monos: list[tuple[int, ...]]):
    ctx = D.ctx
    images = [D.apply(Poly(ctx, {m: 1})) for m in monos]
    row_index: dict[tuple[int, ...], int] = {}
    for img in images:
        for e in img.terms:
            row_index.setdefault(e, len(row_index))
    a = np.zeros((len(row_index), len(monos)), dtype=np.int64)
    for j, img in enumerate(images):
        for e, c in img.terms.items():
            a[row_index[e], j] = c
    return a, row_index


def _vector_to_poly(ctx: RingCtx, monos, vec) -> Poly:
    return Poly(ctx, {monos[i]: int(c) for i, c in enumerate(vec) if c})


def truncated_kernel(D: Derivation, dmax: int) -> KernelBasis:
    """Basis of the degree <= dmax part of ``ker D``.

    Each basis element has a distinct leading monomial (its free column), so
    ``dims[d]`` is the number of basis elements of degree <= d.
    """
    if dmax < 0:
        raise ValueError("dmax must be nonnegative")
    _require_polynomial(D)
    ctx = D.ctx
    monos = monomials_upto(ctx.nvars, dmax)
    a, _ = _image_matrix(D, monos)
    vecs = linalg.nullspace(a, ctx.p)
    basis = tuple(_vector_to_poly(ctx, monos, v) for v in vecs)
    degrees = [int(b.total_degree()) for b in basis]
    dims = tuple(sum(1 for g in degrees if g <= d) for d in range(dmax + 1))
    return KernelBasis(dmax, basis, dims)


def span_rank(polys: list[Poly]) -> int:
    if not polys:
        return 0
    index: dict[tuple[int, ...], int] = {}
    for f in polys:
        for e in f.terms:
            index.setdefault(e, len(index))
    a = np.zeros((len(polys), len(index)), dtype=np.int64)
    for i, f in enumerate(polys):
        for e, c in f.terms.items():
            a[i, index[e]] = c
    return linalg.rank(a, polys[0].ctx.p)


def products_upto(gens: list[Poly], d: int) -> list[Poly]:
    """All products of generators (with repetition) of total degree <= d."""
    ctx = gens[0].ctx if gens else None
    degs = [int(g.total_degree()) for g in gens]
    if any(k <= 0 for k in degs):
        raise ValueError("generators must be nonconstant polynomials")
    out = []

    def rec(i: int, budget: int, acc: Poly):
        if i == len(gens):
            out.append(acc)
            return
        power = acc
        used = 0
        while used <= budget:
            rec(i + 1, budget - used, power)
            power = power * gens[i]
            used += degs[i]

    rec(0, d, ctx.one())
    return out


def subalgebra_hilbert_match(gens: list[Poly], D: Derivation, dmax: int) -> dict[int, bool]:
    """Per degree d <= dmax: do products of ``gens`` span ``ker D`` in degree <= d?"""
    for g in gens:
        if D.apply(g):
            raise GeneratorNotInvariant(f"generator {g} is not killed by D: D(g) = {D.apply(g)}")
    kernel = truncated_kernel(D, dmax)
    table = {}
    for d in range(dmax + 1):
        table[d] = span_rank(products_upto(gens, d)) == kernel.dims[d]
    return table


def lift_invariant(D: Derivation, g: Poly, t: str, dmax: int) -> Poly | NoSolutionUpTo:
    """Find f with ``D(g + t*f) = 0`` and ``deg f <= dmax``.

    Requires ``D(t) = 0`` and ``t | D(g)``; the system ``D(f) = -D(g)/t`` is
    then linear in the coefficients of f.
    """
    _require_polynomial(D)
    ctx = D.ctx
    tv = ctx.var(t)
    if D.apply(tv):
        raise PreconditionFailed(f"D({t}) = {D.apply(tv)} is not zero")
    Dg = D.apply(g)
    if not Dg:
        return ctx.zero()
    if Dg.is_laurent() or ord_along(Dg, t) < 1:
        raise PreconditionFailed(f"D(g) = {Dg} is not divisible by {t}")
    rhs = -(Dg * ctx.monomial({t: -1}))
    monos = monomials_upto(ctx.nvars, dmax)
    a, rows = _image_matrix(D, monos)
    extra = [e for e in rhs.terms if e not in rows]
    if extra:
        # a monomial of the target never reached by D(f): inconsistent
        return NoSolutionUpTo(dmax)
    b = np.zeros(len(rows), dtype=np.int64)
    for e, c in rhs.terms.items():
        b[rows[e]] = c
    x = linalg.solve(a, b, ctx.p)
    if x is None:
        return NoSolutionUpTo(dmax)
    f = _vector_to_poly(ctx, monos, x)
    if D.apply(g + tv * f):
        raise AssertionError("lifted invariant failed verification")
    return f


def mprimary_image_check(D: Derivation, vars: list[str]) -> bool | None:
    """Sufficient test that the ideal of D's coefficients is primary to ``(vars)``.

    True when every coefficient has no term outside the maximal ideal and
    each variable has a pure power among the coefficients; otherwise None
    (inconclusive), never False.
    """
    gens = list(D.coeffs.values())
    if not gens:
        return None
    ctx = D.ctx
    idx = [ctx.position(v) for v in vars]
    others = [i for i in range(ctx.nvars) if i not in idx]
    for g in gens:
        if g.is_laurent():
            return None
        for e in g.terms:
            if any(e[i] for i in others) or not any(e[i] for i in idx):
                return None
    for i in idx:
        pure = any(
            g.is_monomial() and all((k == i) == bool(x) for k, x in enumerate(next(iter(g.terms))))
            for g in gens
        )
        if not pure:
            return None
    return True
