"""Independent reference computations built on sympy."""
from __future__ import annotations

import sympy
from sympy import GF
from sympy.polys.matrices import DomainMatrix

from pquot import Poly, RingCtx
from pquot.derivation import Derivation


def symbols(ctx: RingCtx):
    return sympy.symbols(list(ctx.variables))


def to_sympy(f: Poly):
    syms = symbols(f.ctx)
    return sympy.Add(*[c * sympy.Mul(*[s**e for s, e in zip(syms, exps)]) for exps, c in f.terms.items()])


def from_sympy(expr, ctx: RingCtx) -> Poly:
    syms = symbols(ctx)
    expr = sympy.expand(expr)
    if expr == 0:
        return ctx.zero()
    poly = sympy.Poly(expr, *syms)
    return Poly(ctx, {tuple(int(e) for e in m): int(c) % ctx.p for m, c in poly.terms()})


def reduce_mod(expr, ctx: RingCtx):
    return to_sympy(from_sympy(expr, ctx))


def apply(D: Derivation, expr):
    """D(expr) by symbolic differentiation, reduced mod p."""
    syms = symbols(D.ctx)
    out = sum(to_sympy(D.coeff(v)) * sympy.diff(expr, s) for v, s in zip(D.ctx.variables, syms))
    return reduce_mod(out, D.ctx)


def _gf_poly(f: Poly, syms):
    return sympy.Poly(to_sympy(f), *syms, modulus=f.ctx.p)


def p_power(D: Derivation) -> Derivation:
    """D^[p] coordinate by coordinate, iterating differentiation over GF(p)."""
    syms = symbols(D.ctx)
    cs = [_gf_poly(D.coeff(v), syms) for v in D.ctx.variables]
    coeffs = {}
    for v, s in zip(D.ctx.variables, syms):
        f = sympy.Poly(s, *syms, modulus=D.ctx.p)
        for _ in range(D.ctx.p):
            f = sum((c * f.diff(x) for c, x in zip(cs, syms)), sympy.Poly(0, *syms, modulus=D.ctx.p))
        coeffs[v] = from_sympy(f.as_expr(), D.ctx)
    return Derivation(D.ctx, coeffs)


def monomials(nvars: int, dmax: int):
    out = []

    def rec(i, budget, acc):
        if i == nvars:
            out.append(tuple(acc))
            return
        for e in range(budget + 1):
            rec(i + 1, budget - e, acc + [e])

    rec(0, dmax, [])
    return out


def kernel_dims(D: Derivation, dmax: int) -> list[int]:
    """dim of {f : deg f <= d, D f = 0} for d = 0..dmax via sympy nullspaces over GF(p)."""
    ctx = D.ctx
    syms = symbols(ctx)
    dims = []
    for d in range(dmax + 1):
        monos = [m for m in monomials(ctx.nvars, d)]
        images = [from_sympy(apply(D, sympy.Mul(*[s**e for s, e in zip(syms, m)])), ctx) for m in monos]
        rows = sorted({e for img in images for e in img.terms})
        if not rows:
            dims.append(len(monos))
            continue
        mat = [[int(img.terms.get(r, 0)) for img in images] for r in rows]
        dm = DomainMatrix([[GF(ctx.p)(x) for x in row] for row in mat], (len(rows), len(monos)), GF(ctx.p))
        dims.append(len(monos) - dm.rank())
    return dims


def span_rank(polys: list[Poly]) -> int:
    if not polys:
        return 0
    p = polys[0].ctx.p
    cols = sorted({e for f in polys for e in f.terms})
    mat = [[GF(p)(int(f.terms.get(c, 0))) for c in cols] for f in polys]
    return DomainMatrix(mat, (len(polys), len(cols)), GF(p)).rank()
