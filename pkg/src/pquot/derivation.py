"""Derivations of Laurent polynomial rings in characteristic p.

A derivation is stored by its values on the coordinates, ``D = sum c_v d[v]``.
Its p-th power is computed by iterating ``D`` p times on each coordinate,
which is exact and needs no commutator bookkeeping.
"""
from __future__ import annotations

from typing import Iterable, Mapping

from .ringcore import (
    AlgebraError,
    CtxMismatch,
    NotDivisible,
    Poly,
    ReservedVariable,
    RingCtx,
    divide_exact,
    ord_along,
    parse_derivation_terms,
    partial,
)


class NotPClosed(AlgebraError, ValueError):
    pass


class Derivation:
    """``sum_v coeffs[v] * d/dv`` with Poly coefficients over ``ctx``."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: RingCtx, coeffs: Mapping[str, Poly] | None = None):
        self.ctx = ctx
        clean: dict[str, Poly] = {}
        for v, c in (coeffs or {}).items():
            ctx.position(v)
            if c.ctx != ctx:
                raise CtxMismatch(f"coefficient of d[{v}] lives over {c.ctx}, expected {ctx}")
            if ctx.reserved and c.variables_used() & ctx.reserved:
                bad = sorted(c.variables_used() & ctx.reserved)
                raise ReservedVariable(f"coefficient of d[{v}] mentions opaque variable(s) {bad}")
            if c:
                clean[v] = c
        # keep ctx order so iteration and printing are deterministic
        self.coeffs = {v: clean[v] for v in ctx.variables if v in clean}

    @classmethod
    def parse(cls, text: str, ctx: RingCtx) -> Derivation:
        """Read a literal such as ``x1^2 d[x1] + t^2 d[y]``."""
        acc: dict[str, Poly] = {}
        for coeff, var in parse_derivation_terms(text, ctx):
            if var is None:
                continue
            acc[var] = acc.get(var, ctx.zero()) + coeff
        return cls(ctx, acc)

    @classmethod
    def coordinate(cls, ctx: RingCtx, v: str) -> Derivation:
        return cls(ctx, {v: ctx.one()})

    def coeff(self, v: str) -> Poly:
        return self.coeffs.get(v) or self.ctx.zero()

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def apply(self, f: Poly) -> Poly:
        if f.ctx != self.ctx:
            raise CtxMismatch("derivation and polynomial live in different rings")
        acc = self.ctx.zero()
        for v, c in self.coeffs.items():
            df = partial(f, v)
            if df:
                acc = acc + c * df
        return acc

    __call__ = apply

    def iterate(self, f: Poly, times: int) -> Poly:
        for _ in range(times):
            if not f:
                break
            f = self.apply(f)
        return f

    def __add__(self, other: Derivation) -> Derivation:
        if not isinstance(other, Derivation):
            return NotImplemented
        _same_ring(self, other)
        out = dict(self.coeffs)
        for v, c in other.coeffs.items():
            out[v] = out[v] + c if v in out else c
        return Derivation(self.ctx, out)

    def __neg__(self) -> Derivation:
        return Derivation(self.ctx, {v: -c for v, c in self.coeffs.items()})

    def __sub__(self, other: Derivation) -> Derivation:
        return self + (-other)

    def __rmul__(self, f) -> Derivation:
        """Scale by a Poly or an integer: ``f * D``."""
        if isinstance(f, int):
            f = self.ctx.const(f)
        if not isinstance(f, Poly):
            return NotImplemented
        return Derivation(self.ctx, {v: f * c for v, c in self.coeffs.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Derivation):
            return NotImplemented
        return self.ctx == other.ctx and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.ctx, tuple(self.coeffs.items())))

    def __str__(self) -> str:
        return print_derivation(self)

    def __repr__(self) -> str:
        return f"Derivation({print_derivation(self)!r}, p={self.ctx.p})"


def _same_ring(a: Derivation, b: Derivation) -> None:
    if a.ctx != b.ctx:
        raise CtxMismatch("derivations live over different rings")


def print_derivation(D: Derivation) -> str:
    if not D.coeffs:
        return "0"
    parts = []
    for v, c in D.coeffs.items():
        text = str(c)
        neg = False
        if c.is_monomial() and text.startswith("-"):
            neg, text = True, text[1:]
        if text == "1":
            body = f"d[{v}]"
        elif c.is_monomial():
            body = f"{text} d[{v}]"
        else:
            body = f"({text}) d[{v}]"
        if not parts:
            parts.append(f"-{body}" if neg else body)
        else:
            parts.append(f" - {body}" if neg else f" + {body}")
    return "".join(parts)


def apply(D: Derivation, f: Poly) -> Poly:
    return D.apply(f)


def bracket(D1: Derivation, D2: Derivation) -> Derivation:
    """Lie bracket ``[D1, D2] = D1 D2 - D2 D1``."""
    _same_ring(D1, D2)
    out = {}
    for v in D1.ctx.variables:
        c = D1.apply(D2.coeff(v)) - D2.apply(D1.coeff(v))
        if c:
            out[v] = c
    return Derivation(D1.ctx, out)


def p_power(D: Derivation) -> Derivation:
    """The restricted power ``D^[p]``, by applying D p times to each coordinate."""
    ctx = D.ctx
    out = {}
    for v, c in D.coeffs.items():
        # D(v) = c, so D^p(v) = D^(p-1)(c); coordinates with D(v)=0 stay zero
        val = D.iterate(c, ctx.p - 1)
        if val:
            out[v] = val
    return Derivation(ctx, out)


def is_p_closed(D: Derivation) -> Poly:
    """Return h with ``D^[p] = h*D``; raise :class:`NotPClosed` otherwise.

    h is read off the first coordinate (ring order) that D moves and then
    checked on every other coordinate.
    """
    if D.is_zero():
        raise ValueError("the zero derivation has no p-closedness factor")
    Dp = p_power(D)
    a, Da = next(iter(D.coeffs.items()))
    try:
        h = divide_exact(Dp.coeff(a), Da)
    except NotDivisible:
        raise NotPClosed(f"D^[p]({a}) = {Dp.coeff(a)} is not a multiple of D({a}) = {Da}") from None
    for v in D.ctx.variables:
        if Dp.coeff(v) != h * D.coeff(v):
            raise NotPClosed(
                f"D^[p]({v}) = {Dp.coeff(v)} differs from h*D({v}) with h = {h}"
            )
    return h


def _is_local_unit(h: Poly, units: Iterable[Poly]) -> bool | None:
    """Unit test for h at the origin of the chart.

    A polynomial with nonzero constant term is a unit in the local ring; a
    polynomial without one is not.  Declared units may be divided out first.
    Laurent leftovers are undecided (None).
    """
    candidates = [h]
    for u in units:
        try:
            candidates.append(divide_exact(h, u))
        except NotDivisible:
            pass
    undecided = False
    for c in candidates:
        if c.is_laurent():
            undecided = True
            continue
        if c.constant_term():
            return True
    if undecided:
        return None
    return False


def is_multiplicative(D: Derivation, units: Iterable[Poly] = ()) -> bool | None:
    """Whether ``D^[p] = h*D`` with h a unit at the origin.

    Returns True or False when the syntactic criterion decides, and None for
    inconclusive (h Laurent and not a declared unit multiple).  Propagates
    :class:`NotPClosed`.
    """
    units = list(units)
    h = is_p_closed(D)
    if h.is_zero():
        return False
    if h.is_constant() or h in units:
        return True
    return _is_local_unit(h, units)


def saturate(D: Derivation, e: str) -> tuple[int, Derivation]:
    """Factor out the largest power of ``e`` dividing every coefficient.

    Returns ``(k, S)`` with ``D = e^k * S``; the foliation discrepancy along
    ``(e = 0)`` is ``-k``.
    """
    if D.is_zero():
        raise ValueError("cannot saturate the zero derivation")
    k = min(ord_along(c, e) for c in D.coeffs.values())
    k = int(k)
    factor = D.ctx.monomial({e: -k})
    return k, factor * D


def is_invariant_divisor(S: Derivation, e: str) -> bool:
    """True iff ``S(e)`` lies in the ideal ``(e)``."""
    return ord_along(S.apply(S.ctx.var(e)), e) >= 1


def foliation_discrepancy(D: Derivation, e: str) -> int:
    return -saturate(D, e)[0]


__all__ = [
    "Derivation",
    "NotPClosed",
    "apply",
    "bracket",
    "foliation_discrepancy",
    "is_invariant_divisor",
    "is_multiplicative",
    "is_p_closed",
    "p_power",
    "print_derivation",
    "saturate",
]
