"""Monomial chart maps: blow-up charts, weighted charts, chart changes.

Every chart here sends each source variable to a Laurent monomial in the
target variables (times a nonzero scalar), with an integer exponent matrix
of determinant +-1.  The inverse is then again monomial and is computed
exactly, so pullbacks of derivations never need to solve equations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .derivation import Derivation
from .ringcore import (
    AlgebraError,
    CtxMismatch,
    Poly,
    RingCtx,
    jacobian_det,
    ord_along,
    substitute,
)


class InvalidCenter(AlgebraError, ValueError):
    pass


class NonSchematicChart(AlgebraError, ValueError):
    pass


class NotMonomialChart(AlgebraError, ValueError):
    pass


class ChartError(AlgebraError, AssertionError):
    """A chart or pullback failed its own consistency check."""


def _integer_inverse(matrix: list[list[int]]) -> list[list[int]]:
    n = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise NotMonomialChart("exponent matrix is singular; chart is not birational")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    inv = [row[n:] for row in aug]
    if any(x.denominator != 1 for row in inv for x in row):
        raise NotMonomialChart("exponent matrix is not unimodular; inverse is not monomial")
    return [[int(x) for x in row] for row in inv]


@dataclass(frozen=True)
class ChartMap:
    """A monomial coordinate change ``source <- target``.

    ``forward[x]`` expresses the source variable x in target variables;
    ``inverse[u]`` expresses the target variable u in source variables.
    """

    source: RingCtx
    target: RingCtx
    forward: Mapping[str, Poly]
    inverse: Mapping[str, Poly]

    @classmethod
    def from_forward(cls, source: RingCtx, target: RingCtx, forward: Mapping[str, Poly]) -> ChartMap:
        if source.p != target.p:
            raise CtxMismatch("source and target characteristics differ")
        if set(forward) != set(source.variables):
            missing = set(source.variables) - set(forward)
            raise NotMonomialChart(f"forward map is missing images for {sorted(missing)}")
        if source.nvars != target.nvars:
            raise NotMonomialChart(
                f"chart maps {source.nvars} variables to {target.nvars}; monomial charts are square"
            )
        forward = {x: forward[x] for x in source.variables}
        exps, scalars = [], []
        for x, img in forward.items():
            if img.ctx != target:
                raise CtxMismatch(f"image of {x} is not over the target ring")
            if not img.is_monomial():
                raise NotMonomialChart(f"image of {x} is {img}, not a Laurent monomial")
            ((e, c),) = img.terms.items()
            exps.append(list(e))
            scalars.append(c)
        inv = _integer_inverse(exps)
        p = source.p
        inverse = {}
        for j, u in enumerate(target.variables):
            # u_j = prod_i (x_i / c_i)^(inv[j][i])
            coeff = 1
            vec = [0] * source.nvars
            for i in range(source.nvars):
                k = inv[j][i]
                if k:
                    vec[i] = k
                    coeff = coeff * pow(scalars[i], -k, p) % p
            inverse[u] = Poly(source, {tuple(vec): coeff})
        chart = cls(source, target, forward, inverse)
        chart.check()
        return chart

    def check(self) -> None:
        for u, img in self.inverse.items():
            if substitute(img, self.forward, self.target) != self.target.var(u):
                raise ChartError(f"forward then inverse is not the identity on {u}")
        for x, img in self.forward.items():
            if substitute(img, self.inverse, self.source) != self.source.var(x):
                raise ChartError(f"inverse then forward is not the identity on {x}")
        for z in self.source.reserved:
            if z not in self.target.reserved or self.forward[z] != self.target.var(z):
                raise ChartError(f"opaque direction {z} must be fixed by every chart")

    def pull(self, f: Poly) -> Poly:
        """Total transform of a source polynomial."""
        return substitute(f, self.forward, self.target)

    def push(self, g: Poly) -> Poly:
        return substitute(g, self.inverse, self.source)

    def __str__(self) -> str:
        return ", ".join(f"{x} -> {img}" for x, img in self.forward.items())


def identity_chart(ctx: RingCtx) -> ChartMap:
    return ChartMap.from_forward(ctx, ctx, {v: ctx.var(v) for v in ctx.variables})


def _target_ctx(ctx: RingCtx, rename: Sequence[str] | Mapping[str, str] | None) -> RingCtx:
    if rename is None:
        return ctx
    if isinstance(rename, Mapping):
        names = [rename.get(v, v) for v in ctx.variables]
    else:
        names = list(rename)
    return ctx.renamed(names)


def monomial_chart(
    source: RingCtx, target: RingCtx, images: Mapping[str, str]
) -> ChartMap:
    """Chart from textual images, e.g. ``{"x": "u", "y": "u*v"}``."""
    forward = {x: target.var(x) if x not in images else target.parse(images[x]) for x in source.variables}
    return ChartMap.from_forward(source, target, forward)


def weighted_chart(
    ctx: RingCtx,
    center: Sequence[str],
    weights: Sequence[int],
    chart: str,
    rename: Sequence[str] | Mapping[str, str] | None = None,
) -> ChartMap:
    """Chart of the weighted blow-up of ``V(center)`` where ``chart`` has weight 1.

    The chart variable is kept and every other center variable ``v`` of
    weight ``w`` becomes ``chart^w * v``.
    """
    center = list(center)
    if len(center) < 2 or len(set(center)) != len(center):
        raise InvalidCenter(f"center {center} must list at least two distinct variables")
    for v in center:
        ctx.position(v)
        if v in ctx.reserved:
            raise InvalidCenter(f"opaque direction {v} cannot be blown up")
    if chart not in center:
        raise InvalidCenter(f"chart variable {chart} is not in the center {center}")
    if len(weights) != len(center) or any(int(w) < 1 for w in weights):
        raise InvalidCenter("weights must be positive, one per center variable")
    w = dict(zip(center, (int(x) for x in weights)))
    if w[chart] != 1:
        raise NonSchematicChart(
            f"chart {chart} has weight {w[chart]} > 1; that chart is a stack quotient, not a scheme"
        )
    target = _target_ctx(ctx, rename)
    names = dict(zip(ctx.variables, target.variables))
    c = target.var(names[chart])
    forward = {}
    for v in ctx.variables:
        img = target.var(names[v])
        if v in w and v != chart:
            img = c ** w[v] * img
        forward[v] = img
    return ChartMap.from_forward(ctx, target, forward)


def standard_chart(
    ctx: RingCtx,
    center: Sequence[str],
    chart: str,
    rename: Sequence[str] | Mapping[str, str] | None = None,
) -> ChartMap:
    """The ``chart``-patch of the blow-up of the coordinate subspace ``V(center)``."""
    return weighted_chart(ctx, center, [1] * len(center), chart, rename)


def compose(m1: ChartMap, m2: ChartMap) -> ChartMap:
    """First ``m1`` (source -> middle), then ``m2`` (middle -> target)."""
    if m1.target != m2.source:
        raise CtxMismatch("compose: the first chart's target is not the second chart's source")
    forward = {x: substitute(img, m2.forward, m2.target) for x, img in m1.forward.items()}
    return ChartMap.from_forward(m1.source, m2.target, forward)


def pullback_derivation(D: Derivation, m: ChartMap) -> Derivation:
    """The derivation D' on the chart with ``m*(D f) = D'(m* f)``."""
    if D.ctx != m.source:
        raise CtxMismatch("derivation does not live on the chart's source ring")
    coeffs = {u: m.pull(D.apply(img)) for u, img in m.inverse.items()}
    Dt = Derivation(m.target, coeffs)
    for x, img in m.forward.items():
        if m.pull(D.apply(m.source.var(x))) != Dt.apply(img):
            raise ChartError(f"pullback identity fails on source variable {x}")
    return Dt


def strict_transform(d: Poly, m: ChartMap, e: str) -> tuple[Poly, int]:
    """Split the total transform of ``d`` as ``e^mult * strict``."""
    if d.is_zero():
        raise ValueError("strict transform of the zero polynomial")
    total = m.pull(d)
    mult = int(ord_along(total, e))
    strict = total * m.target.monomial({e: -mult})
    return strict, mult


@dataclass(frozen=True)
class DivisorEntry:
    name: str
    coeff: Fraction
    poly: Poly


class DivisorSpec:
    """A Q-divisor given by named, weighted defining equations."""

    def __init__(self, entries: Iterable[tuple[str, Fraction | int | str, Poly]] = ()):
        self.entries: list[DivisorEntry] = []
        seen = set()
        for name, coeff, poly in entries:
            if name in seen:
                raise ValueError(f"duplicate divisor name {name!r}")
            if poly.is_zero():
                raise ValueError(f"divisor {name!r} has zero defining polynomial")
            seen.add(name)
            self.entries.append(DivisorEntry(name, Fraction(coeff), poly))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def chart_discrepancy(m: ChartMap, delta: DivisorSpec | None, e: str) -> Fraction:
    """``a(E; X, Delta)`` for the divisor ``E = (e = 0)`` of the chart.

    Order of the Jacobian along E, minus the Delta-weighted orders of the
    pulled-back boundary equations.
    """
    a = Fraction(int(ord_along(jacobian_det(m), e)))
    for entry in delta or ():
        if entry.poly.ctx != m.source:
            raise CtxMismatch(f"boundary {entry.name!r} is not over the chart's source ring")
        a -= entry.coeff * int(ord_along(m.pull(entry.poly), e))
    return a
