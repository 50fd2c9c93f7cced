"""Sparse Laurent polynomials over a prime field.

A :class:`Poly` stores its terms as ``{exponent tuple: coefficient}`` with the
exponents aligned to the variable list of its :class:`RingCtx`.  Exponents may
be negative (Laurent support); coefficients are kept reduced to ``0..p-1`` and
zero coefficients are never stored.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


class AlgebraError(Exception):
    """Base class for all errors raised by this package."""


class PolySyntaxError(AlgebraError, ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        pointer = f"\n  {text}\n  {' ' * pos}^"
        super().__init__(f"{message} at position {pos}{pointer}")


class UnknownVariable(AlgebraError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown variable"


class ReservedVariable(AlgebraError, ValueError):
    """An opaque-direction variable was used inside a coefficient."""


class NonInvertibleImage(AlgebraError, ValueError):
    pass


class NotDivisible(AlgebraError, ValueError):
    pass


class NonSquareMap(AlgebraError, ValueError):
    pass


class CtxMismatch(AlgebraError, ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class RingCtx:
    """Characteristic plus an ordered list of variable names.

    ``reserved`` names opaque directions: variables ``z`` that stand for a
    vector field such as ``mu(y) d/dy`` and may therefore only occur as
    ``d[z]``, never inside a coefficient.
    """

    p: int
    variables: tuple[str, ...]
    reserved: frozenset[str] = field(default_factory=frozenset)

    def __init__(self, p: int, variables: Iterable[str], reserved: Iterable[str] = ()):
        object.__setattr__(self, "p", int(p))
        object.__setattr__(self, "variables", tuple(variables))
        object.__setattr__(self, "reserved", frozenset(reserved))
        if not is_prime(self.p):
            raise ValueError(f"characteristic {p} is not prime")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"duplicate variable names in {self.variables}")
        for v in self.variables:
            if not isinstance(v, str) or not _NAME_RE.match(v):
                raise ValueError(f"invalid variable name {v!r}")
        extra = self.reserved - set(self.variables)
        if extra:
            raise ValueError(f"reserved names {sorted(extra)} are not variables")

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.variables)}

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def position(self, name: str) -> int:
        try:
            return self.index[name]
        except KeyError:
            raise UnknownVariable(f"unknown variable {name!r} (ring has {', '.join(self.variables)})") from None

    def zero(self) -> Poly:
        return Poly(self, {})

    def one(self) -> Poly:
        return self.const(1)

    def const(self, c: int) -> Poly:
        return Poly(self, {(0,) * self.nvars: c})

    def var(self, name: str) -> Poly:
        exps = [0] * self.nvars
        exps[self.position(name)] = 1
        return Poly(self, {tuple(exps): 1})

    def gens(self) -> list[Poly]:
        return [self.var(v) for v in self.variables]

    def monomial(self, exps: Mapping[str, int], coeff: int = 1) -> Poly:
        vec = [0] * self.nvars
        for name, e in exps.items():
            vec[self.position(name)] += e
        return Poly(self, {tuple(vec): coeff})

    def parse(self, text: str) -> Poly:
        return parse_poly(text, self)

    def renamed(self, names: Sequence[str]) -> RingCtx:
        if len(names) != self.nvars:
            raise ValueError("renaming must give one new name per variable")
        mapping = dict(zip(self.variables, names))
        return RingCtx(self.p, names, (mapping[r] for r in self.reserved))

    def __repr__(self) -> str:
        res = f", reserved={sorted(self.reserved)}" if self.reserved else ""
        return f"RingCtx(p={self.p}, variables={list(self.variables)}{res})"


def _term_key(exps: tuple[int, ...]) -> tuple:
    # graded lex: total degree first, then exponents in declared variable order
    return (sum(exps), exps)


class Poly:
    """Immutable sparse Laurent polynomial over F_p."""

    __slots__ = ("ctx", "terms", "_hash")

    def __init__(self, ctx: RingCtx, terms: Mapping[tuple[int, ...], int]):
        p = ctx.p
        clean = {}
        for exps, c in terms.items():
            c %= p
            if c:
                clean[exps] = c
        self.ctx = ctx
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, ctx: RingCtx, terms: dict) -> Poly:
        # terms already reduced and free of zeros
        obj = cls.__new__(cls)
        obj.ctx = ctx
        obj.terms = terms
        obj._hash = None
        return obj

    # -- predicates -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_monomial(self) -> bool:
        """True for a single term ``c * x^a`` with c != 0."""
        return len(self.terms) == 1

    def is_constant(self) -> bool:
        zero = (0,) * self.ctx.nvars
        return not self.terms or (len(self.terms) == 1 and zero in self.terms)

    def is_laurent(self) -> bool:
        """True when some exponent is negative."""
        return any(e < 0 for exps in self.terms for e in exps)

    def constant_term(self) -> int:
        return self.terms.get((0,) * self.ctx.nvars, 0)

    def variables_used(self) -> set[str]:
        names = self.ctx.variables
        return {names[i] for exps in self.terms for i, e in enumerate(exps) if e}

    def total_degree(self) -> float:
        if not self.terms:
            return -math.inf
        return max(sum(e) for e in self.terms)

    def sorted_terms(self) -> list[tuple[tuple[int, ...], int]]:
        """Terms in descending graded-lex order (the printing order)."""
        return sorted(self.terms.items(), key=lambda t: _term_key(t[0]), reverse=True)

    def leading_term(self) -> tuple[tuple[int, ...], int]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        return max(self.terms.items(), key=lambda t: _term_key(t[0]))

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.ctx is not self.ctx and other.ctx != self.ctx:
                raise CtxMismatch(f"cannot combine polynomials over {self.ctx} and {other.ctx}")
            return other
        if isinstance(other, int):
            return self.ctx.const(other)
        return NotImplemented

    def __add__(self, other) -> Poly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ctx.p
        out = dict(self.terms)
        for exps, c in other.terms.items():
            s = (out.get(exps, 0) + c) % p
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
        return Poly._raw(self.ctx, out)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        p = self.ctx.p
        return Poly._raw(self.ctx, {e: p - c for e, c in self.terms.items()})

    def __sub__(self, other) -> Poly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> Poly:
        return (-self) + other

    def __mul__(self, other) -> Poly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.ctx.p
        out: dict[tuple[int, ...], int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = (out.get(e, 0) + c1 * c2) % p
        return Poly._raw(self.ctx, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def inverse(self) -> Poly:
        """Inverse of a Laurent monomial ``c * x^a``."""
        if not self.is_monomial():
            raise NonInvertibleImage(f"{self} is not a Laurent monomial, cannot invert")
        ((exps, c),) = self.terms.items()
        p = self.ctx.p
        return Poly._raw(self.ctx, {tuple(-e for e in exps): pow(c, -1, p)})

    def __pow__(self, k: int) -> Poly:
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if self.is_monomial():
            ((exps, c),) = self.terms.items()
            return Poly(self.ctx, {tuple(e * k for e in exps): pow(c, k, self.ctx.p)})
        result = self.ctx.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c: int) -> Poly:
        return Poly(self.ctx, {e: c * v for e, v in self.terms.items()})

    def shift(self, exps: Sequence[int]) -> Poly:
        """Multiply by the monomial ``x^exps``."""
        return Poly._raw(
            self.ctx, {tuple(a + b for a, b in zip(e, exps)): c for e, c in self.terms.items()}
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = self.ctx.const(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self.terms.items())))
        return self._hash

    def __str__(self) -> str:
        return print_poly(self)

    def __repr__(self) -> str:
        return f"Poly({print_poly(self)!r}, p={self.ctx.p})"


# ---------------------------------------------------------------------------
# printing


def _signed(c: int, p: int) -> int:
    # symmetric representative; p = 2 always prints +1
    return c - p if c > p // 2 else c


def _monomial_str(ctx: RingCtx, exps: tuple[int, ...]) -> str:
    parts = []
    for name, e in zip(ctx.variables, exps):
        if e == 1:
            parts.append(name)
        elif e:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def print_poly(f: Poly) -> str:
    """Deterministic text form; :func:`parse_poly` reads it back exactly."""
    if not f.terms:
        return "0"
    p = f.ctx.p
    out = []
    for i, (exps, c) in enumerate(f.sorted_terms()):
        s = _signed(c, p)
        mono = _monomial_str(f.ctx, exps)
        mag = abs(s)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if i == 0:
            out.append(body if s > 0 else f"-{body}")
        else:
            out.append(f" + {body}" if s > 0 else f" - {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<dvar>d\[\s*[a-zA-Z_][a-zA-Z0-9_]*\s*\])|(?P<name>[a-zA-Z_][a-zA-Z0-9_]*)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise PolySyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "dvar":
            value = value[2:-1].strip()
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    """Recursive-descent parser for the polynomial grammar.

    expr   := term (('+'|'-') term)*
    term   := unary ('*' unary)*
    unary  := ('-'|'+') unary | power
    power  := atom ('^' exponent)?
    atom   := INT | NAME | '(' expr ')'
    exponent := ['-'|'+'] INT | '(' ['-'|'+'] INT ')'

    In derivation mode every summand of the top-level sum must end in a
    ``d[var]`` token, optionally preceded by ``*``.
    """

    def __init__(self, text: str, ctx: RingCtx, allow_reserved: bool = False):
        self.text = text
        self.ctx = ctx
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_reserved = allow_reserved

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise PolySyntaxError(f"{message}, found {found}", self.text, tok[2])

    def expect_op(self, op: str):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != op:
            self.error(f"expected {op!r}")
        return self.take()

    def at_op(self, *ops: str) -> bool:
        tok = self.peek()
        return tok[0] == "op" and tok[1] in ops

    def finish(self):
        if self.peek()[0] != "end":
            tok = self.peek()
            if tok[0] in ("name", "int", "dvar") or (tok[0] == "op" and tok[1] == "("):
                self.error("juxtaposition is not allowed; use '*'")
            self.error("unexpected token")

    # poly grammar
    def expr(self) -> Poly:
        acc = self.term()
        while self.at_op("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Poly:
        acc = self.unary()
        while self.at_op("*"):
            self.take()
            acc = acc * self.unary()
        return acc

    def unary(self) -> Poly:
        if self.at_op("-"):
            self.take()
            return -self.unary()
        if self.at_op("+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.at_op("^"):
            self.take()
            k = self.exponent()
            try:
                return base**k
            except NonInvertibleImage:
                raise NonInvertibleImage(
                    f"negative power of non-monomial {base} in {self.text!r}"
                ) from None
        return base

    def exponent(self) -> int:
        paren = False
        if self.at_op("("):
            self.take()
            paren = True
        sign = 1
        if self.at_op("-", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        tok = self.peek()
        if tok[0] != "int":
            self.error("expected integer exponent")
        self.take()
        if paren:
            self.expect_op(")")
        return sign * int(tok[1])

    def atom(self) -> Poly:
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            return self.ctx.const(int(tok[1]))
        if tok[0] == "name":
            self.take()
            name = tok[1]
            if name not in self.ctx.index:
                raise UnknownVariable(
                    f"unknown variable {name!r} at position {tok[2]} in {self.text!r}"
                )
            if name in self.ctx.reserved and not self.allow_reserved:
                raise ReservedVariable(
                    f"opaque variable {name!r} may only appear as d[{name}] (position {tok[2]})"
                )
            return self.ctx.var(name)
        if tok[0] == "op" and tok[1] == "(":
            self.take()
            inner = self.expr()
            self.expect_op(")")
            return inner
        self.error("expected a number, variable or '('")

    # derivation grammar
    def derivation_terms(self) -> list[tuple[Poly, str]]:
        out = []
        sign = 1
        if self.at_op("-", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        while True:
            coeff, var = self.dterm()
            out.append((coeff if sign > 0 else -coeff, var))
            if self.at_op("+", "-"):
                sign = -1 if self.take()[1] == "-" else 1
                continue
            break
        return out

    def dterm(self) -> tuple[Poly, str | None]:
        tok = self.peek()
        if tok[0] == "dvar":
            self.take()
            return self.ctx.one(), self._dvar(tok)
        coeff = self.term_no_leading_sign()
        if self.at_op("*") and self.tokens[self.i + 1][0] == "dvar":
            self.take()
        tok = self.peek()
        if tok[0] == "dvar":
            self.take()
            return coeff, self._dvar(tok)
        if coeff.is_zero():
            return coeff, None
        self.error("expected d[var] after coefficient")

    def term_no_leading_sign(self) -> Poly:
        acc = self.unary()
        while self.at_op("*") and self.tokens[self.i + 1][0] != "dvar":
            self.take()
            acc = acc * self.unary()
        return acc

    def _dvar(self, tok) -> str:
        name = tok[1]
        if name not in self.ctx.index:
            raise UnknownVariable(f"unknown variable {name!r} in d[...] at position {tok[2]}")
        return name


def parse_poly(text: str, ctx: RingCtx, *, allow_reserved: bool = False) -> Poly:
    """Parse ``text`` into a canonical :class:`Poly` over ``ctx``.

    >>> ctx = RingCtx(3, ["x1"])
    >>> print(parse_poly("x1^2 + 2", ctx))
    x1^2 - 1
    """
    parser = _Parser(text, ctx, allow_reserved)
    if parser.peek()[0] == "end":
        parser.error("empty expression")
    f = parser.expr()
    parser.finish()
    return f


def parse_derivation_terms(text: str, ctx: RingCtx) -> list[tuple[Poly, str | None]]:
    parser = _Parser(text, ctx)
    if parser.peek()[0] == "end":
        parser.error("empty derivation")
    terms = parser.derivation_terms()
    parser.finish()
    return terms


# ---------------------------------------------------------------------------
# homomorphisms and calculus


def substitute(f: Poly, images: Mapping[str, Poly], target: RingCtx | None = None) -> Poly:
    """Apply the ring map sending each variable of ``f`` to ``images[var]``.

    Variables appearing with a negative exponent need a Laurent-monomial
    image.  ``target`` is only needed when ``f`` is constant and ``images``
    is empty.
    """
    if target is None:
        if images:
            target = next(iter(images.values())).ctx
        else:
            target = f.ctx
    names = f.ctx.variables
    for v in images.values():
        if v.ctx != target:
            raise CtxMismatch("substitution images live in different rings")
    cache: dict[tuple[int, int], Poly] = {}

    def power(i: int, e: int) -> Poly:
        key = (i, e)
        if key not in cache:
            try:
                img = images[names[i]]
            except KeyError:
                raise UnknownVariable(f"no image given for variable {names[i]!r}") from None
            if e < 0 and not img.is_monomial():
                raise NonInvertibleImage(
                    f"{names[i]} appears with exponent {e} but maps to non-monomial {img}"
                )
            cache[key] = img**e
        return cache[key]

    acc = target.zero()
    for exps, c in f.terms.items():
        term = target.const(c)
        for i, e in enumerate(exps):
            if e:
                term = term * power(i, e)
        acc = acc + term
    return acc


def partial(f: Poly, v: str) -> Poly:
    """Formal partial derivative; ``d(x^k) = k x^(k-1)`` for every integer k."""
    i = f.ctx.position(v)
    p = f.ctx.p
    out = {}
    for exps, c in f.terms.items():
        e = exps[i]
        c2 = (c * e) % p
        if c2:
            new = list(exps)
            new[i] -= 1
            out[tuple(new)] = c2
    return Poly._raw(f.ctx, out)


def ord_along(f: Poly, v: str) -> float:
    """Smallest exponent of ``v`` over the support; ``inf`` for zero."""
    i = f.ctx.position(v)
    if not f.terms:
        return math.inf
    return min(exps[i] for exps in f.terms)


def divide_exact(f: Poly, g: Poly) -> Poly:
    """Exact quotient ``f / g`` in the Laurent ring, or :class:`NotDivisible`."""
    if g.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    if f.ctx != g.ctx:
        raise CtxMismatch("dividend and divisor live in different rings")
    if f.is_zero():
        return f
    n = f.ctx.nvars
    # strip the monomial content of g so that g0 has no variable factor
    gmin = [min(e[i] for e in g.terms) for i in range(n)]
    g0 = g.shift([-a for a in gmin])
    fmin = [min(e[i] for e in f.terms) for i in range(n)]
    r = f.shift([-a for a in fmin])
    lead_e, lead_c = g0.leading_term()
    inv = pow(lead_c, -1, f.ctx.p)
    q: dict[tuple[int, ...], int] = {}
    # g0 is coprime to every variable, so g | f in the Laurent ring iff
    # g0 | r in the polynomial ring; plain division decides the latter
    while r.terms:
        re_, rc = r.leading_term()
        diff = tuple(a - b for a, b in zip(re_, lead_e))
        if any(d < 0 for d in diff):
            raise NotDivisible(f"{f} is not divisible by {g}")
        c = (rc * inv) % f.ctx.p
        q[diff] = c
        r = r - Poly._raw(f.ctx, {diff: c}) * g0
    quotient = Poly._raw(f.ctx, q)
    return quotient.shift([a - b for a, b in zip(fmin, gmin)])


def determinant(matrix: Sequence[Sequence[Poly]], ctx: RingCtx) -> Poly:
    """Division-free determinant by Laplace expansion with memoised minors."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise NonSquareMap("determinant of a non-square matrix")
    if n == 0:
        return ctx.one()
    memo: dict[tuple[int, int], Poly] = {}

    def minor(row: int, cols_mask: int) -> Poly:
        # determinant of rows row..n-1 against the columns in cols_mask
        if row == n:
            return ctx.one()
        key = (row, cols_mask)
        if key in memo:
            return memo[key]
        acc = ctx.zero()
        sign = 1
        for c in range(n):
            if not cols_mask >> c & 1:
                continue
            entry = matrix[row][c]
            if entry:
                sub = minor(row + 1, cols_mask & ~(1 << c))
                if sub:
                    term = entry * sub
                    acc = acc + term if sign > 0 else acc - term
            sign = -sign
        memo[key] = acc
        return acc

    return minor(0, (1 << n) - 1)


def jacobian_det(images, target_vars: Sequence[str] | None = None) -> Poly:
    """Determinant of the matrix ``d(image_i)/d(target_j)``.

    ``images`` is either a chart map (anything with ``forward`` and
    ``target`` attributes) or a mapping from source variable to image Poly,
    in which case ``target_vars`` defaults to the variables of the images'
    ring.
    """
    if hasattr(images, "forward") and hasattr(images, "target"):
        forward = images.forward
        ctx = images.target
        target_vars = list(ctx.variables) if target_vars is None else list(target_vars)
    else:
        forward = images
        if not forward:
            raise NonSquareMap("empty map")
        ctx = next(iter(forward.values())).ctx
        target_vars = list(ctx.variables) if target_vars is None else list(target_vars)
    if len(forward) != len(target_vars):
        raise NonSquareMap(
            f"map has {len(forward)} source and {len(target_vars)} target variables"
        )
    rows = [[partial(img, v) for v in target_vars] for img in forward.values()]
    return determinant(rows, ctx)
