"""Exact rational bookkeeping of discrepancies on the quotient side."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .ringcore import is_prime

Rat = Fraction | int


def _check_prime(p: int) -> None:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")


def delta_factor(invariant: bool, p: int) -> Fraction:
    return Fraction(1) if invariant else Fraction(1, p)


def quotient_discrepancy(a_pair: Rat, a_fol: Rat, invariant: bool, p: int) -> Fraction:
    """Discrepancy of the image divisor on the quotient.

    ``delta * (a_pair + (p-1) * a_fol)`` with ``delta = 1`` for an invariant
    divisor and ``1/p`` otherwise.
    """
    _check_prime(p)
    return delta_factor(invariant, p) * (Fraction(a_pair) + (p - 1) * Fraction(a_fol))


def image_divisor_coefficient(c: Rat, invariant: bool, p: int) -> Fraction:
    """Coefficient of ``q(D)`` in the image boundary of ``c * D``."""
    _check_prime(p)
    return Fraction(c) * delta_factor(invariant, p)


def adjunction_pullback(k_x: Rat, delta: Rat, k_fol: Rat, p: int) -> Fraction:
    """Coefficient of ``K_X + Delta + (p-1) K_F``: the pullback of ``K_Y + Delta_Y``."""
    return Fraction(k_x) + Fraction(delta) + (p - 1) * Fraction(k_fol)


@dataclass(frozen=True)
class DiscrepancyRecord:
    name: str
    a_pair: Fraction
    a_fol: Fraction
    invariant: bool
    p: int
    delta: Fraction
    a_quotient: Fraction

    def __post_init__(self):
        if self.delta != delta_factor(self.invariant, self.p):
            raise ValueError(f"{self.name}: delta {self.delta} inconsistent with invariance flag")
        expected = self.delta * (self.a_pair + (self.p - 1) * self.a_fol)
        if self.a_quotient != expected:
            raise ValueError(f"{self.name}: a_quotient {self.a_quotient} != {expected}")

    @classmethod
    def build(cls, name: str, a_pair: Rat, a_fol: Rat, invariant: bool, p: int) -> DiscrepancyRecord:
        a_pair, a_fol = Fraction(a_pair), Fraction(a_fol)
        return cls(
            name,
            a_pair,
            a_fol,
            invariant,
            p,
            delta_factor(invariant, p),
            quotient_discrepancy(a_pair, a_fol, invariant, p),
        )

    @property
    def integral(self) -> bool:
        return self.a_quotient.denominator == 1

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "a_pair": self.a_pair,
            "a_fol": self.a_fol,
            "invariant": self.invariant,
            "p": self.p,
            "delta": self.delta,
            "a_quotient": self.a_quotient,
        }


class Label(enum.IntEnum):
    NOT_LC = 0
    LC = 1
    CANONICAL = 2
    TERMINAL = 3

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Verdict:
    label: Label
    witness: str
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def is_lc(self) -> bool:
        return self.label >= Label.LC

    def __str__(self) -> str:
        return f"{self.label} ({self.witness})"


def classify_quadratic_quotient(n: int, p: int) -> Verdict:
    """Singularity class of ``A^n`` modulo ``sum x_i^2 d/dx_i``.

    The exceptional divisor over the origin gives ``a(F;Y) = n - p``; the
    canonical and terminal cases rest on the lower bound ``2(n - p)`` for
    divisors lying over the singular points of the blown-up foliation.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    _check_prime(p)
    a_f = Fraction(n - p)
    meta = {"a_F": a_f, "bound": Fraction(2 * (n - p)), "n": n, "p": p}
    if n <= p - 2:
        return Verdict(Label.NOT_LC, f"a(F;Y) = n-p = {a_f} <= -2", meta)
    if n == p - 1:
        return Verdict(Label.LC, f"a(F;Y) = n-p = -1 and (X,E) log smooth with coefficient p-n = 1", meta)
    if n == p:
        return Verdict(Label.CANONICAL, "a(F;Y) = 0 and every other divisor has a >= 2(n-p) = 0", meta)
    return Verdict(Label.TERMINAL, f"a(F;Y) = {a_f} > 0 and every other divisor has a >= 2(n-p) = {2 * (n - p)} > 0", meta)


def _cascade_verdict(records: list[DiscrepancyRecord], why: str) -> Verdict:
    worst = min(records, key=lambda r: r.a_quotient)
    meta = {"min_a_quotient": worst.a_quotient, "worst": worst.name}
    if worst.a_quotient >= -1:
        return Verdict(Label.LC, f"all boundary coefficients -a <= 1 on a log smooth model ({why})", meta)
    return Verdict(Label.NOT_LC, f"a({worst.name}) = {worst.a_quotient} < -1 ({why})", meta)


def family_cascade(n: int, p: int, m: int) -> tuple[list[DiscrepancyRecord], Verdict]:
    """Discrepancies of the m exceptional divisors resolving ``F_m``.

    ``a(E_j; W, W_0) = jn - 1``, ``a(E_j; F_m) = -j``, all ``E_j`` invariant,
    so ``a(F_j; Y, Y_0) = j(n - p + 1) - 1``.
    """
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    _check_prime(p)
    records = [DiscrepancyRecord.build(f"E{j}", j * n - 1, -j, True, p) for j in range(1, m + 1)]
    return records, _cascade_verdict(records, "lc iff n+1 >= p")


def char3_cascade(p: int, r: int) -> tuple[list[DiscrepancyRecord], Verdict]:
    """Two divisors per round for ``y^3 d_x + x d_y + t^m d_z`` with ``m = p^r``."""
    _check_prime(p)
    if p <= 2 or r < 0:
        raise ValueError("need p > 2 and r >= 0")
    m = p**r
    records = []
    for i in range(1, m + 1):
        records.append(DiscrepancyRecord.build(f"E{i}", 3 * i - 2, 1 - i, True, p))
        records.append(DiscrepancyRecord.build(f"F{i}", 3 * i - 1, -i, True, p))
    return records, _cascade_verdict(records, "lc iff p = 3")


def ample_threshold(n: int, p: int) -> Fraction:
    """Smallest r/s excluded by ampleness: ``p - n - 1 + (r/s)(n+p) > 0``."""
    return Fraction(n + 1 - p, n + p)


def stable_volume(n: int, p: int, r: int, s: int) -> Fraction:
    """Volume ``np (r/s) (p - n - 1 + (r/s)(n+p))^n`` of the stable fibers.

    Only boundaries with ``K + B`` ample are admitted, i.e. ``r/s`` above
    :func:`ample_threshold`; below it the expression is not a volume.
    """
    _check_prime(p)
    if n < max(p, 3):
        raise ValueError(f"need n >= max(p, 3), got n={n}, p={p}")
    if r < 3 or s < 1:
        raise ValueError("need r >= 3 and s >= 1")
    x = Fraction(r, s)
    if x <= ample_threshold(n, p):
        raise ValueError(f"r/s = {x} <= {ample_threshold(n, p)}: K + B is not ample")
    return n * p * x * (p - n - 1 + x * (n + p)) ** n
