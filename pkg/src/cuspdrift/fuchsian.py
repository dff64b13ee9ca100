"""Integer-matrix machinery for the Hecke congruence groups Gamma_0(N).

Group elements are 2x2 unimodular integer matrices identified with their
negatives (PSL_2(Z) convention).  Everything here is exact integer
arithmetic; entries are Python ints and never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class FuchsianError(ValueError):
    pass


@dataclass(frozen=True)
class GroupElement:
    """Unimodular integer matrix (a, b; c, d) modulo sign.

    The stored representative has c > 0, or c == 0 and a > 0.
    """

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise FuchsianError(
                f"determinant must be 1, got {self.a * self.d - self.b * self.c}")
        if self.c < 0 or (self.c == 0 and self.a < 0):
            object.__setattr__(self, "a", -self.a)
            object.__setattr__(self, "b", -self.b)
            object.__setattr__(self, "c", -self.c)
            object.__setattr__(self, "d", -self.d)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inv(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def apply(self, z: complex) -> complex:
        """Linear fractional action on a point of the upper half-plane."""
        return (self.a * z + self.b) / (self.c * z + self.d)

    def apply_cusp(self, q):
        """Action on a cusp: a Fraction, or None standing for infinity."""
        if q is None:
            if self.c == 0:
                return None
            return Fraction(self.a, self.c)
        num = self.a * q.numerator + self.b * q.denominator
        den = self.c * q.numerator + self.d * q.denominator
        if den == 0:
            return None
        return Fraction(num, den)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)

    def __repr__(self):
        return f"[{self.a} {self.b}; {self.c} {self.d}]"


IDENTITY = GroupElement(1, 0, 0, 1)
T_TRANSLATION = GroupElement(1, 1, 0, 1)   # z -> z + 1, generator of the cusp stabilizer
S_INVERSION = GroupElement(0, -1, 1, 0)    # z -> -1/z


@dataclass(frozen=True)
class GroupDescriptor:
    """Hecke congruence group Gamma_0(level); level 1 is the full modular group."""

    level: int = 1

    def __post_init__(self):
        if self.level < 1:
            raise FuchsianError(f"level must be >= 1, got {self.level}")


def is_member(g: GroupElement, grp: GroupDescriptor) -> bool:
    """Membership in Gamma_0(N): the lower-left entry is divisible by N."""
    return g.c % grp.level == 0


def _complete_row(c: int, d: int) -> GroupElement:
    """Extend a coprime bottom row (c, d) to a determinant-1 matrix."""
    g, x, y = _xgcd(d, c)
    if g != 1:
        raise FuchsianError(f"bottom row ({c}, {d}) not coprime")
    # x*d + y*c = 1, so (x, -y; c, d) has determinant 1
    return GroupElement(x, -y, c, d)


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


@dataclass(frozen=True)
class CosetList:
    """Representatives of Gamma_inf \\ Gamma_0(N), one per class (c, d mod c).

    Classes are enumerated by c in [0, bound] with N | c; for c > 0 the
    residues d mod c run over units, and (a, b) is completed by the extended
    Euclidean relation.  The identity represents the c = 0 class.
    """

    level: int
    bound: int
    reps: tuple

    def __len__(self):
        return len(self.reps)

    def __iter__(self):
        return iter(self.reps)


def coset_reps(grp: GroupDescriptor, c_bound: int) -> CosetList:
    """Enumerate coset representatives with 0 <= c <= c_bound."""
    if c_bound < 0:
        raise FuchsianError("c_bound must be >= 0")
    N = grp.level
    reps = [IDENTITY]
    for c in range(N, c_bound + 1, N):
        for d in range(c):
            if math.gcd(c, d) == 1:
                reps.append(_complete_row(c, d))
    return CosetList(level=N, bound=c_bound, reps=tuple(reps))


def coset_key(g: GroupElement):
    """Class label of g in the (c, d mod c) enumeration used by coset_reps."""
    if g.c == 0:
        return (0, 0)
    return (g.c, g.d % g.c)


def reduce_to_fundamental(z: complex, max_iter: int = 10_000):
    """Reduce z into the standard level-1 fundamental domain.

    Returns (z', g) with g*z = z', |Re z'| <= 1/2 and |z'| >= 1.
    """
    if z.imag <= 0:
        raise FuchsianError(f"point must lie in the upper half-plane, got {z!r}")
    g = IDENTITY
    for _ in range(max_iter):
        n = round(z.real)
        if n != 0:
            z = z - n
            g = GroupElement(1, -n, 0, 1) * g
        r2 = z.real * z.real + z.imag * z.imag
        if r2 < 1.0 - 1e-15:
            z = -1 / z
            g = S_INVERSION * g
        else:
            break
    else:
        raise FuchsianError("fundamental-domain reduction did not terminate")
    return z, g


def in_fundamental_domain(z: complex, tol: float = 1e-12) -> bool:
    return (abs(z.real) <= 0.5 + tol) and (z.real ** 2 + z.imag ** 2 >= 1 - tol)


def cusp_list(grp: GroupDescriptor):
    """Inequivalent cusps, as Fractions plus None for infinity.

    Supported for level 1 (single cusp) and prime level p (infinity and 0).
    """
    N = grp.level
    if N == 1:
        return (None,)
    if _is_prime(N):
        return (None, Fraction(0, 1))
    raise FuchsianError(f"cusp enumeration supports level 1 or prime levels, got {N}")


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in range(2, int(math.isqrt(n)) + 1):
        if n % p == 0:
            return False
    return True
