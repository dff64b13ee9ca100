"""Weight-2 holomorphic cusp forms, their antiderivatives, modular symbols,
Maass-form coefficient records, and the one-parameter character family.

The base point for all period integrals is fixed at i*infinity.  The real
invariant 1-form attached to a holomorphic form f and an angle theta is

    omega(theta) = Re(e^{i theta} f(z) dz),

with omega_1 = omega(0) and omega_2 = omega(pi/2).  The compactly supported
cohomology representative that the theory uses is replaced by omega itself
throughout: the two differ by an exact form, modular symbols only see the
cohomology class, and every integral taken against omega converges because
f is cuspidal.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, field

import numpy as np

from .fuchsian import GroupDescriptor, GroupElement, T_TRANSLATION, is_member


TWO_PI = 2.0 * math.pi


class FormsError(ValueError):
    pass


class CoefficientFileError(FormsError):
    def __init__(self, message, line_no=None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class TruncationError(FormsError):
    pass


# ---------------------------------------------------------------------------
# coefficient records


@dataclass(frozen=True)
class HolCuspForm:
    """Holomorphic weight-2 cusp form given by Fourier coefficients a_1..a_M."""

    level: int
    coefficients: tuple          # a_n, n = 1..M
    provenance: str = "computed"

    @property
    def m_count(self):
        return len(self.coefficients)

    def coeff_array(self):
        return np.asarray(self.coefficients, dtype=complex)


@dataclass(frozen=True)
class MaassForm:
    """Maass cusp form record: spectral parameter t_j, parity, coefficients b_n.

    lambda_j = 1/4 + t_j^2 and s_j = 1/2 + i t_j.  b_{-n} = b_n for even
    parity and -b_n for odd.  The L^2-normalization claim of the data source
    is carried as an attribute and never recomputed.
    """

    level: int
    r: float                     # t_j > 0
    parity: str                  # "even" | "odd"
    coefficients: tuple          # b_n, n = 1..M, real
    provenance: str = "ingested"
    l2_normalized: bool = True

    def __post_init__(self):
        if self.r <= 0:
            raise FormsError("spectral parameter must be positive")
        if self.parity not in ("even", "odd"):
            raise FormsError(f"parity must be 'even' or 'odd', got {self.parity!r}")

    @property
    def s_j(self):
        return complex(0.5, self.r)

    @property
    def eigenvalue(self):
        return 0.25 + self.r ** 2

    def b_minus(self, n: int) -> float:
        """b_{-n} resolved by parity from the stored b_n."""
        b = self.coefficients[n - 1]
        return b if self.parity == "even" else -b


@dataclass(frozen=True)
class OneFormChoice:
    """Direction in the real span of omega_1, omega_2: omega(theta)."""

    theta: float = 0.0

    @classmethod
    def omega1(cls):
        return cls(0.0)

    @classmethod
    def omega2(cls):
        return cls(math.pi / 2)

    @property
    def phase(self) -> complex:
        return cmath.exp(1j * self.theta)


@dataclass(frozen=True)
class ModularSymbolValue:
    """Purely imaginary period pairing; stored as its imaginary part."""

    imag: float

    @property
    def value(self) -> complex:
        return complex(0.0, self.imag)


# ---------------------------------------------------------------------------
# eta product: the level-11 weight-2 form eta(z)^2 eta(11z)^2


def _euler_function_coeffs(m_count: int) -> np.ndarray:
    """Coefficients of prod(1-q^n) up to q^m_count (pentagonal numbers)."""
    e = np.zeros(m_count + 1, dtype=np.int64)
    k = 0
    while True:
        for kk in (k, -k) if k else (0,):
            g = kk * (3 * kk - 1) // 2
            if g > m_count:
                continue
            e[g] += (-1) ** (kk % 2)
        k += 1
        if k * (3 * k - 1) // 2 > m_count and k * (3 * k + 1) // 2 > m_count:
            break
    return e


def _poly_mul_trunc(p: np.ndarray, q: np.ndarray, m_count: int) -> np.ndarray:
    out = np.convolve(p, q)[: m_count + 1]
    return out


def eta_product_coeffs(level: int, count: int, provenance="eta(z)^2 eta(11z)^2") -> HolCuspForm:
    """q-expansion of eta(z)^2 eta(11z)^2, the weight-2 newform of level 11."""
    if level != 11:
        raise FormsError("the eta-product construction is wired for level 11")
    if count < 1:
        raise FormsError("count must be >= 1")
    m = count  # product carries q^1 * (series in q), so degree count suffices
    e1 = _euler_function_coeffs(m)
    e11 = np.zeros(m + 1, dtype=np.int64)
    e11[:: 11] = _euler_function_coeffs(m // 11)[: m // 11 + 1]
    sq1 = _poly_mul_trunc(e1, e1, m)
    sq11 = _poly_mul_trunc(e11, e11, m)
    prod = _poly_mul_trunc(sq1, sq11, m)
    # shift by the leading q from the eta weights: a_n = prod[n-1]
    coeffs = tuple(int(prod[n - 1]) for n in range(1, count + 1))
    return HolCuspForm(level=11, coefficients=coeffs, provenance=provenance)


# ---------------------------------------------------------------------------
# evaluation with tail control


def _tail_bound_fourier(m_count: int, q_abs: float, weight_half_power: float,
                        safety: float) -> float:
    """Bound safety * sum_{n>M} d(n) n^p |q|^n with d(n) <= 3 n^{0.2}."""
    if q_abs >= 1.0:
        return math.inf
    p = weight_half_power + 0.2
    total = 0.0
    qn = q_abs ** (m_count + 1)
    for n in range(m_count + 1, m_count + 201):
        total += n ** p * qn
        qn *= q_abs
    # geometric remainder from n = M+201 on, with slowly varying power factor
    total += (m_count + 201) ** p * qn / (1.0 - q_abs)
    return 3.0 * safety * total


def eval_form(f: HolCuspForm, z: complex, tol: float = 1e-12,
              safety: float = 2.0) -> complex:
    """f(z) by the truncated Fourier series; errors out if the tail bound
    (|a_n| <= safety * d(n) sqrt(n) model) exceeds tol."""
    y = z.imag
    if y <= 0:
        raise FormsError("eval_form requires Im z > 0")
    q_abs = math.exp(-TWO_PI * y)
    tail = _tail_bound_fourier(f.m_count, q_abs, 0.5, safety)
    if tail > tol:
        raise TruncationError(
            f"tail estimate {tail:.3g} exceeds tolerance {tol:.3g} at Im z = {y:.4g}; "
            f"increase the coefficient count beyond M = {f.m_count}")
    n = np.arange(1, f.m_count + 1)
    q_pows = np.exp(TWO_PI * 1j * n * z)
    return complex(np.dot(f.coeff_array(), q_pows))


def eval_form_many(f: HolCuspForm, z: np.ndarray) -> np.ndarray:
    """Vectorized f over an array of points (Horner in q, no tail check)."""
    q = np.exp(TWO_PI * 1j * np.asarray(z, dtype=complex))
    acc = np.zeros_like(q)
    for an in f.coeff_array()[::-1]:
        acc = acc * q + an
    return acc * q


def eval_form_deriv(f: HolCuspForm, z: complex, tol: float = 1e-12) -> complex:
    """f'(z) (used by finite-difference cross-checks)."""
    y = z.imag
    if y <= 0:
        raise FormsError("eval_form_deriv requires Im z > 0")
    n = np.arange(1, f.m_count + 1)
    q_pows = np.exp(TWO_PI * 1j * n * z)
    return complex(np.dot(f.coeff_array() * (TWO_PI * 1j * n), q_pows))


@dataclass(frozen=True)
class AntiderivativeF:
    """F(z) = integral_{i inf}^z f dw = sum a_n/(2 pi i n) q^n; F -> 0 at i*inf."""

    form: HolCuspForm
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = np.arange(1, self.form.m_count + 1)
        w = self.form.coeff_array() / (TWO_PI * 1j * n)
        object.__setattr__(self, "_weights", w)

    def __call__(self, z: complex, tol: float = 1e-12) -> complex:
        y = z.imag
        if y <= 0:
            raise FormsError("F evaluation requires Im z > 0")
        q_abs = math.exp(-TWO_PI * y)
        tail = _tail_bound_fourier(self.form.m_count, q_abs, -0.5, 2.0) / TWO_PI
        if tail > tol:
            raise TruncationError(
                f"tail estimate {tail:.3g} exceeds tolerance {tol:.3g} for F at "
                f"Im z = {y:.4g}; increase M beyond {self.form.m_count}")
        n = np.arange(1, self.form.m_count + 1)
        return complex(np.dot(self._weights, np.exp(TWO_PI * 1j * n * z)))

    def eval_many(self, z: np.ndarray) -> np.ndarray:
        """Vectorized F over an array of points (no per-point tail check).

        Horner evaluation in q = e^{2 pi i z}: one complex multiply per
        coefficient per point instead of a full exp matrix.
        """
        q = np.exp(TWO_PI * 1j * np.asarray(z, dtype=complex))
        acc = np.zeros_like(q)
        for wn in self._weights[::-1]:
            acc = acc * q + wn
        return acc * q


# ---------------------------------------------------------------------------
# modular symbols


def _period(F: AntiderivativeF, g: GroupElement, tol: float) -> complex:
    """integral_{i inf}^{g(i inf)} f dz = F(w) - F(g^{-1} w).

    The split point w sits on the geodesic from i*inf to g(i inf) at the
    height that equalizes Im w and Im g^{-1}w (both equal 1/|c|).
    """
    if g.c == 0:
        return 0.0 + 0.0j
    c = g.c
    vals = []
    for scale in (1.0, 1.7):     # two independent split points
        h = scale / c
        w = complex(g.a / c, h)
        w_back = g.inv().apply(w)
        vals.append(F(w, tol=tol) - F(w_back, tol=tol))
    if abs(vals[0] - vals[1]) > 10 * max(tol, 1e-13) * 10:
        raise FormsError(
            f"period split-point disagreement {abs(vals[0]-vals[1]):.3g} for {g}")
    return vals[0]


def modular_symbol(f: HolCuspForm, choice: OneFormChoice, g: GroupElement,
                   tol: float = 1e-12, _F_cache={}) -> ModularSymbolValue:
    """<gamma, omega(theta)> = -2 pi i * Re(e^{i theta} * period(gamma)).

    Purely imaginary; vanishes on parabolic elements and is additive
    (checked in the test suite, not here).
    """
    if not is_member(g, GroupDescriptor(f.level)):
        raise FormsError(f"{g} is not in Gamma_0({f.level})")
    key = id(f)
    F = _F_cache.get(key)
    if F is None:
        F = AntiderivativeF(f)
        _F_cache[key] = F
    p = _period(F, g, tol)
    return ModularSymbolValue(imag=-TWO_PI * (choice.phase * p).real)


@dataclass(frozen=True)
class CharacterFamily:
    """chi_eps(gamma) = exp(eps * <gamma, omega(theta)>), unitary for real eps."""

    form: HolCuspForm
    choice: OneFormChoice

    def symbol(self, g: GroupElement) -> ModularSymbolValue:
        return modular_symbol(self.form, self.choice, g)

    def __call__(self, eps: float, g: GroupElement) -> complex:
        return cmath.exp(eps * self.symbol(g).value)


def character(fam: CharacterFamily, eps: float, g: GroupElement) -> complex:
    return fam(eps, g)


# ---------------------------------------------------------------------------
# coefficient files


def save_coefficients(record, path):
    """Write a HolCuspForm or MaassForm in the plain-text exchange format."""
    lines = []
    if isinstance(record, HolCuspForm):
        lines.append("# type=holomorphic")
        lines.append(f"# level={record.level}")
        lines.append("# weight=2")
    elif isinstance(record, MaassForm):
        lines.append("# type=maass")
        lines.append(f"# level={record.level}")
        lines.append(f"# r={record.r!r}")
        lines.append(f"# parity={record.parity}")
    else:
        raise FormsError(f"cannot serialize {type(record).__name__}")
    lines.append(f"# provenance={record.provenance}")
    for n, v in enumerate(record.coefficients, start=1):
        if isinstance(v, complex):
            if v.imag == 0:
                v = v.real
            else:
                raise FormsError("file format stores real coefficients only")
        lines.append(f"{n} {float(v)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_coefficients(path):
    """Parse a coefficient file into a HolCuspForm or MaassForm."""
    header = {}
    coeffs = []
    expected_n = 1
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, _, v = body.partition("=")
                    header[k.strip()] = v.strip()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CoefficientFileError(
                    f"expected 'n value', got {line!r}", line_no)
            try:
                n = int(parts[0])
            except ValueError:
                raise CoefficientFileError(f"bad index {parts[0]!r}", line_no)
            if n != expected_n:
                raise CoefficientFileError(
                    f"missing coefficient index {expected_n} (file jumps to {n})",
                    line_no)
            try:
                v = float(parts[1])
            except ValueError:
                raise CoefficientFileError(f"non-numeric value {parts[1]!r}", line_no)
            coeffs.append(v)
            expected_n += 1
    if "type" not in header:
        raise CoefficientFileError("missing 'type' header")
    if "level" not in header:
        raise CoefficientFileError("missing 'level' header")
    level = int(header["level"])
    provenance = header.get("provenance", str(path))
    if header["type"] == "holomorphic":
        if header.get("weight") != "2":
            raise CoefficientFileError("holomorphic files require weight=2")
        return HolCuspForm(level=level, coefficients=tuple(coeffs),
                           provenance=provenance)
    if header["type"] == "maass":
        if "r" not in header:
            raise CoefficientFileError("maass files require an 'r' header")
        if "parity" not in header:
            raise CoefficientFileError("maass files require a 'parity' header")
        return MaassForm(level=level, r=float(header["r"]),
                         parity=header["parity"], coefficients=tuple(coeffs),
                         provenance=provenance)
    raise CoefficientFileError(f"unknown type {header['type']!r}")


# ---------------------------------------------------------------------------
# Maass-form evaluation and the automorphy residual quality gauge


def eval_maass(u: MaassForm, z: complex, bessel=None) -> float:
    """u(z) from the truncated Bessel-Fourier expansion (real-valued form).

    even: u = sum 2 b_n sqrt(y) K_{i r}(2 pi n y) cos(2 pi n x)
    odd:  u = sum 2 b_n sqrt(y) K_{i r}(2 pi n y) sin(2 pi n x)
    """
    from . import specfun
    x, y = z.real, z.imag
    if y <= 0:
        raise FormsError("eval_maass requires Im z > 0")
    kfun = bessel or (lambda n: float(specfun.bessel_k(complex(0, u.r), TWO_PI * n * y).real))
    total = 0.0
    osc = math.cos if u.parity == "even" else math.sin
    sy = math.sqrt(y)
    for n, b in enumerate(u.coefficients, start=1):
        if b == 0.0:
            continue
        total += 2.0 * b * sy * kfun(n) * osc(TWO_PI * n * x)
    return total


def maass_residual(u: MaassForm, points, generators=None, min_height: float = 0.4,
                   tol_trunc: float = 1e-9) -> float:
    """max over sample points and group generators of |u(gz) - u(z)|.

    The truncation must place the neglected Bessel tail below tol_trunc at
    every evaluation height, otherwise an error is raised.
    """
    from . import specfun
    if generators is None:
        if u.level == 1:
            from .fuchsian import S_INVERSION
            generators = [T_TRANSLATION, S_INVERSION]
        else:
            generators = [T_TRANSLATION,
                          GroupElement(1, 0, u.level, 1)]
    evals = []
    for z in points:
        for g in generators:
            evals.append((z, g))
    heights = [min(z.imag, g.apply(z).imag) for z, g in evals]
    ymin = min(heights)
    if ymin < min_height:
        raise FormsError(f"sample height {ymin:.4g} below floor {min_height}")
    M = len(u.coefficients)
    bmax = max((abs(b) for b in u.coefficients), default=0.0)
    tail = 2.0 * bmax * math.sqrt(10.0) * math.exp(-TWO_PI * (M + 1) * ymin) * (M + 1)
    if tail > tol_trunc:
        raise TruncationError(
            f"Bessel truncation tail {tail:.3g} above {tol_trunc:.3g}; "
            f"need more than M = {M} coefficients at height {ymin:.3g}")
    worst = 0.0
    for z, g in evals:
        diff = abs(eval_maass(u, g.apply(z)) - eval_maass(u, z))
        worst = max(worst, diff)
    return worst
