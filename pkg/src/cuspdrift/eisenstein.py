"""Non-holomorphic Eisenstein series, the level-1 scattering function, and
the counting integral M(T).

Two evaluation routes are provided.  The coset-sum route works for any
supported level in the absolute-convergence region Re s > 1: the sum over
Gamma_inf \\ Gamma_0(N) is organized by (c, d mod c) classes, the inner sum
over right translates gamma * gamma_inf^m is completed with Euler-Maclaurin
corrections, and for level 1 with trivial character the c > c_bound tail is
completed exactly through sum_c phi(c) c^{-2s} = zeta(2s-1)/zeta(2s), which
leaves only an exponentially small Poisson remainder.  The Fourier route
(level 1, trivial character) evaluates the expansion

    E(z,s) = y^s + phi(s) y^{1-s}
           + (4/xi(2s)) sqrt(y) sum_n n^{s-1/2} sigma_{1-2s}(n)
                                  K_{s-1/2}(2 pi n y) cos(2 pi n x)

and is valid for any s away from poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import mpmath as mp

from . import specfun
from .fuchsian import GroupDescriptor, coset_reps
from .specfun import PrecisionConfig, PoleError, DEFAULT_PRECISION


class EisensteinError(ValueError):
    pass


@dataclass(frozen=True)
class EisensteinConfig:
    c_bound: int = 300
    fourier_terms: int = 40
    min_height: float = 0.35
    m_direct: int = 16          # direct right-translate terms before EM tail
    margin: float = 0.1         # coset sums require Re s >= 1 + margin

    def __post_init__(self):
        if self.c_bound <= 0 or self.fourier_terms <= 0 or self.min_height <= 0:
            raise EisensteinError("config values must be positive")


DEFAULT_CONFIG = EisensteinConfig()


@dataclass(frozen=True)
class EisResult:
    value: complex
    tail_estimate: float

    def __complex__(self):
        return complex(self.value)


# ---------------------------------------------------------------------------
# coset tables


class CosetTable:
    """Numpy view of the (c, d mod c) coset classes with 0 < c <= c_bound."""

    def __init__(self, level: int, c_bound: int):
        self.level = level
        self.c_bound = c_bound
        clist = []
        dlist = []
        for c in range(level, c_bound + 1, level):
            if c == 1:
                dres = np.array([0], dtype=np.int64)
            else:
                dres = np.arange(c, dtype=np.int64)
                dres = dres[np.gcd(dres, c) == 1]
            clist.append(np.full(len(dres), c, dtype=np.int64))
            dlist.append(dres)
        if clist:
            self.c = np.concatenate(clist)
            self.d = np.concatenate(dlist)
        else:
            self.c = np.zeros(0, dtype=np.int64)
            self.d = np.zeros(0, dtype=np.int64)
        self.n_rows = len(self.c)
        self._reps = None

    def reps(self):
        """GroupElement representatives aligned with the row arrays."""
        if self._reps is None:
            full = coset_reps(GroupDescriptor(self.level), self.c_bound)
            by_key = {(g.c, g.d % g.c): g for g in full if g.c > 0}
            self._reps = [by_key[(int(c), int(d))]
                          for c, d in zip(self.c, self.d)]
        return self._reps


@lru_cache(maxsize=32)
def coset_table(level: int, c_bound: int) -> CosetTable:
    return CosetTable(level, c_bound)


def _totient_cumulative(c_bound: int) -> np.ndarray:
    phi = np.arange(c_bound + 1, dtype=np.int64)
    for p in range(2, c_bound + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


# ---------------------------------------------------------------------------
# single-point coset sum with Euler-Maclaurin tail completion


def _m_tail(c_arr, w_boundary, a2_arr, s):
    """sum_{m beyond the boundary} of ((c(x+m)+d)^2 + (cy)^2)^(-s), one side.

    Euler-Maclaurin with the B2 and B4 terms; the integral term is the
    large-|w| series of int (w^2 + A^2)^(-s) dw / c.
    """
    V = np.abs(w_boundary)
    A2 = a2_arr
    I = np.zeros(len(V), dtype=complex)
    binom = 1.0 + 0.0j
    for j in range(10):
        I += binom * np.power(A2, j) * np.power(V, 1 - 2 * s - 2 * j) / (2 * s + 2 * j - 1)
        binom *= (-s - j) / (j + 1)
    I = I / c_arr
    P = V * V + A2 + 0.0j
    h = np.power(P, -s)
    hp = -s * np.power(P, -s - 1) * 2 * V * c_arr
    h3 = (-s * (-s - 1) * (-s - 2) * np.power(P, -s - 3) * 8 * V ** 3
          - 12 * s * (-s - 1) * np.power(P, -s - 2) * V) * c_arr.astype(float) ** 3
    return I + h / 2 - hp / 12 + h3 / 720


def coset_sum_point(z: complex, s: complex, table: CosetTable,
                    row_weights=None, id_weight: complex = 1.0,
                    m_direct: int = 16, zeta_complete: bool = False,
                    cfg: PrecisionConfig = DEFAULT_PRECISION):
    """One high-accuracy evaluation of  id_weight * y^s + sum_rows w * sum_m Im(gamma(z+m))^s.

    Returns (value, tail_estimate).  zeta_complete adds the exact c > c_bound
    completion (valid only for unit weights at level 1).
    """
    x, y = z.real, z.imag
    if y <= 0:
        raise EisensteinError("coset sums need Im z > 0")
    sig = complex(s).real
    total = id_weight * np.power(y + 0j, s)
    c = table.c.astype(np.float64)
    d = table.d.astype(np.float64)
    w = np.ones(table.n_rows, dtype=complex) if row_weights is None else row_weights
    A2 = (c * y) ** 2
    ys = np.power(y + 0j, s)
    row_sum = np.zeros(table.n_rows, dtype=complex)
    for m in range(-m_direct, m_direct + 1):
        ww = c * (x + m) + d
        row_sum += np.power(ww * ww + A2 + 0j, -s)
    row_sum += _m_tail(c, c * (x + m_direct + 1) + d, A2, s)
    row_sum += _m_tail(c, c * (x - m_direct - 1) + d, A2, s)
    total += ys * np.dot(w, row_sum)

    C = table.c_bound
    if zeta_complete:
        if table.level != 1 or row_weights is not None:
            raise EisensteinError("zeta completion needs level 1 and unit weights")
        with mp.workdps(cfg.working_precision):
            ms = mp.mpc(s)
            zr = specfun.zeta(2 * ms - 1, cfg) / specfun.zeta(2 * ms, cfg)
            head = mp.mpc(0)
            phi_tot = _totient_cumulative(C)
            for cc in range(1, C + 1):
                head += int(phi_tot[cc]) * mp.power(cc, -2 * ms)
            Bs = mp.sqrt(mp.pi) * mp.gamma(ms - mp.mpf(1) / 2) / mp.gamma(ms)
            comp = Bs * mp.power(y, 1 - ms) * (zr - head)
        total += complex(comp)
        # Poisson remainder of the completed rows: e^{-2 pi y} scale per row
        tail = 12.0 * math.sqrt(y) * math.exp(-2 * math.pi * y) \
            * C ** (1 - 2 * sig) / max(2 * sig - 1, 0.1)
    else:
        # crude but honest bound on the discarded c > C rows
        level = table.level
        tail = (_bs_abs(s) * y ** (1 - sig) / level
                * C ** (2 - 2 * sig) / max(2 * sig - 2, 0.05))
        if row_weights is not None:
            wmax = float(np.max(np.abs(row_weights))) if len(w) else 1.0
            tail *= max(wmax, 1.0)
    return total, float(abs(tail))


def _bs_abs(s) -> float:
    with mp.workdps(25):
        ms = mp.mpc(s)
        return float(abs(mp.sqrt(mp.pi) * mp.gamma(ms - mp.mpf(1) / 2) / mp.gamma(ms)))


# ---------------------------------------------------------------------------
# batch coset sums (shared by the quadrature integrands)


def coset_sum_batch(points: np.ndarray, s: complex, table: CosetTable,
                    row_weights=None, id_weight=1.0,
                    m_direct: int = 16, deriv: bool = False,
                    chunk: int = 4_000_000):
    """Vectorized evaluation over an array of points.

    Returns E (and E_z when deriv=True) as arrays aligned with points, where
    E = id_weight * y^s + sum w_r Im(gamma(z+m))^s and E_z is its exact
    z-derivative, using d/dz Im(gamma z)^s = -(i s/2) Im^{s-1} / (cz+d)^2.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    x = pts.real
    y = pts.imag
    E = id_weight * np.power(y + 0j, s)
    Ez = (-0.5j * s) * id_weight * np.power(y + 0j, s - 1) if deriv else None
    mvals = np.arange(-m_direct, m_direct + 1)
    c_unique = np.unique(table.c)
    for cu in c_unique:
        mask = table.c == cu
        drow = table.d[mask].astype(np.float64)
        wrow = None if row_weights is None else row_weights[mask]
        # full translate set for this c: d + c*m
        dfull = (drow[None, :] + cu * mvals[:, None]).ravel()
        if row_weights is None:
            wfull = None
        else:
            wfull = np.tile(wrow, len(mvals))
        ncols = len(dfull)
        step = max(1, chunk // max(len(pts), 1))
        for lo in range(0, ncols, step):
            dd = dfull[lo: lo + step]
            wz = cu * pts[:, None] + dd[None, :]
            iq = y[:, None] / np.abs(wz) ** 2
            pw = np.power(iq + 0j, s - 1) if deriv else None
            if deriv:
                base = pw * iq
            else:
                base = np.power(iq + 0j, s)
            if wfull is None:
                E += base.sum(axis=1)
            else:
                E += base @ wfull[lo: lo + step]
            if deriv:
                dterm = (-0.5j * s) * pw / (wz * wz)
                if wfull is None:
                    Ez += dterm.sum(axis=1)
                else:
                    Ez += dterm @ wfull[lo: lo + step]
    return (E, Ez) if deriv else E


# ---------------------------------------------------------------------------
# public Eisenstein evaluators


def eisenstein_coset_sum(z: complex, s: complex, grp: GroupDescriptor,
                         char_weights=None, cfg: EisensteinConfig = DEFAULT_CONFIG,
                         prec: PrecisionConfig = DEFAULT_PRECISION) -> EisResult:
    """E(z, s, chi) for Re s > 1 by the completed coset sum.

    char_weights: optional per-row unitary weights chi_bar(gamma_row) aligned
    with coset_table(grp.level, cfg.c_bound); None means the trivial character.
    """
    sig = complex(s).real
    if sig < 1 + cfg.margin:
        raise EisensteinError(
            f"coset route needs Re s >= {1 + cfg.margin}, got {sig} "
            "(tail not summable at desk truncation)")
    table = coset_table(grp.level, cfg.c_bound)
    zeta_complete = (grp.level == 1 and char_weights is None)
    val, tail = coset_sum_point(z, s, table, row_weights=char_weights,
                                m_direct=cfg.m_direct,
                                zeta_complete=zeta_complete, cfg=prec)
    return EisResult(value=val, tail_estimate=tail)


def character_row_weights(table: CosetTable, fam, eps: float) -> np.ndarray:
    """chi_bar_eps(gamma) per table row for a forms.CharacterFamily."""
    sym = symbol_row_values(table, fam.form, fam.choice)
    return np.exp(-eps * sym)


_symbol_cache = {}


def symbol_row_values(table: CosetTable, form, choice) -> np.ndarray:
    """Modular symbols <gamma_row, omega(theta)> as a complex array.

    Vectorized through the antiderivative: for a representative with bottom
    row (c, d) and upper row (a, b), the period is F((a+i)/c) - F((-d+i)/c).
    """
    from .forms import AntiderivativeF, TWO_PI

    key = (id(table), id(form), round(choice.theta, 12))
    hit = _symbol_cache.get(key)
    if hit is not None:
        return hit
    F = AntiderivativeF(form)
    c = table.c.astype(np.float64)
    a = np.array([g.a for g in table.reps()], dtype=np.float64)
    d = table.d.astype(np.float64)
    cmax = float(c.max()) if len(c) else 1.0
    # truncation sanity at the lowest split height 1/cmax
    qa = math.exp(-TWO_PI / cmax)
    guard = form.m_count ** 0.7 * qa ** form.m_count / (1 - qa)
    if guard > 1e-10:
        raise EisensteinError(
            f"form needs more coefficients for symbols at c_bound={table.c_bound} "
            f"(guard {guard:.2g})")
    w_fore = (a + 1j) / c
    w_back = (-d + 1j) / c
    period = np.zeros(table.n_rows, dtype=complex)
    step = 4000
    for lo in range(0, table.n_rows, step):
        period[lo:lo + step] = (F.eval_many(w_fore[lo:lo + step])
                                - F.eval_many(w_back[lo:lo + step]))
    phase = choice.phase
    vals = -TWO_PI * 1j * (phase * period).real
    _symbol_cache[key] = vals
    return vals


def eisenstein_fourier(z: complex, s: complex,
                       cfg: EisensteinConfig = DEFAULT_CONFIG,
                       prec: PrecisionConfig = DEFAULT_PRECISION,
                       completed: bool = False):
    """Level-1 E(z,s) (trivial character) by the Fourier-Bessel expansion.

    completed=True returns xi(2s) E(z,s), the s <-> 1-s symmetric function,
    which is real on the critical line.
    """
    x, y = z.real, z.imag
    if y < cfg.min_height:
        raise EisensteinError(
            f"Fourier route needs Im z >= {cfg.min_height}, got {y}")
    with mp.workdps(prec.working_precision):
        ms = mp.mpc(s)
        if abs(ms - 1) < 1e-10:
            raise PoleError("E(z, s) pole at s = 1", location=1)
        xi2s = _xi(2 * ms, prec)
        xi2s1 = _xi(2 * ms - 1, prec)
        phi = xi2s1 / xi2s
        total = mp.power(y, ms) + phi * mp.power(y, 1 - ms)
        pref = 4 / xi2s * mp.sqrt(y)
        nmax = cfg.fourier_terms
        # coefficient scale e^{-2 pi n y}; stop once provably below tolerance
        tol = mp.mpf(prec.target_abs_tol) / 10
        n_needed = int(mp.ceil((mp.log(1 / tol) + 5) / (2 * mp.pi * y))) + 2
        nmax = min(nmax, max(n_needed, 3))
        for n in range(1, nmax + 1):
            sig_div = mp.mpc(0)
            for dd in range(1, n + 1):
                if n % dd == 0:
                    sig_div += mp.power(dd, 1 - 2 * ms)
            kv = specfun.bessel_k(ms - mp.mpf(1) / 2, float(2 * mp.pi * n * y), prec)
            term = (mp.power(n, ms - mp.mpf(1) / 2) * sig_div * kv
                    * mp.cos(2 * mp.pi * n * x))
            total += pref * term
        if completed:
            total *= xi2s
        return total


def _xi(w, prec: PrecisionConfig):
    """Completed zeta xi(w) = pi^{-w/2} Gamma(w/2) zeta(w)."""
    if abs(w) < 1e-12 or abs(w - 1) < 1e-12:
        raise PoleError(f"xi pole at w = {complex(w)}", location=complex(w))
    return (mp.power(mp.pi, -w / 2) * mp.gamma(w / 2) * specfun.zeta(w, prec))


# ---------------------------------------------------------------------------
# scattering function (level 1)


@dataclass(frozen=True)
class ScatteringFunction:
    """phi(s) = xi(2s-1)/xi(2s) for the full modular group."""

    level: int = 1

    def __call__(self, s, prec: PrecisionConfig = DEFAULT_PRECISION):
        return scattering_phi(s, prec)


def scattering_phi(s, prec: PrecisionConfig = DEFAULT_PRECISION):
    """phi(s) for level 1.  Pole at s = 1 (and at zeros of xi(2s))."""
    with mp.workdps(prec.working_precision):
        ms = mp.mpc(s)
        if abs(ms - 1) < 1e-12:
            raise PoleError("phi pole at s = 1", location=1)
        if abs(ms - mp.mpf(1) / 2) < 1e-12:
            return mp.mpc(-1)     # removable: residues of xi at 0 and 1 are -1, 1
        return _xi(2 * ms - 1, prec) / _xi(2 * ms, prec)


def scattering_logderiv(s, prec: PrecisionConfig = DEFAULT_PRECISION):
    """(phi'/phi)(s) from the analytic log-derivatives of Gamma and zeta.

    xi'/xi(w) = -log(pi)/2 + psi(w/2)/2 + zeta'(w)/zeta(w), and
    phi'/phi(s) = 2 xi'/xi(2s-1) - 2 xi'/xi(2s).
    """
    with mp.workdps(prec.working_precision):
        ms = mp.mpc(s)

        def xilog(w):
            return (-mp.log(mp.pi) / 2 + mp.psi(0, w / 2) / 2
                    + specfun.zeta_logderiv(w, prec))

        return 2 * xilog(2 * ms - 1) - 2 * xilog(2 * ms)


def weyl_M(T: float, prec: PrecisionConfig = DEFAULT_PRECISION,
           quad_tol: float = 1e-9):
    """M(T) = -(1/4 pi) int_{-T}^{T} (phi'/phi)(1/2 + i t) dt, level 1.

    The integrand is real and even in t; integration runs over [0, T] and is
    doubled.  scipy's Gauss-Kronrod adaptive rule does the quadrature.
    """
    from scipy.integrate import quad

    if T < 0:
        raise EisensteinError("T must be >= 0")
    if T == 0:
        return 0.0, 0.0
    imag_worst = 0.0

    def integrand(t):
        nonlocal imag_worst
        v = scattering_logderiv(mp.mpc(mp.mpf(1) / 2, t), prec)
        imag_worst = max(imag_worst, abs(float(v.imag)))
        return float(v.real)

    val, err = quad(integrand, 0.0, T, epsabs=quad_tol, epsrel=quad_tol, limit=200)
    if err > max(1e-6, 100 * quad_tol):
        raise EisensteinError(f"M(T) quadrature did not converge (err {err:.2g})")
    if imag_worst > 1e-8:
        raise EisensteinError(
            f"phi'/phi imaginary residue {imag_worst:.2g} on the critical line")
    return -2.0 * val / (4.0 * math.pi), err / (2 * math.pi)


def zero_mode(y: float, s: complex, grp: GroupDescriptor,
              char_weights=None, cfg: EisensteinConfig = DEFAULT_CONFIG,
              n_nodes: int = 32):
    """int_0^1 E(x + i y, s, chi) dx by the trapezoid rule (periodic in x).

    Uses the coset-sum evaluator, so this is an independent probe of the
    zero Fourier mode y^s + phi(s) y^{1-s}.
    """
    table = coset_table(grp.level, cfg.c_bound)
    zc = grp.level == 1 and char_weights is None
    total = 0.0 + 0.0j
    tails = 0.0
    for k in range(n_nodes):
        x = (k + 0.5) / n_nodes
        v, t = coset_sum_point(complex(x, y), s, table, row_weights=char_weights,
                               m_direct=cfg.m_direct, zeta_complete=zc)
        total += v
        tails = max(tails, t)
    return total / n_nodes, tails
