"""Deformation operators L1, L2, the golden-rule inner product, Dirichlet
series built from form coefficients, and the deformation-direction scan.

Conventions (all against the invariant measure dmu = y^{-2} dx dy):

    <f1 dz + f2 dzbar, g1 dz + g2 dzbar> = 2 y^2 (f1 conj(g1) + f2 conj(g2))
    delta(p dx + q dy) = -y^2 (p_x + q_y)
    L1 h = 4 pi i <dh, omega> - 2 pi i delta(omega) h
    L2 h = -8 pi^2 <omega, omega> h

For omega = omega(theta) = Re(e^{i theta} f dz) with f holomorphic the
divergence term vanishes identically (Cauchy-Riemann) and
<omega, omega> = y^2 |f|^2.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass

import numpy as np

from .forms import (HolCuspForm, MaassForm, OneFormChoice, eval_form,
                    eval_form_many as _eval_form_batch)
from .fuchsian import GroupDescriptor, GroupElement, coset_reps

TWO_PI = 2.0 * math.pi


class PerturbError(ValueError):
    pass


class CapabilityError(PerturbError):
    """Requested regime is out of numeric scope (e.g. continuation needed)."""


# ---------------------------------------------------------------------------
# pointwise pairing machinery


class FormPairing:
    """The displayed pairing and divergence on sampled 1-forms."""

    @staticmethod
    def pairing(f1, f2, g1, g2, y):
        return 2.0 * y * y * (f1 * np.conj(g1) + f2 * np.conj(g2))

    @staticmethod
    def divergence(p, q, z: complex, step: float = 1e-5):
        """delta(p dx + q dy) = -y^2 (p_x + q_y) by central differences."""
        y = z.imag
        if y - step <= 0:
            raise PerturbError("divergence stencil below the real axis")
        p_x = (p(z + step) - p(z - step)) / (2 * step)
        q_y = (q(z + 1j * step) - q(z - 1j * step)) / (2 * step)
        return -y * y * (p_x + q_y)

    @staticmethod
    def omega_components(f: HolCuspForm, choice: OneFormChoice, z: complex):
        """(dz, dzbar) components of omega(theta) = Re(e^{i theta} f dz)."""
        v = choice.phase * eval_form(f, z)
        return v / 2.0, np.conj(v) / 2.0

    @staticmethod
    def omega_xy(f: HolCuspForm, choice: OneFormChoice, z: complex):
        """(dx, dy) components: Re(w dz) = Re(w) dx - Im(w) dy."""
        v = choice.phase * eval_form(f, z)
        return v.real, -v.imag


def apply_L1(h, f: HolCuspForm, choice: OneFormChoice, z: complex,
             dh=None, step: float = 1e-6) -> complex:
    """L1 h at z.  h is a sampler; dh, when given, returns (h_z, h_zbar).

    Without dh the complex derivatives come from central differences.  The
    divergence term is exactly zero for omega(theta).
    """
    if dh is not None:
        h_z, h_zb = dh(z)
    else:
        if z.imag - step <= 0:
            raise PerturbError("finite-difference step reaches the real axis")
        h_x = (h(z + step) - h(z - step)) / (2 * step)
        h_y = (h(z + 1j * step) - h(z - 1j * step)) / (2 * step)
        h_z = (h_x - 1j * h_y) / 2
        h_zb = (h_x + 1j * h_y) / 2
    ftheta = choice.phase * eval_form(f, z)
    y = z.imag
    # 4 pi i <dh, omega> with <dh, omega> = y^2 (h_z conj(ftheta) + h_zbar ftheta)
    return 4j * math.pi * y * y * (h_z * np.conj(ftheta) + h_zb * ftheta)


def apply_L2(h, f: HolCuspForm, choice: OneFormChoice, z: complex) -> complex:
    """L2 h = -8 pi^2 y^2 |f|^2 h (theta drops out of |e^{i theta} f|)."""
    y = z.imag
    return -8 * math.pi ** 2 * y * y * abs(eval_form(f, z)) ** 2 * h(z)


# ---------------------------------------------------------------------------
# quadrature over the quotient


@dataclass(frozen=True)
class QuadratureDomain:
    """Truncated fundamental domain of Gamma_0(level) with a tensor mesh.

    The standard domain is realized as the level-1 domain F1 swept through
    the cosets of Gamma_0(level) in PSL_2(Z); integration runs in the
    coordinates (x, v = -1/y) where dmu = dx dv, with composite
    Gauss-Legendre cells.  Everything above height Y is discarded; the
    discarded region sits inside cusp neighborhoods where the integrands
    used here decay exponentially.
    """

    level: int = 1
    height: float = 4.0
    nx_cells: int = 10
    nv_cells: int = 10
    gl_nodes: int = 6

    def __post_init__(self):
        if self.height < 2:
            raise PerturbError("truncation height must be >= 2")

    def coset_maps(self):
        if self.level == 1:
            return [GroupElement(1, 0, 0, 1)]
        if not _is_prime(self.level):
            raise PerturbError("quadrature pullback supports level 1 or primes")
        maps = [GroupElement(1, 0, 0, 1)]
        for k in range(self.level):
            maps.append(GroupElement(0, -1, 1, k))
        return maps

    def base_nodes(self):
        """(points, weights) on F1 truncated at the height, in dmu."""
        xg, wg = np.polynomial.legendre.leggauss(self.gl_nodes)
        xg = 0.5 * (xg + 1.0)      # map to [0, 1]
        wg = 0.5 * wg
        pts = []
        wts = []
        for ix in range(self.nx_cells):
            x0, x1 = -0.5 + ix / self.nx_cells, -0.5 + (ix + 1) / self.nx_cells
            for ax, awx in zip(xg, wg):
                x = x0 + (x1 - x0) * ax
                ylow = math.sqrt(max(1.0 - x * x, 0.0))
                v0, v1 = -1.0 / ylow, -1.0 / self.height
                for iv in range(self.nv_cells):
                    va = v0 + (v1 - v0) * iv / self.nv_cells
                    vb = v0 + (v1 - v0) * (iv + 1) / self.nv_cells
                    for av, awv in zip(xg, wg):
                        v = va + (vb - va) * av
                        pts.append(complex(x, -1.0 / v))
                        wts.append((x1 - x0) * awx * (vb - va) * awv)
        return np.asarray(pts), np.asarray(wts)


def _is_prime(n):
    return n >= 2 and all(n % p for p in range(2, int(math.isqrt(n)) + 1))


def integrate_over_quotient(dom: QuadratureDomain, integrand_batch):
    """integral over Gamma_0(level)\\H of a level-invariant function.

    integrand_batch(points) -> values; called once per coset image batch.
    Returns (value, err_estimate) with the estimate from a coarser mesh.
    """
    fine = _integrate_once(dom, integrand_batch)
    coarse_dom = QuadratureDomain(dom.level, dom.height,
                                  max(2, (2 * dom.nx_cells) // 3),
                                  max(2, (2 * dom.nv_cells) // 3),
                                  dom.gl_nodes)
    coarse = _integrate_once(coarse_dom, integrand_batch)
    return fine, abs(fine - coarse)


def _integrate_once(dom: QuadratureDomain, integrand_batch):
    pts, wts = dom.base_nodes()
    total = 0.0 + 0.0j
    for g in dom.coset_maps():
        if g.c == 0 and g.a == 1 and g.b == 0:
            imgs = pts
        else:
            imgs = (g.a * pts + g.b) / (g.c * pts + g.d)
        total += np.dot(wts, np.asarray(integrand_batch(imgs), dtype=complex))
    return complex(total)


# ---------------------------------------------------------------------------
# golden-rule inner product


def maass_value_and_grad_batch(u: MaassForm, points):
    """(u, u_z, u_zbar) over an array of points, via the batched K evaluator.

    u_y needs K'; the order-recurrence K_nu'(w) = -(K_{nu-1} + K_{nu+1})/2
    keeps everything in terms of the K evaluator.
    """
    from . import specfun

    pts = np.asarray(points, dtype=complex)
    x, y = pts.real, pts.imag
    nu = complex(0.0, u.r)
    sy = np.sqrt(y)
    even = u.parity == "even"
    val = np.zeros(len(pts))
    ux = np.zeros(len(pts))
    uy = np.zeros(len(pts))
    for n, b in enumerate(u.coefficients, start=1):
        if b == 0.0:
            continue
        w = TWO_PI * n * y
        K = np.real(specfun.bessel_k_batch(nu, w))
        Kprime = np.real(-(specfun.bessel_k_batch(nu - 1, w)
                           + specfun.bessel_k_batch(nu + 1, w)) / 2)
        phase = TWO_PI * n * x
        osc = np.cos(phase) if even else np.sin(phase)
        dosc = -np.sin(phase) if even else np.cos(phase)
        val += 2 * b * sy * K * osc
        ux += 2 * b * sy * K * dosc * TWO_PI * n
        uy += 2 * b * (K / (2 * sy) + sy * Kprime * TWO_PI * n) * osc
    u_z = (ux - 1j * uy) / 2
    u_zb = (ux + 1j * uy) / 2
    return val, u_z, u_zb


def maass_derivative_samplers(u: MaassForm):
    """Scalar (value, grad) samplers wrapping the batched evaluator."""

    def value(z):
        v, _, _ = maass_value_and_grad_batch(u, [z])
        return float(v[0])

    def grad(z):
        _, uz, uzb = maass_value_and_grad_batch(u, [z])
        return complex(uz[0]), complex(uzb[0])

    return value, grad


def fermi_inner_quadrature(u: MaassForm, f: HolCuspForm, choice: OneFormChoice,
                           dom: QuadratureDomain, s: complex | None = None) -> tuple:
    """<L1 u, E(. , s)> over the quotient, s defaulting to 1/2 + i t_j.

    Level 1 uses the Fourier evaluator (any s off poles); level > 1 must
    stay in Re s > 1 where the coset sum converges, otherwise a
    CapabilityError points to the unfolded-series route.
    """
    if u.level != f.level and f.coefficients.count(0) != len(f.coefficients):
        raise PerturbError("level of the Maass form must match the cusp form")
    if s is None:
        s = complex(0.5, u.r)
    s = complex(s)
    level = u.level
    if level > 1 and s.real < 1.1:
        raise CapabilityError(
            "continuation of E below Re s = 1.1 is unavailable for level > 1; "
            "use the unfolded Dirichlet-series route")
    if all(b == 0.0 for b in u.coefficients):
        return 0.0 + 0.0j, 0.0

    if level == 1:
        from .eisenstein import eisenstein_fourier

        def E_batch(pts):
            return np.array([complex(eisenstein_fourier(complex(p), s)) for p in pts])
    else:
        from .eisenstein import coset_table, coset_sum_batch
        table = coset_table(level, 260)

        def E_batch(pts):
            return coset_sum_batch(np.asarray(pts), s, table, m_direct=20)

    def integrand(pts):
        pts = np.asarray(pts, dtype=complex)
        E = E_batch(pts)
        _, u_z, u_zb = maass_value_and_grad_batch(u, pts)
        ftheta = choice.phase * _eval_form_batch(f, pts)
        y = pts.imag
        l1u = 4j * math.pi * y * y * (u_z * np.conj(ftheta) + u_zb * ftheta)
        return l1u * np.conj(E)

    val, err = integrate_over_quotient(dom, integrand)
    # height-truncation tail: both u and f decay like e^{-2 pi y} in the cusp
    tail = math.exp(-TWO_PI * dom.height) * 50.0
    return val, err + tail


# ---------------------------------------------------------------------------
# Dirichlet series


@dataclass(frozen=True)
class DirichletSeriesValue:
    s: complex
    value: complex
    terms_used: int
    tail_estimate: float
    tail_model: tuple = ()      # (amplitude, exponent) of the fitted bound

    def __complex__(self):
        return complex(self.value)


def _fitted_tail(term_mags, terms_used, safety=5.0):
    """Power-law bound A n^-p fitted on the computed terms; integral tail."""
    n = np.arange(1, len(term_mags) + 1, dtype=float)
    keep = term_mags > 0
    keep[: len(keep) // 4] = False      # fit on the tail half of the data
    if keep.sum() < 8:
        keep = term_mags > 0
    if keep.sum() < 2:
        return 0.0, (0.0, 0.0)
    logs = np.log(term_mags[keep])
    A = np.vstack([np.ones(keep.sum()), np.log(n[keep])]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    amp, p = math.exp(coef[0]), -float(coef[1])
    # shift amplitude so the bound covers every computed term
    cover = float(np.max(term_mags[keep] / (amp * n[keep] ** (-p))))
    amp *= max(cover, 1.0) * safety
    if p <= 1.0:
        return math.inf, (amp, p)
    tail = amp * terms_used ** (1.0 - p) / (p - 1.0)
    return tail, (amp, p)


def rankin_selberg(u: MaassForm, f: HolCuspForm, s: complex,
                   terms: int) -> DirichletSeriesValue:
    """L(u (x) f, s) = sum a_n b_{-n} / n^{s+1/2}, Re s > 1."""
    s = complex(s)
    if s.real <= 1:
        raise PerturbError("rankin_selberg requires Re s > 1")
    avail = min(f.m_count, len(u.coefficients))
    if terms > avail:
        raise PerturbError(
            f"requested {terms} terms but only {avail} coefficients available")
    n = np.arange(1, terms + 1, dtype=float)
    a = np.asarray(f.coefficients[:terms], dtype=complex)
    sign = 1.0 if u.parity == "even" else -1.0
    b = sign * np.asarray(u.coefficients[:terms], dtype=float)
    term = a * b * np.power(n, -(s + 0.5))
    tail, model = _fitted_tail(np.abs(term), terms)
    return DirichletSeriesValue(s=s, value=complex(term.sum()), terms_used=terms,
                                tail_estimate=tail, tail_model=model)


def L_uF2(u: MaassForm, f: HolCuspForm, s: complex,
          terms: int) -> DirichletSeriesValue:
    """L(u (x) F^2, s): the inner convolution over k1 + k2 = n is exact.

    The n = 1 term is an empty sum; contributions start at n = 2.
    """
    s = complex(s)
    if s.real <= 1:
        raise PerturbError("L_uF2 requires Re s > 1")
    avail = min(f.m_count, len(u.coefficients))
    if terms > avail:
        raise PerturbError(
            f"requested {terms} terms but only {avail} coefficients available")
    k = np.arange(1, terms, dtype=float)
    ak = np.asarray(f.coefficients[: terms - 1], dtype=complex) / k
    conv = np.convolve(ak, ak)[: terms - 1]     # index j -> n = j + 2
    n = np.arange(2, terms + 1, dtype=float)
    sign = 1.0 if u.parity == "even" else -1.0
    b = sign * np.asarray(u.coefficients[1:terms], dtype=float)
    term = conv * b * np.power(n, -(s - 0.5))
    full = np.concatenate([[0.0], np.abs(term)])
    tail, model = _fitted_tail(full, terms)
    return DirichletSeriesValue(s=s, value=complex(term.sum()), terms_used=terms,
                                tail_estimate=tail, tail_model=model)


def convolution_term(f: HolCuspForm, n: int) -> complex:
    """sum_{k1+k2=n} (a_k1/k1)(a_k2/k2); empty (0) for n < 2."""
    total = 0.0 + 0.0j
    for k1 in range(1, n):
        k2 = n - k1
        total += (f.coefficients[k1 - 1] / k1) * (f.coefficients[k2 - 1] / k2)
    return total


# ---------------------------------------------------------------------------
# the golden-rule shift and the direction scan


def fermi_shift(inner_values, t_j: float) -> float:
    """Re shat''(0) = -(1/4 t_j^2) sum |<L1 u_k, E>|^2; always <= 0."""
    if t_j == 0:
        raise PerturbError("the golden-rule formula requires t_j > 0 "
                           "(eigenvalue above 1/4)")
    return -sum(abs(v) ** 2 for v in inner_values) / (4.0 * t_j ** 2)


def direction_scan(thetas, functional, zero_rel_tol: float = 1e-8):
    """Evaluate a functional linear in omega(theta) over a theta grid.

    functional(OneFormChoice) -> complex.  Returns a list of rows
    (theta, value, is_zero); zeros are flagged relative to the scan scale.
    """
    thetas = list(thetas)
    if not thetas:
        raise PerturbError("theta grid must be nonempty")
    values = [complex(functional(OneFormChoice(t))) for t in thetas]
    scale = max((abs(v) for v in values), default=0.0)
    rows = []
    for t, v in zip(thetas, values):
        rows.append((t, v, scale > 0 and abs(v) <= zero_rel_tol * scale))
    return rows


# ---------------------------------------------------------------------------
# toy unfolding: sum over the group of a compactly supported bump


def smooth_bump(center: float, halfwidth: float):
    """C-infinity bump supported on [center - halfwidth, center + halfwidth]."""
    def b(t):
        u = (t - center) / halfwidth
        out = np.zeros_like(np.asarray(u, dtype=float))
        inside = np.abs(u) < 1.0
        ui = np.asarray(u)[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
        return out if np.ndim(u) else float(out)
    return b


@dataclass(frozen=True)
class BoxBump:
    """psi(z) = bump_x(x) * bump_y(y), supported in (0,1) x [y0, y1]."""

    x_center: float
    x_halfwidth: float
    y_center: float
    y_halfwidth: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        bx = smooth_bump(self.x_center, self.x_halfwidth)(z.real)
        by = smooth_bump(self.y_center, self.y_halfwidth)(z.imag)
        return bx * by

    @property
    def y_low(self):
        return self.y_center - self.y_halfwidth

    @property
    def y_high(self):
        return self.y_center + self.y_halfwidth


def automorphized_bump(psi: BoxBump, grp: GroupDescriptor, y_floor: float = 0.7):
    """h(points) = sum over gamma in Gamma of psi(gamma z), a finite smooth sum.

    Only group elements that can land inside the support contribute:
    Im(gamma z) = y/|cz+d|^2 must hit [y_low, y_high], which bounds c and d
    once the evaluation points are known to satisfy Im z >= y_floor.
    Returns a vectorized sampler over arrays of points.
    """
    from .fuchsian import _complete_row

    N = grp.level
    cmax = int(1.0 / math.sqrt(y_floor * psi.y_low)) + 1
    candidates = []
    for c in (range(N, cmax + 1, N) if N > 1 else range(1, cmax + 1)):
        rad = math.sqrt(1.0 / (y_floor * psi.y_low))   # |x + d/c| <= rad/c with margin
        dspan = int(math.ceil(c * 0.5 + rad)) + 1
        for d in range(-dspan, dspan + 1):
            if math.gcd(c, d) == 1:
                candidates.append(_complete_row(c, d))

    def h(points):
        pts = np.asarray(points, dtype=complex)
        if np.any(pts.imag < y_floor - 1e-12):
            raise PerturbError(f"bump sampler built for Im z >= {y_floor}")
        total = np.zeros(pts.shape, dtype=float)
        m_lo = math.floor(psi.x_center - psi.x_halfwidth - 0.5) - 1
        m_hi = math.ceil(psi.x_center + psi.x_halfwidth + 0.5) + 1

        def add_block(w):
            nonlocal total
            yy = w.imag
            live = (psi.y_low <= yy) & (yy <= psi.y_high)
            if not np.any(live):
                return
            for m in range(m_lo, m_hi + 1):
                total[live] += psi(w[live] + m)

        add_block(pts)
        for g in candidates:
            add_block((g.a * pts + g.b) / (g.c * pts + g.d))
        return total

    return h


def _discriminant_coeffs(count: int = 48) -> np.ndarray:
    """q-expansion of Delta = q prod (1-q^n)^24 (Ramanujan tau values)."""
    e = np.zeros(count + 1, dtype=np.int64)
    k = 0
    while True:
        done = True
        for kk in (k, -k) if k else (0,):
            g = kk * (3 * kk - 1) // 2
            if g <= count:
                e[g] += (-1) ** (kk % 2)
                done = False
        if done and k > 2:
            break
        k += 1
    p = np.array([1.0])
    e = e.astype(float)
    for _ in range(24):
        p = np.convolve(p, e)[: count + 1]
    out = np.zeros(count + 1)
    out[1:] = p[:count]         # the leading q shift
    return out


_DELTA_COEFFS = None


def invariant_weight_function(c0: float = 1.0, c1: float = 0.0):
    """g(z) = c0 + c1 * 1e6 * y^12 |Delta(z)|^2, exactly PSL2(Z)-invariant.

    Delta has weight 12, so y^12 |Delta|^2 is invariant; the truncated
    q-series is exact far below any tolerance used here for y >= 0.7.
    """
    global _DELTA_COEFFS
    if _DELTA_COEFFS is None:
        _DELTA_COEFFS = _discriminant_coeffs()

    coeffs = _DELTA_COEFFS

    def g(points):
        pts = np.asarray(points, dtype=complex)
        q = np.exp(TWO_PI * 1j * pts)
        acc = np.zeros_like(q)
        for cn in coeffs[::-1]:
            acc = acc * q + cn
        return c0 + c1 * 1e6 * pts.imag ** 12 * np.abs(acc) ** 2

    return g


def strip_integral(psi: BoxBump, g_values, gl_nodes: int = 24) -> complex:
    """integral over the strip of psi * g dmu, by tensor Gauss-Legendre on
    the support box.  g_values(points)->values must be Gamma-invariant."""
    xg, wg = np.polynomial.legendre.leggauss(gl_nodes)
    x0, x1 = psi.x_center - psi.x_halfwidth, psi.x_center + psi.x_halfwidth
    y0, y1 = psi.y_low, psi.y_high
    xs = 0.5 * (x1 - x0) * (xg + 1) + x0
    ys = 0.5 * (y1 - y0) * (xg + 1) + y0
    X, Y = np.meshgrid(xs, ys)
    pts = (X + 1j * Y).ravel()
    W = np.outer(wg, wg).ravel() * 0.25 * (x1 - x0) * (y1 - y0)
    vals = np.asarray(g_values(pts), dtype=complex)
    integ = psi(pts) * vals / pts.imag ** 2
    return complex(np.dot(W, integ))
