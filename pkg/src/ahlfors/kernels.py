"""Closed-form kernels on the cut plane and the asymptotic predictors.

The S-kind normalization carries the Ahlfors function in closed form: with

    Omega(z) = (1/sqrt(-z)) * prod_j sqrt((z - a_j)/(z - b_j))

(analytic off E, positive on the negative axis), the extremal function for
the derivative problem at z0 is a two-term Moebius expression in Omega, and
its derivative modulus at z0 is Im Omega(z0) / (2 Im z0 |Omega(z0)|).  The
half-period variants Omega_eps flip gap factors; scanning them shows the
all-plus branch minimizes Im Omega/|Omega|, which is the certificate that the
canonical branch solves the problem.

The predictors Y (complex point) and the real-gap limit combine Green
function sums over an inverted divisor with Robin constants; they are
predictions under test, validated against the LP oracle, never the other way
around.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .abelian import CharacterVector, character_of_point, radical
from .geometry import BandSystem, GeometryError
from .potential import green_at_infinity, green_real_pole, robin_at


def omega(E, z, eps=None):
    """Omega_eps(z) for an unbounded (S-kind) system, canonical eps = all +1.

    Branch fixed by Omega(x) > 0 on the negative axis; analytic off the
    bands; purely imaginary on them.  eps_k = -1 multiplies by
    (z - b_k)/(z - a_k), flipping the k-th square-root factor.
    """
    if E.kind != "S":
        raise GeometryError("Omega is defined for unbounded systems")
    z = np.asarray(z, dtype=complex)
    ex = -0.5 * np.log(-z)
    for a, b in E.gaps:
        ex = ex + 0.5 * (np.log(z - a) - np.log(z - b))
    out = np.exp(ex)
    if eps is not None:
        if len(eps) != E.g:
            raise GeometryError("sign vector length must equal g")
        for (a, b), e in zip(E.gaps, eps):
            if e == -1:
                out = out * (z - b) / (z - a)
            elif e != 1:
                raise GeometryError("sign entries must be +-1")
    return out if out.shape else complex(out)


def half_period_scan(E, z0):
    """Scan Im Omega_eps/|Omega_eps| at z0 over all 2^g half-period variants.

    Returns (argmin sign vector, table of (eps, value) in scan order).  The
    canonical all-plus vector should always win.
    """
    if complex(z0).imag <= 0:
        raise GeometryError("scan point must be in the upper half-plane")
    table = []
    best, best_val = None, math.inf
    for eps in itertools.product((1, -1), repeat=E.g):
        w = omega(E, z0, eps)
        val = w.imag / abs(w)
        table.append((eps, val))
        if val < best_val:
            best, best_val = eps, val
    return best, table


def ahlfors_function(E, z0, z, eps=None):
    """The extremal unit-bound function w_{z0}(z) vanishing at z0."""
    z0 = complex(z0)
    if z0.imag == 0:
        raise GeometryError("base point must be off the real axis")
    w0 = omega(E, z0, eps)
    num = omega(E, z, eps) - np.conj(w0)
    den = omega(E, z, eps) + w0
    zz = np.asarray(z, dtype=complex)
    out = (zz - z0) / (zz - np.conj(z0)) * num / den
    return out if out.shape else complex(out)


def derivative_density(E, z0, eps=None):
    """|d/dz w_{z0}| at z0: Im Omega(z0) / (2 Im z0 |Omega(z0)|)."""
    z0 = complex(z0)
    if z0.imag <= 0:
        raise GeometryError("base point must be in the upper half-plane")
    w0 = omega(E, z0, eps)
    return w0.imag / (2.0 * z0.imag * abs(w0))


def K_omega(E, z, z0, eps=None):
    """Reproducing kernel (-1/Omega(z) + conj(1/Omega(z0))) / (2(z - conj z0))."""
    w = omega(E, z, eps)
    w0 = omega(E, z0, eps)
    return (-1.0 / w + np.conj(1.0 / w0)) / (2.0 * (complex(z) - np.conj(complex(z0))))


@dataclass(frozen=True)
class Divisor:
    """Points (x_j, eps_j), one per inner gap, x_j in the closed gap."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((float(x), int(e)) for x, e in self.entries)
        )
        for x, e in self.entries:
            if e not in (-1, 1):
                raise GeometryError("sheet signs must be +-1")


@dataclass(frozen=True)
class MFunctionData:
    """m_+/m_- data for a divisor: U = prod(z - x_j), V of degree g, V(0) = 0."""

    E: BandSystem
    divisor: Divisor
    u_coeffs: tuple
    v_coeffs: tuple
    residual: float

    def _U(self, z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for x, _ in self.divisor.entries:
            out = out * (np.asarray(z, dtype=complex) - x)
        return out

    def _V(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in reversed(self.v_coeffs):
            out = out * z + a
        return out

    def m_plus(self, z):
        R = radical(self.E)
        out = (-np.asarray(R(z)) + self._V(z)) / self._U(z)
        return out if out.shape else complex(out)

    def m_minus(self, z):
        R = radical(self.E)
        out = (-np.asarray(R(z)) - self._V(z)) / self._U(z)
        return out if out.shape else complex(out)

    def kernel(self, z, z0):
        """K_{m_+}(z, z0) = (m_+(z) - conj m_+(z0)) / (2(z - conj z0))."""
        return (self.m_plus(z) - np.conj(self.m_plus(z0))) / (
            2.0 * (complex(z) - np.conj(complex(z0)))
        )


def divisor_mfunctions(E, D):
    """Solve for V_D and return the m_+/m_- evaluators of Def-style divisors.

    V_D has degree g, V_D(0) = 0, and V_D(x_j) = eps_j * R(x_j) with R the
    gap-real branch of sqrt(-T); coalescing x_j make the interpolation
    singular and raise.
    """
    if E.kind != "S":
        raise GeometryError("divisor m-functions are defined on unbounded systems")
    g = E.g
    if len(D.entries) != g:
        raise GeometryError("divisor needs exactly one entry per inner gap")
    R = radical(E)
    xs = [x for x, _ in D.entries]
    for j, x in enumerate(xs, start=1):
        a, b = E.gap(j)
        if not (a - 1e-12 <= x <= b + 1e-12):
            raise GeometryError("divisor point %g outside gap %d" % (x, j))
    A = np.array([[x ** m for m in range(1, g + 1)] for x in xs], dtype=float)
    rhs = np.array([e * np.real(R(x)) for x, e in D.entries])
    if g and np.linalg.cond(A) > 1e12:
        raise ArithmeticError("degenerate divisor: interpolation matrix singular")
    v = np.linalg.solve(A, rhs) if g else np.zeros(0)
    v_coeffs = (0.0,) + tuple(v)
    u = np.poly(xs) if xs else np.array([1.0])
    data = MFunctionData(E, D, tuple(u[::-1]), v_coeffs, 0.0)
    resid = max(
        (abs(data._V(x) - e * np.real(R(x))) for x, e in D.entries), default=0.0
    )
    if resid > 1e-10:
        raise ArithmeticError("V interpolation residual %.3g" % resid)
    object.__setattr__(data, "residual", float(resid))
    return data


def upsilon_g0(lam):
    """The universal limit density for the half-line: exact closed form."""
    lam = complex(lam)
    if lam.real <= 0:
        raise GeometryError("parameter must have positive real part")
    s = np.sqrt(lam)
    return float(
        np.real(2.0 * s * np.conj(s) / ((lam + np.conj(lam)) * (s + np.conj(s)) ** 2))
    )


def upsilon_kernel(lam, lam0):
    """The reproducing kernel whose diagonal is upsilon_g0."""
    lam, lam0 = complex(lam), complex(lam0)
    if lam.real <= 0 or lam0.real <= 0:
        raise GeometryError("parameters must have positive real part")
    s, s0 = np.sqrt(lam), np.sqrt(lam0)
    return 2.0 * s * np.conj(s0) / ((lam + np.conj(lam0)) * (s + np.conj(s0)) ** 2)


def upsilon_derivative_matrix(lam, N=2, n_angles=16):
    """Hermitian matrix D[n, m] = d^n dbar^m Upsilon(lam), n, m <= N.

    Finite differences on circles around lam: Fourier coefficients in the
    angle isolate n - m, a least-squares fit in the radius separates orders.
    Radii stay inside the right half-plane.
    """
    lam = complex(lam)
    r0 = 0.35 * min(lam.real, 1.0 + abs(lam))
    radii = [r0, 0.75 * r0, 0.55 * r0, 0.4 * r0, 0.3 * r0]
    K = n_angles
    theta = 2 * math.pi * np.arange(K) / K
    rings = {}
    for r in radii:
        vals = np.array([upsilon_g0(lam + r * np.exp(1j * t)) for t in theta])
        rings[r] = vals
    D = np.zeros((N + 1, N + 1), dtype=complex)
    for k in range(N + 1):
        # coefficient of e^{ik theta}: sum_m D[m+k, m] r^{2m+k} / ((m+k)! m!)
        ck = np.array(
            [np.sum(rings[r] * np.exp(-1j * k * theta)) / K for r in radii]
        )
        n_terms = N + 1 - k + 1  # one extra order as a nuisance term
        Amat = np.array(
            [[r ** (2 * m + k) for m in range(n_terms)] for r in radii]
        )
        coef, *_ = np.linalg.lstsq(Amat, ck, rcond=None)
        for m in range(N + 1 - k):
            n = m + k
            D[n, m] = coef[m] * math.factorial(n) * math.factorial(m)
    for n in range(N + 1):
        for m in range(n + 1, N + 1):
            D[n, m] = np.conj(D[m, n])
    return D


@dataclass(frozen=True)
class Prediction:
    """An asymptotic value together with the inversion data behind it."""

    value: float
    divisor: tuple
    rho_sq: float
    rho_bar_sq: float
    unique: bool


def predict_complex(E, z0, beta):
    """Y(z0, beta) = e^{-sum_j G(x_j, z0)} / (2 Im z0) from the solved divisor.

    Raises when the inversion puts the character outside the region where the
    prediction applies (rho^2 >= rho_bar^2).
    """
    from .inversion import gaji_solve

    z0 = complex(z0)
    if z0.imag <= 0:
        raise GeometryError("prediction point must be in the upper half-plane")
    sol = gaji_solve(E, beta, z0)
    if sol.rho_sq >= sol.rho_bar_sq:
        raise ArithmeticError(
            "character out of region: rho^2=%.6g >= %.6g" % (sol.rho_sq, sol.rho_bar_sq)
        )
    total = 0.0
    for x in sol.points:
        if x in (math.inf, -math.inf):
            total += green_at_infinity(E, z0) if E.kind == "J" else 0.0
        else:
            total += green_real_pole(E, x, z0)
    value = math.exp(-total) / (2.0 * z0.imag)
    return Prediction(value, sol.points, sol.rho_sq, sol.rho_bar_sq, sol.unique)


def predict_real_gap(E, x0, beta):
    """Limit of e^{-n G(x0, pole)} A_n(x0) for real x0 in a gap.

    Value (1/2) e^{-gamma(x0)} e^{-sum_j G(x_j, x0)} where the x_j solve the
    real inversion for beta shifted by the character of x0 itself.  A divisor
    point coalescing with x0 drives the value to 0 (the prediction degenerates
    rather than erring).
    """
    from .inversion import real_inversion

    g = E.g
    j0 = E.gap_of(x0)
    if j0 is None:
        raise GeometryError("evaluation point %g lies on E" % x0)
    shifted = beta - character_of_point(E, j0, _gap_t(E, j0, x0))
    xs = real_inversion(E, shifted) if g else ()
    total = 0.0
    for x in xs:
        if abs(x - x0) < 1e-13:
            return Prediction(0.0, tuple(xs), 0.0, math.inf, True)
        total += green_real_pole(E, x, x0)
    value = 0.5 * math.exp(-robin_at(E, x0)) * math.exp(-total)
    return Prediction(value, tuple(xs), 0.0, math.inf, True)


def _gap_t(E, j, x):
    from .geometry import gap_parameter

    return gap_parameter(E, j, x)
