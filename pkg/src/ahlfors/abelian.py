"""Normalized differentials on the hyperelliptic double, harmonic measures,
and character arithmetic.

The kernel object is the radical: the branch of the square root of the
defining polynomial that is analytic off the bands, real on every gap, and
positive immediately right of the last branch point.  All other sign
bookkeeping reduces to how many branch points sit above a given real point.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import ArcSystem, BandSystem, GeometryError, arc_transplant
from .quadrature import (
    integrate_band,
    integrate_from_branchpoint,
    integrate_halfline,
    integrate_segment_far,
)


def defining_roots(E):
    """Roots of the defining polynomial T: all branch points, ascending."""
    return E.branch_points()


def radical(E):
    """The analytic branch R(z) with R(z)^2 = +-T(z), real on gaps.

    For J-kind, R^2 = T = prod(z - r) over the 2g+2 branch points; for S-kind
    R = -i exp(sum log(z - r)/2) so that R^2 = -T with T = z prod(z - r) and
    R(x) = sqrt(-x) > 0 on the negative axis.  Evaluation on real arrays gives
    the boundary value from the upper half-plane (the value on cuts).
    """
    roots = np.asarray(defining_roots(E), dtype=float)
    front = 1.0 if E.kind == "J" else -1.0j

    def R(z):
        z = np.asarray(z, dtype=complex)
        logs = np.log(z[..., None] - roots)
        out = front * np.exp(0.5 * np.sum(logs, axis=-1))
        return out if out.shape else complex(out)

    return R


def gap_sign(E, j):
    """Sign of the radical on inner gap j (it is real and nonzero there)."""
    g = E.g
    if E.kind == "J":
        return -1.0 if (g - j + 1) % 2 else 1.0
    return -1.0 if (g - j) % 2 else 1.0


@dataclass(frozen=True)
class CharacterVector:
    """Tuple of g character exponents, each reduced mod 1."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) % 1.0 for v in self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        """Component beta_k, 1-based like the gap indices."""
        if not 1 <= k <= len(self.values):
            raise IndexError("character index %r outside 1..%d" % (k, len(self.values)))
        return self.values[k - 1]

    def __sub__(self, other):
        return CharacterVector(tuple(a - b for a, b in zip(self.values, other.values)))

    def __add__(self, other):
        return CharacterVector(tuple(a + b for a, b in zip(self.values, other.values)))

    def distance(self, other):
        """Max over components of the circle distance."""
        d = 0.0
        for a, b in zip(self.values, other.values):
            dd = abs((a - b) % 1.0)
            d = max(d, min(dd, 1.0 - dd))
        return d


@dataclass(frozen=True)
class DifferentialBasis:
    """Coefficient rows of the Q_k with d(w_k) = Q_k(z) dz / R(z).

    Row k-1 holds the ascending monomial coefficients of Q_k (degree g-1),
    normalized by the half-period conditions over the inner gaps.
    """

    E: BandSystem
    coeffs: tuple
    residual: float

    def Q(self, k, z):
        """Evaluate Q_k (1-based k) at scalar or array z."""
        c = self.coeffs[k - 1]
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in reversed(c):
            out = out * z + a
        return out if out.shape else complex(out)


def basis_differentials(E, n_quad=256):
    """Solve the g x g period system for the normalized differential basis."""
    g = E.g
    if g < 1:
        raise GeometryError("differential basis needs at least one inner gap")
    R = radical(E)

    def moment(j, m):
        a, b = E.gap(j)
        return integrate_band(lambda x: (x ** m / R(x)).real, a, b, n=n_quad)

    M = np.array([[moment(j, m) for m in range(g)] for j in range(1, g + 1)])
    cond = np.linalg.cond(M)
    if cond > 1e12:
        raise ArithmeticError("period matrix condition %.3g too large" % cond)
    Q = np.linalg.solve(M, 0.5 * np.eye(g))
    resid = float(np.max(np.abs(M @ Q - 0.5 * np.eye(g))))
    coeffs = tuple(tuple(Q[:, k]) for k in range(g))
    return DifferentialBasis(E, coeffs, resid)


@functools.lru_cache(maxsize=64)
def _basis(E):
    return basis_differentials(E)


def _hm_integral(E, z, k, basis, n=160, height_factor=2.0):
    """Path integral of d(w_k) from the canonical base point to z."""
    R = radical(E)

    def f(zz):
        return basis.Q(k, zz) / R(zz)

    span = max(abs(p) for p in E.branch_points() if p not in (math.inf, -math.inf))
    span = max(span, 1.0)
    base = E.outer[0] if E.kind == "J" else 0.0
    top = base + 1j * height_factor * span
    zc = complex(z)
    if abs(zc - base) < 1e-14:
        return 0.0 + 0.0j
    leg1 = integrate_from_branchpoint(f, base, top, n)
    # the leg to z may be long (deep outer-gap points); cluster panels at top
    leg2 = integrate_segment_far(f, top, zc, n=min(n, 96), scale=height_factor * span)
    return leg1 + leg2


def harmonic_measure(E, z, k, n=160, height_factor=2.0):
    """Harmonic measure omega(z, E_k) in C minus E.

    E_k is the nested partial set: bands 0..k-1 for J-kind (E intersected
    with [b_0, a_k]), bands k..g for S-kind (E minus [0, a_k]).  z may be real
    in a gap or complex off the axis.
    """
    zc = complex(z)
    if zc.imag == 0.0 and E.contains(zc.real):
        raise GeometryError("harmonic measure evaluated on E at %r" % (z,))
    if not 1 <= k <= E.g:
        raise GeometryError("k must be in 1..g")
    if zc.imag < 0.0:
        zc = zc.conjugate()
    I = _hm_integral(E, zc, k, _basis(E), n=n, height_factor=height_factor)
    if E.kind == "J":
        return 1.0 - 2.0 * I.real
    return 2.0 * I.real


def omega_infinity(E, k, n=200):
    """omega(infinity, E_k) for a J-kind system, by the exact tail integral."""
    if E.kind != "J":
        raise GeometryError("omega at infinity needs a bounded system")
    basis = _basis(E)
    R = radical(E)
    a0 = E.outer[1]
    span = a0 - E.outer[0]

    def f(x):
        return (basis.Q(k, x) / R(x)).real

    return -2.0 * integrate_halfline(f, a0, n=n, scale=span)


def band_measures(E, z):
    """Per-band harmonic measures (mu_0, ..., mu_g) at z.

    For J-kind the last one is computed on the mirror system so the sum-to-1
    identity stays a genuine cross-check rather than a bookkeeping tautology.
    """
    g = E.g
    om = [0.0] + [harmonic_measure(E, z, k) for k in range(1, g + 1)]
    if E.kind == "J":
        mus = [om[k + 1] - om[k] for k in range(g)]
        Em = E.reflected()
        zm = -complex(z)
        mus.append(harmonic_measure(Em, zm, 1))
        return mus
    # S-kind partial sets are nested downward: E_k = bands k..g
    mus = [1.0 - om[1]]
    for m in range(1, g):
        mus.append(om[m] - om[m + 1])
    mus.append(om[g])
    return mus


def character_of_point(E, j, t):
    """Character contribution (omega(x, E_k))_k of the gap-j torus point t.

    The identified endpoint t = 0 contributes the zero vector; for the outer
    gap of a J-kind system t = 1/2 is infinity and uses the tail formula.
    """
    from .geometry import gap_coordinate

    g = E.g
    t = t % 1.0
    if t == 0.0:
        return CharacterVector((0.0,) * g)
    x = gap_coordinate(E, j, t)
    if E.kind == "J" and j == 0:
        span = max(abs(p) for p in E.branch_points())
        # omega(x, .) - omega(inf, .) is O(span/x); below tolerance out there
        if x in (math.inf, -math.inf) or abs(x) > 1e8 * span:
            return CharacterVector(tuple(omega_infinity(E, k) for k in range(1, g + 1)))
    return CharacterVector(tuple(harmonic_measure(E, x, k) for k in range(1, g + 1)))


def limit_character(E, n, problem):
    """Character of the degree-n (or exponent-l) extremal problem.

    J: beta_k = n * omega(inf, E_k) mod 1; T: beta_k = n * omega(0, E_T^k)
    mod 1 computed through the line transplant; S: beta_k = l * omega_k / pi
    mod 1 with omega_k the comb frequencies.
    """
    if problem == "J":
        g = E.g
        return CharacterVector(tuple((n * omega_infinity(E, k)) % 1.0 for k in range(1, g + 1)))
    if problem == "T":
        if not isinstance(E, ArcSystem):
            raise GeometryError("T-problem characters need an arc system")
        E_line, to_line, _ = arc_transplant(E)
        z = to_line(0.0)
        g = E.g
        return CharacterVector(
            tuple((n * harmonic_measure(E_line, z, k)) % 1.0 for k in range(1, g + 1))
        )
    if problem == "S":
        from .potential import comb_data

        comb = comb_data(E)
        return CharacterVector(tuple((n * w / math.pi) % 1.0 for w in comb.frequencies))
    raise GeometryError("unknown problem kind %r" % (problem,))
