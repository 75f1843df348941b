"""Comb maps, Green and Martin functions, capacities and Robin constants.

Both kinds funnel through one primitive: with W the analytic branch of the
square root of the monic endpoint polynomial, the comb map is

    tau(z) = fac * integral from the leftmost branch point to z of C(t)/W(t) dt

with fac = i and C monic of degree g for a bounded (J) system, fac = 1/2 for
an unbounded (S) one.  The gap conditions integral_{gap j} C/W = 0 pin C by a
g x g linear solve; the classical normalizations (tau = 0 at the base,
tau = pi at the right end for J, tau(-x) ~ i sqrt(x) for S) then hold with
nothing left to tune.  Im tau is the Green function at infinity (J) or the
Martin function (S).
"""

import functools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import BandSystem, GeometryError, moebius_reduce
from .quadrature import (
    integrate_band,
    integrate_from_branchpoint,
    integrate_segment,
    integrate_segment_far,
)


@dataclass(frozen=True)
class CombData:
    """Comb geometry of a band system.

    critical: the c_j inside the inner gaps; frequencies: slit base positions
    Re tau(c_j); heights: slit heights Im tau(c_j); base_width: pi for a
    bounded system, inf for an unbounded one.
    """

    kind: str
    critical: tuple
    frequencies: tuple
    heights: tuple
    base_width: float


@dataclass(frozen=True)
class _CombCore:
    roots: tuple  # all branch points, ascending
    unbounded: bool  # True when the rightmost band runs to +infinity
    num: tuple  # ascending coefficients of the monic numerator C

    @property
    def fac(self):
        return 1j if not self.unbounded else 0.5

    def W(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.asarray(self.roots, dtype=float)
        out = np.exp(0.5 * np.sum(np.log(z[..., None] - r), axis=-1))
        return out if out.shape else complex(out)

    def C(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in reversed(self.num):
            out = out * z + a
        return out if out.shape else complex(out)

    def integrand(self, z):
        return self.fac * self.C(z) / self.W(z)

    def inner_gaps(self):
        # bounded: roots = b0, a1, b1, ..., ag, bg, a0; unbounded: L, a1, ..., bg.
        # Either way the inner gaps are (r[1], r[2]), (r[3], r[4]), ...
        r = self.roots
        return [(r[2 * j + 1], r[2 * j + 2]) for j in range((len(r) - 1) // 2)]


def _solve_core(roots, unbounded, n_quad=256):
    roots = tuple(float(r) for r in roots)
    if unbounded:
        if len(roots) % 2 == 0:
            raise GeometryError("unbounded system needs an odd branch-point count")
    else:
        if len(roots) % 2:
            raise GeometryError("bounded system needs an even branch-point count")
    g = (len(roots) - 2) // 2 if not unbounded else (len(roots) - 1) // 2
    probe = _CombCore(roots, unbounded, (1.0,) * (g + 1))
    gaps = probe.inner_gaps()

    def moment(gap, m):
        a, b = gap
        return integrate_band(lambda x: (x ** m / probe.W(x)).real, a, b, n=n_quad)

    if g == 0:
        return _CombCore(roots, unbounded, (1.0,))
    M = np.array([[moment(gp, m) for m in range(g)] for gp in gaps])
    b = np.array([moment(gp, g) for gp in gaps])
    u = np.linalg.solve(M, -b)
    num = tuple(u) + (1.0,)
    core = _CombCore(roots, unbounded, num)
    resid = max(
        abs(integrate_band(lambda x: (core.C(x) / core.W(x)).real, a, b, n=n_quad))
        for a, b in gaps
    )
    if resid > 1e-11:
        raise ArithmeticError("gap conditions not met, residual %.3g" % resid)
    return core


@functools.lru_cache(maxsize=128)
def _core_of(E):
    return _solve_core(E.branch_points(), E.kind == "S")


def critical_points(E):
    """The c_j in the inner gaps where the comb map has zero derivative."""
    core = _core_of(E)
    if E.g == 0:
        return ()
    cs = sorted(np.roots(list(reversed(core.num))).real)
    gaps = core.inner_gaps()
    if len(cs) != len(gaps) or any(not (a < c < b) for c, (a, b) in zip(cs, gaps)):
        raise ArithmeticError("comb numerator roots did not separate into the gaps")
    return tuple(cs)


def _tau_core(core, z, n=160):
    base = core.roots[0]
    span = max(core.roots[-1] - core.roots[0], 1.0)
    top = base + 2j * span
    zc = complex(z)
    if abs(zc - base) < 1e-14:
        return 0.0 + 0.0j
    I = integrate_from_branchpoint(core.integrand, base, top, n)
    I += integrate_segment_far(core.integrand, top, zc, n=n, scale=4.0 * span)
    return I


def comb_map(E, z, n=160):
    """tau(z) for z in the closed upper half-plane or real off E.

    Im tau is the Green function at infinity (J-kind) or the Martin function
    (S-kind); Re tau is constant on each gap.
    """
    zc = complex(z)
    if zc.imag < 0:
        raise GeometryError("comb map is computed in the closed upper half-plane")
    if zc.imag == 0.0 and E.contains(zc.real):
        raise GeometryError("comb map evaluated on E at %r" % (z,))
    return _tau_core(_core_of(E), zc, n=n)


@functools.lru_cache(maxsize=128)
def comb_data(E):
    """Critical points, slit base positions and heights of the comb."""
    core = _core_of(E)
    cs = critical_points(E)
    taus = [_tau_core(core, c) for c in cs]
    freqs = tuple(t.real for t in taus)
    heights = tuple(t.imag for t in taus)
    for j, (w, h) in enumerate(zip(freqs, heights), start=1):
        if h <= 0:
            raise ArithmeticError("slit height %d nonpositive: %g" % (j, h))
        if E.kind == "J" and not (0.0 < w < math.pi):
            raise ArithmeticError("slit base %d out of (0, pi): %g" % (j, w))
    if any(b <= a for a, b in zip(freqs, freqs[1:])):
        raise ArithmeticError("slit bases not increasing: %r" % (freqs,))
    width = math.pi if E.kind == "J" else math.inf
    return CombData(E.kind, cs, freqs, heights, width)


def green_at_infinity(E, z, n=160):
    """G(z, infinity) for a bounded system (Im of the comb map)."""
    if E.kind != "J":
        raise GeometryError("Green function at infinity needs a bounded system")
    zc = complex(z)
    if zc.imag < 0:
        zc = zc.conjugate()
    return comb_map(E, zc, n=n).imag


def martin(E, z, n=160):
    """Martin function M(z) of an unbounded system, normalized M(-x) ~ sqrt(x)."""
    if E.kind != "S":
        raise GeometryError("Martin function needs an unbounded system")
    zc = complex(z)
    if zc.imag < 0:
        zc = zc.conjugate()
    return comb_map(E, zc, n=n).imag


def capacity_and_robin(E):
    """(capacity, Robin constant) from the far-field expansion of G(z, inf).

    On the imaginary axis the odd tail term drops (real branch points), so
    G(iY) - log Y = -log cap + O(Y^-2); Richardson extrapolation over
    Y = 1e3, 1e4, 1e5 removes the quadratic term.
    """
    if E.kind != "J":
        raise GeometryError("capacity defined here for bounded systems only")
    Ys = (1e3, 1e4, 1e5)
    vals = [green_at_infinity(E, 1j * Y) - math.log(Y) for Y in Ys]

    def rich(i, j):
        yi2, yj2 = Ys[i] ** 2, Ys[j] ** 2
        return (vals[j] * yj2 - vals[i] * yi2) / (yj2 - yi2)

    r1, r2 = rich(0, 1), rich(1, 2)
    if abs(r1 - r2) > 1e-6:
        raise ArithmeticError("Robin extrapolation spread %.3g too large" % abs(r1 - r2))
    robin = r2
    return math.exp(-robin), robin


def green_real_pole(E, x0, z):
    """G_E(z, x0) for a real pole x0 off E, via reduction to a pole at infinity."""
    if x0 in (math.inf, -math.inf):
        return green_at_infinity(E, z)
    E2, m = moebius_reduce(E, x0)
    w = m(complex(z))
    return green_at_infinity(E2, w)


def robin_at(E, x0):
    """gamma(x0) in G(z, x0) = -log|z - x0| + gamma(x0) + o(1) near the pole.

    With the reduction map m(z) = 1/(x0 - z) one has m(z)(z - x0) = -1, so no
    chain-rule correction survives: gamma(x0) = -log cap(E') exactly.
    """
    if x0 in (math.inf, -math.inf):
        return capacity_and_robin(E)[1]
    E2, _ = moebius_reduce(E, x0)
    return capacity_and_robin(E2)[1]


def _added_intervals(E, E_ext):
    """Closed intervals making up E_ext minus E; must sit inside gaps of E."""
    added = []
    for lo, hi in E_ext.bands():
        pieces = [(lo, hi)]
        for blo, bhi in E.bands():
            nxt = []
            for plo, phi in pieces:
                left = (plo, min(phi, blo))
                right = (max(plo, bhi), phi)
                for seg in (left, right):
                    if seg[1] > seg[0] + 1e-14:
                        nxt.append(seg)
            pieces = nxt
        added.extend(pieces)
    for u, v in added:
        j = E.gap_of(0.5 * (u + v))
        if j is None:
            raise GeometryError("added piece (%g, %g) overlaps E" % (u, v))
    return added


def extension_identity_check(E, extension, zs=None):
    """Residual of the Martin/Green extension identity.

    For an extension of E by closed intervals inside the gaps,
    Im tau_ext(z) = Im tau(z) - (1/pi) * integral over the added intervals of
    G_E(z, x) d tau_ext(x); returns the sup of the defect over the test
    points.  Works for both kinds (Green at infinity plays the Martin role on
    bounded systems).  ``extension`` is either the extended BandSystem or the
    list of added (u, v) intervals; the list form also covers unbounded-kind
    extensions reaching outside R_+.
    """
    if isinstance(extension, BandSystem):
        if E.kind != extension.kind:
            raise GeometryError("extension must preserve the kind")
        added = _added_intervals(E, extension)
    else:
        added = [(float(u), float(v)) for u, v in extension]
        for u, v in added:
            if not u < v or E.gap_of(u) is None or E.gap_of(u) != E.gap_of(v):
                raise GeometryError("added interval (%g, %g) not inside one gap" % (u, v))
    roots_ext = sorted(E.branch_points() + [x for uv in added for x in uv])
    core_ext = _solve_core(tuple(roots_ext), E.kind == "S")
    if zs is None:
        span = max(abs(r) for r in E.branch_points()) or 1.0
        zs = [0.7j * span, span * (0.3 + 0.9j), -0.31 * span + 0.45j * span]

    def dtau(x):
        return np.asarray(core_ext.integrand(np.asarray(x, dtype=complex))).real

    worst = 0.0
    for z in zs:
        zc = complex(z)
        lhs = _tau_core(core_ext, zc).imag - comb_map(E, zc).imag
        corr = 0.0
        for u, v in added:
            corr += integrate_band(
                lambda x: np.array([green_real_pole(E, float(xx), zc) for xx in x]) * dtau(x),
                u,
                v,
                n=48,
            )
        worst = max(worst, abs(lhs + corr / math.pi))
    return worst
