"""Quadrature rules tuned to the integrands that show up here.

Band and gap integrals carry inverse-square-root singularities at both
endpoints, so everything funnels through the cosine substitution
x = mid + half*cos(theta), under which g(x)/sqrt((x-lo)(hi-x)) integrates
exactly like a trigonometric polynomial.  Complex line integrals over
polylines use Gauss-Legendre per segment.
"""

import math

import numpy as np

_GL_CACHE = {}


def _gl01(n):
    # Gauss-Legendre nodes/weights on [0, 1], cached per order
    if n not in _GL_CACHE:
        u, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (u + 1.0), 0.5 * w)
    return _GL_CACHE[n]


class Path:
    """Polyline in the complex plane.

    Parameters
    ----------
    nodes : sequence of complex
        Corner points; the path is the chain of straight segments between
        consecutive nodes.
    """

    def __init__(self, nodes):
        self.nodes = [complex(w) for w in nodes]
        if len(self.nodes) < 2:
            raise ValueError("path needs at least two nodes")

    def segments(self):
        return list(zip(self.nodes[:-1], self.nodes[1:]))


def chebyshev_band_nodes(lo, hi, n):
    """Nodes and weights integrating g(x)/sqrt((x-lo)(hi-x)) exactly for
    polynomial g of degree < 2n.

    Returns (x, w) with sum(w * g(x)) the integral; all weights equal pi/n.
    """
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    theta = math.pi * (np.arange(n) + 0.5) / n
    x = mid + half * np.cos(theta)
    w = np.full(n, math.pi / n)
    return x, w


def integrate_band(f, lo, hi, n=128):
    """Integral of f over [lo, hi] allowing inverse-sqrt blowup at both ends.

    f is called on a numpy array of interior nodes.  Spectrally accurate when
    f(x)*sqrt((x-lo)(hi-x)) is analytic on the closed band.
    """
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    theta = math.pi * (np.arange(n) + 0.5) / n
    x = mid + half * np.cos(theta)
    vals = np.asarray(f(x))
    return (math.pi / n) * np.sum(vals * half * np.sin(theta))


def integrate_halfline(f, a, n=128, scale=1.0):
    """Integral of f over [a, inf) with f ~ (x-a)^(-1/2) at a and O(x^-2) far out.

    Substitutes x = a + scale*u^2/(1-u^2); the integrand becomes smooth on
    [0, 1] and is handled by Gauss-Legendre.
    """
    u, w = _gl01(n)
    one = 1.0 - u * u
    x = a + scale * u * u / one
    jac = 2.0 * scale * u / (one * one)
    vals = np.asarray(f(x))
    return float(np.sum(w * vals * jac)) if not np.iscomplexobj(vals) else complex(
        np.sum(w * vals * jac)
    )


def integrate_path(f, path, n_per_seg=64):
    """Contour integral of f along a Path (complex line integral)."""
    if not isinstance(path, Path):
        path = Path(path)
    total = 0.0 + 0.0j
    for z0, z1 in path.segments():
        total += integrate_segment(f, z0, z1, n=n_per_seg)
    return complex(total)


def cauchy_derivative(f, z0, radius, n=128):
    """f'(z0) by the Cauchy integral over a circle of the given radius.

    Trapezoid on the circle, spectrally accurate for f analytic on the disk.
    """
    theta = 2 * math.pi * np.arange(n) / n
    e = np.exp(1j * theta)
    z = z0 + radius * e
    vals = np.asarray(f(z))
    # (1/2 pi i) oint f/(z-z0)^2 dz with dz = i r e d(theta)
    return complex(np.sum(vals / e) / (n * radius))


def integrate_from_branchpoint(f, p0, z1, n=96):
    """Integral of f along the segment [p0, z1] with f ~ (z-p0)^(-1/2) at p0.

    The substitution z = p0 + (z1-p0) u^2 removes the singularity.
    """
    u, w = _gl01(n)
    d = z1 - p0
    z = p0 + d * u * u
    return complex(np.sum(w * np.asarray(f(z)) * 2.0 * d * u))


def integrate_segment(f, z0, z1, n=96):
    """Plain Gauss-Legendre along the segment [z0, z1]."""
    u, w = _gl01(n)
    d = z1 - z0
    z = z0 + d * u
    return complex(np.sum(w * np.asarray(f(z)) * d))


def integrate_segment_far(f, z0, z1, n=64, scale=1.0):
    """Segment integral with geometric subdivision clustered at z0.

    Used when z1 is far from the region (near z0) where f varies: panel
    lengths double away from z0, so decay like 1/|z| costs only
    O(log(|z1-z0|/scale)) panels.
    """
    L = abs(z1 - z0)
    if L <= 2.0 * scale:
        return integrate_segment(f, z0, z1, n=n)
    k = max(1, int(math.ceil(math.log2(L / scale))))
    ss = [0.0] + [2.0 ** (i - k) for i in range(k + 1)]
    total = 0.0 + 0.0j
    d = z1 - z0
    for s0, s1 in zip(ss[:-1], ss[1:]):
        total += integrate_segment(f, z0 + d * s0, z0 + d * s1, n=n)
    return total


def golden_max(f, lo, hi, tol=1e-12, max_iter=200):
    """Location and value of the maximum of unimodal f on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol * (1.0 + abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    xm = (a + b) / 2.0
    return xm, f(xm)


def bisect(f, lo, hi, tol=1e-14, max_iter=200):
    """Root of continuous f on [lo, hi] with a sign change."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("no sign change on [%g, %g]: f=%g, %g" % (lo, hi, flo, fhi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol * (1.0 + abs(mid)):
            return mid
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
