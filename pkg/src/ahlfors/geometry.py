"""Interval/arc systems, their validation, and the coordinate maps used everywhere else.

A band system is a compact set E on the real line, stored through its gaps:

* kind ``J``: E = [b0, a0] minus the open gaps (a_j, b_j), j = 1..g.  The
  complement on the sphere has one more gap, the "outer" gap (a0, b0) running
  through infinity; internally it is indexed as gap 0 (a0 = right end of E,
  b0 = left end).
* kind ``S``: E = R_+ minus the open gaps (a_j, b_j), 0 < a_1 < ... < b_g.
  Gap 0 is the negative half axis.

Each closed gap with its endpoints identified is a circle; ``GapPoint`` holds
the torus coordinate used by the inversion solvers.
"""

from dataclasses import dataclass, field
import math

_TOL = 1e-12


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class BandSystem:
    """Ordered bands/gaps of a compact real set E.

    Parameters
    ----------
    kind : str
        ``"J"`` (bounded) or ``"S"`` (unbounded, subset of R_+).
    gaps : tuple of (float, float)
        Inner gaps (a_j, b_j), j = 1..g, strictly increasing and disjoint.
    outer : tuple of (float, float) or None
        For J the pair (b0, a0) with E inside [b0, a0]; None for S.
    """

    kind: str
    gaps: tuple
    outer: tuple = None

    def __post_init__(self):
        if self.kind not in ("J", "S"):
            raise GeometryError("kind must be 'J' or 'S', got %r" % (self.kind,))
        if self.kind == "J":
            if self.outer is None:
                raise GeometryError("J-kind system needs the outer pair (b0, a0)")
            b0, a0 = self.outer
            if not b0 < a0:
                raise GeometryError("outer interval empty: b0=%g >= a0=%g" % (b0, a0))
            lo, hi = b0, a0
        else:
            if self.outer is not None:
                raise GeometryError("S-kind system has no outer pair")
            lo, hi = 0.0, math.inf
        prev = lo
        for j, (a, b) in enumerate(self.gaps, start=1):
            if not (a < b):
                raise GeometryError("gap %d degenerate: (%g, %g)" % (j, a, b))
            if not (prev < a):
                raise GeometryError(
                    "gap %d overlaps or touches previous endpoint: %g !< %g" % (j, prev, a)
                )
            if a - prev < _TOL:
                raise GeometryError("band before gap %d has zero length" % j)
            prev = b
        if not prev < hi:
            raise GeometryError("last gap leaves no band on the right")

    @property
    def g(self):
        return len(self.gaps)

    def bands(self):
        """Closed bands of E, left to right (g+1 of them)."""
        if self.kind == "J":
            b0, a0 = self.outer
            left, right = b0, a0
        else:
            left, right = 0.0, math.inf
        out = []
        lo = left
        for a, b in self.gaps:
            out.append((lo, a))
            lo = b
        out.append((lo, right))
        return out

    def gap(self, j):
        """Gap j as an (left, right) pair; gap 0 is the outer one.

        For J-kind, gap 0 is (a0, b0) read as running through infinity; for
        S-kind it is (-inf, 0).
        """
        if j == 0:
            if self.kind == "J":
                b0, a0 = self.outer
                return (a0, b0)
            return (-math.inf, 0.0)
        return self.gaps[j - 1]

    def branch_points(self):
        """All finite branch points (roots of the defining polynomial), sorted."""
        pts = [x for ab in self.gaps for x in ab]
        if self.kind == "J":
            pts += list(self.outer)
        else:
            pts.append(0.0)
        return sorted(pts)

    def contains(self, x, tol=_TOL):
        """Whether real x lies in E (closed bands), within tol."""
        if x != x or x in (math.inf, -math.inf):
            return False
        for lo, hi in self.bands():
            if lo - tol <= x <= hi + tol:
                return True
        return False

    def gap_of(self, x, tol=_TOL):
        """Index of the gap containing real x, or None if x is in E.

        Infinity belongs to gap 0 of a J-kind system.
        """
        if self.kind == "J":
            b0, a0 = self.outer
            if x in (math.inf, -math.inf) or x < b0 - tol or x > a0 + tol:
                return 0
        else:
            if x == -math.inf or x < -tol:
                return 0
        for j, (a, b) in enumerate(self.gaps, start=1):
            if a + tol < x < b - tol:
                return j
        return None

    def reflected(self):
        """The mirror system -E (J-kind only)."""
        if self.kind != "J":
            raise GeometryError("reflection is defined for J-kind systems")
        b0, a0 = self.outer
        gaps = tuple(sorted((-b, -a) for a, b in self.gaps))
        return BandSystem("J", gaps, (-a0, -b0))


@dataclass(frozen=True)
class ArcSystem:
    """Arcs on the unit circle, stored through gap angle pairs.

    ``gaps`` are (a_j, b_j) in [0, 2*pi), pairwise disjoint going
    counterclockwise; E is the circle minus the open gap arcs.
    """

    gaps: tuple

    def __post_init__(self):
        if not self.gaps:
            raise GeometryError("arc system needs at least one gap")
        for j, (a, b) in enumerate(self.gaps):
            if not (0.0 <= a < b < a + 2 * math.pi):
                raise GeometryError("gap %d angles out of range: (%g, %g)" % (j, a, b))
        gs = sorted(self.gaps)
        for j in range(len(gs)):
            b = gs[j][1]
            a_next = gs[(j + 1) % len(gs)][0] + (2 * math.pi if j + 1 == len(gs) else 0.0)
            if not b < a_next - _TOL:
                raise GeometryError(
                    "gap ending at %g overlaps or touches gap starting at %g" % (b, a_next)
                )

    @property
    def g(self):
        return len(self.gaps) - 1

    def arcs(self):
        """Closed arcs of E as (start, end) angle pairs, start < end, mod 2*pi."""
        gs = sorted(self.gaps)
        out = []
        for j in range(len(gs)):
            b = gs[j][1]
            a_next = gs[(j + 1) % len(gs)][0] + (2 * math.pi if j + 1 == len(gs) else 0.0)
            out.append((b, a_next))
        return out

    def arc_points(self, n_per_arc):
        """Sample angles on E, endpoint-clustered per arc."""
        pts = []
        for lo, hi in self.arcs():
            mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
            for i in range(n_per_arc):
                theta = math.pi * (i + 0.5) / n_per_arc
                pts.append(mid + half * math.cos(theta))
        return sorted(t % (2 * math.pi) for t in pts)


@dataclass(frozen=True)
class MoebiusMap:
    """Real Moebius map z -> (p z + q) / (r z + s), ps - qr != 0."""

    p: float
    q: float
    r: float
    s: float

    def __post_init__(self):
        if abs(self.p * self.s - self.q * self.r) < _TOL:
            raise GeometryError("Moebius determinant vanishes")

    def __call__(self, z):
        den = self.r * z + self.s
        if isinstance(z, complex) or den != 0:
            return (self.p * z + self.q) / den
        return math.inf

    def at_infinity(self):
        return self.p / self.r if self.r != 0 else math.inf

    def inverse(self):
        return MoebiusMap(self.s, -self.q, -self.r, self.p)

    def derivative(self, z):
        den = self.r * z + self.s
        return (self.p * self.s - self.q * self.r) / (den * den)


@dataclass(frozen=True)
class GapPoint:
    """A point of the gap-j circle in its torus coordinate t in [0, 1).

    t = 0 is the identified endpoint pair (a_j ~ b_j).  For the outer gap of a
    J-kind system the chart runs through infinity (t = 1/2 maps to it).
    """

    j: int
    t: float

    def __post_init__(self):
        if not (0.0 <= self.t < 1.0):
            object.__setattr__(self, "t", self.t % 1.0)


def gap_coordinate(E, j, t):
    """Real coordinate of the gap-j torus point t (may be +-inf)."""
    t = t % 1.0
    if j == 0:
        if E.kind == "J":
            a0, b0 = E.gap(0)
            A, B = (a0 + b0) / 2.0, (b0 - a0) / 2.0
            # Moebius chart: t=0 -> a0, t=1/2 -> infinity, t -> 1 -> b0.
            if abs(2 * t - 1) < 1e-300:
                return math.inf
            return A + B / (2 * t - 1)
        # S-kind: (-inf, 0], t=0 -> 0, t -> 1 -> -inf.
        scale = _s_gap_scale(E)
        if t > 1 - 1e-300:
            return -math.inf
        return -scale * t / (1.0 - t)
    a, b = E.gap(j)
    return a + (b - a) * t


def gap_parameter(E, j, x):
    """Torus coordinate of real x inside (the closure of) gap j."""
    if j == 0:
        if E.kind == "J":
            a0, b0 = E.gap(0)
            if x in (math.inf, -math.inf):
                return 0.5
            A, B = (a0 + b0) / 2.0, (b0 - a0) / 2.0
            if abs(x - A) < 1e-300:
                raise GeometryError("point %g is inside E, not the outer gap" % x)
            return ((1.0 + B / (x - A)) / 2.0) % 1.0
        scale = _s_gap_scale(E)
        if x == -math.inf:
            return 1.0 - 1e-16
        if x > 0:
            raise GeometryError("point %g is not in the negative-axis gap" % x)
        return (-x) / (scale - x)
    a, b = E.gap(j)
    if not (a - _TOL <= x <= b + _TOL):
        raise GeometryError("point %g outside gap %d = (%g, %g)" % (x, j, a, b))
    return ((x - a) / (b - a)) % 1.0


def _s_gap_scale(E):
    pts = E.branch_points()
    hi = max(abs(p) for p in pts)
    return max(1.0, hi)


def validate_system(raw, kind):
    """Build a BandSystem from a flat endpoint list.

    For kind J the list is [b0, a1, b1, ..., ag, bg, a0] (even length >= 2);
    for kind S it is [a1, b1, ..., ag, bg].  Strict ordering is enforced and
    violations name the offending pair.
    """
    vals = [float(v) for v in raw]
    for i in range(len(vals) - 1):
        if not vals[i] < vals[i + 1]:
            raise GeometryError(
                "unordered endpoints: raw[%d]=%g !< raw[%d]=%g" % (i, vals[i], i + 1, vals[i + 1])
            )
    if kind == "J":
        if len(vals) < 2 or len(vals) % 2:
            raise GeometryError("J-kind needs an even endpoint count >= 2")
        outer = (vals[0], vals[-1])
        inner = vals[1:-1]
        gaps = tuple((inner[2 * i], inner[2 * i + 1]) for i in range(len(inner) // 2))
        return BandSystem("J", gaps, outer)
    if kind == "S":
        if len(vals) % 2:
            raise GeometryError("S-kind needs an even endpoint count")
        if vals and vals[0] <= 0:
            raise GeometryError("S-kind gap endpoints must be positive, got %g" % vals[0])
        gaps = tuple((vals[2 * i], vals[2 * i + 1]) for i in range(len(vals) // 2))
        return BandSystem("S", gaps, None)
    if kind == "T":
        gaps = tuple((vals[2 * i], vals[2 * i + 1]) for i in range(len(vals) // 2))
        return ArcSystem(gaps)
    raise GeometryError("unknown kind %r" % (kind,))


def moebius_reduce(E, x0):
    """Send a real non-E point x0 to infinity, producing a bounded J-kind image.

    Returns (E', m) with m(x0) = infinity and E' the image band system.  The
    identity G_E(z, x0) = G_{E'}(m(z), infinity) reduces every real-pole Green
    evaluation to the pole-at-infinity case.
    """
    if x0 in (math.inf, -math.inf):
        if E.kind != "J":
            raise GeometryError("infinity is a branch point of an S-kind system")
        return E, MoebiusMap(1.0, 0.0, 0.0, 1.0)
    if E.contains(x0):
        raise GeometryError("pole %g lies inside a band" % x0)
    if E.kind == "S" and E.gap_of(x0) is None:
        raise GeometryError("pole %g lies inside a band" % x0)
    m = MoebiusMap(0.0, 1.0, -1.0, x0)  # z -> 1/(x0 - z)
    ends = []
    for lo, hi in E.bands():
        ends.append((m(lo), m.at_infinity() if hi == math.inf else m(hi)))
    flat = sorted(v for ab in ends for v in ab)
    pairs = [(flat[2 * i], flat[2 * i + 1]) for i in range(len(flat) // 2)]
    outer = (pairs[0][0], pairs[-1][1])
    gaps = tuple((pairs[i][1], pairs[i + 1][0]) for i in range(len(pairs) - 1))
    return BandSystem("J", gaps, outer), m


def arc_transplant(A):
    """Carry an arc system to a bounded J-kind interval system on the line.

    Rotates so the first gap's midpoint theta* goes to infinity and applies
    w = -cot((theta - theta*)/2), increasing in the angle.  Returns
    (E_line, to_line, theta_to_line) with to_line the Moebius extension to the
    plane (the disk center 0 lands at w = i) and theta_to_line acting on
    angles.  Harmonic measures transport unchanged.
    """
    gs = sorted(A.gaps)
    theta_star = 0.5 * (gs[0][0] + gs[0][1])
    rot = complex(math.cos(theta_star), math.sin(theta_star))

    def to_line(zeta):
        zp = zeta / rot
        return -1j * (zp + 1.0) / (zp - 1.0)

    def theta_to_line(theta):
        u = 0.5 * (theta - theta_star)
        return -math.cos(u) / math.sin(u)

    flat = []
    for lo, hi in A.arcs():
        for th in (lo, hi):
            shifted = (th - theta_star) % (2 * math.pi)
            flat.append(theta_to_line(theta_star + shifted))
    E_line = validate_system(sorted(flat), "J")
    return E_line, to_line, theta_to_line


def halfplane_maps(target, y0=None):
    """Coordinate maps from the right half-plane parameter to the cut plane.

    target ``"J"``: z = 2(l^2+1)/(l^2-1) onto C minus [-2, 2];
    target ``"S"``: z = -l^2 onto C minus R_+;
    target ``"T"``: the J map followed by the Cayley step
    zeta = (z - i y0)/(z + i y0) (requires y0 > 0).

    Returns (forward, derivative), both callables of l with Re l > 0 enforced.
    """

    def _check(lam):
        if not (lam.real if isinstance(lam, complex) else lam) > 0:
            raise GeometryError("parameter must have positive real part, got %r" % (lam,))
        return complex(lam)

    if target == "S":

        def fwd(lam):
            lam = _check(lam)
            return -lam * lam

        def dfwd(lam):
            lam = _check(lam)
            return -2.0 * lam

        return fwd, dfwd

    if target == "J":

        def fwd(lam):
            lam = _check(lam)
            return 2.0 * (lam * lam + 1.0) / (lam * lam - 1.0)

        def dfwd(lam):
            lam = _check(lam)
            d = lam * lam - 1.0
            return -8.0 * lam / (d * d)

        return fwd, dfwd

    if target == "T":
        if y0 is None or y0 <= 0:
            raise GeometryError("T maps need a positive y0")
        jf, jd = halfplane_maps("J")

        def fwd(lam):
            z = jf(lam)
            return (z - 1j * y0) / (z + 1j * y0)

        def dfwd(lam):
            z = jf(lam)
            return (2j * y0 / (z + 1j * y0) ** 2) * jd(lam)

        return fwd, dfwd

    raise GeometryError("unknown map target %r" % (target,))
