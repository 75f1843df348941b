"""Divisor inversion on the gap tori.

Two problems are solved here.  The real inversion places one point per inner
gap so the summed harmonic-measure character hits a prescribed value mod 1;
the map is a torus homeomorphism, so failures are numerical, never
structural.  The generalized problem adds an outer-gap point and couples the
character equations (cs1) with a single balance equation (cs2) stating that
the divisor splits every gap's Poisson mass at z0 evenly:

    sum_j (int_{a_j}^{x_j} + int_{b_j}^{x_j}) dx / |x - z0|^2 = 0.

The cs2 integrals have the arctan antiderivative in closed form, and the
outer-gap term stays monotone and continuous through infinity, so given the
inner points the outer one is found by bisection; Newton over the inner
coordinates closes the system.  The candidate amplitude rho and its
admissibility ceiling come with each solution.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .abelian import CharacterVector, character_of_point, defining_roots, radical
from .geometry import GapPoint, GeometryError, gap_coordinate
from .quadrature import bisect, golden_max

_T_EPS = 1e-9


class SolverError(ArithmeticError):
    pass


@dataclass(frozen=True)
class InversionSolution:
    """A solved divisor with its residuals and amplitude data.

    points holds the real coordinates (x_0 may be +-inf), gap_points the
    torus coordinates.  rho is the signed amplitude from
    -i rho = U_X(z0)/sqrt(T(z0)); realness_defect measures how far that
    quantity is from being purely imaginary.  rho_bar_sq is the admissibility
    ceiling -sup_E U_X^2/T.  others collects alternative branches.
    """

    points: tuple
    gap_points: tuple
    residual_cs1: float
    residual_cs2: float
    rho: float
    realness_defect: float
    rho_sq: float
    rho_bar_sq: float
    unique: bool
    others: tuple = ()


def _wrap(d):
    """Signed distance to the nearest integer, in (-1/2, 1/2]."""
    return (np.asarray(d, dtype=float) + 0.5) % 1.0 - 0.5


def _char_residual(E, ts, beta, js):
    total = np.zeros(E.g)
    for j, t in zip(js, ts):
        total += np.asarray(character_of_point(E, j, t % 1.0).values)
    return _wrap(total - np.asarray(beta.values))


def real_inversion(E, beta, tol=1e-11, newton_iters=60):
    """Points x_j, one per inner gap, with Sigma_j omega(x_j, E_k) = beta_k mod 1.

    Returns a tuple of g real coordinates.  The identified gap endpoints are
    the torus origin, so beta_k = 0 components may return endpoint values.
    """
    g = E.g
    if g < 1:
        raise GeometryError("real inversion needs at least one inner gap")
    if len(beta) != g:
        raise GeometryError("character length %d != g = %d" % (len(beta), g))
    js = tuple(range(1, g + 1))

    if g == 1:
        t = _invert_single(E, float(beta[1]))
        return (gap_coordinate(E, 1, t),)

    def res(ts):
        return _char_residual(E, ts, beta, js)

    best, best_err = None, math.inf
    for s in _coarse_seeds(res, g):
        sol, err = _newton_mod1(res, s, tol=tol, iters=newton_iters)
        if err < best_err:
            best, best_err = sol, err
        if err < tol:
            break
    if best is None or best_err > 1e-9:
        raise SolverError("real inversion stagnated; residual %.3g" % best_err)
    return tuple(gap_coordinate(E, j, t % 1.0) for j, t in zip(js, best))


def _invert_single(E, b1):
    """g = 1 case: omega(x, E_1) runs monotonically 1 -> 0 across the gap."""
    b1 = b1 % 1.0
    if b1 == 0.0:
        return 0.0
    lo, hi = 1e-9, 1.0 - 1e-9

    def f(t):
        return float(character_of_point(E, 1, t)[1]) - b1

    return bisect(f, lo, hi, tol=1e-13)


def _coarse_seeds(res, dim, per_axis=6, keep=4):
    grid = [(i + 0.5) / per_axis for i in range(per_axis)]
    pts = [[]]
    for _ in range(dim):
        pts = [p + [v] for p in pts for v in grid]
    scored = sorted(pts, key=lambda p: float(np.max(np.abs(res(p)))))
    return [np.array(p) for p in scored[:keep]]


def _newton_mod1(res, t0, tol=1e-11, iters=60, h=1e-6):
    """Damped Newton on a mod-1 residual map over torus coordinates."""
    t = np.array(t0, dtype=float)
    r = res(t)
    err = float(np.max(np.abs(r)))
    for _ in range(iters):
        if err < tol:
            break
        J = np.empty((len(r), len(t)))
        for i in range(len(t)):
            tp, tm = t.copy(), t.copy()
            tp[i] += h
            tm[i] -= h
            J[:, i] = (res(tp) - res(tm)) / (2 * h)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-4:
            t_new = (t + lam * step) % 1.0
            r_new = res(t_new)
            e_new = float(np.max(np.abs(r_new)))
            if e_new < err:
                t, r, err = t_new, r_new, e_new
                break
            lam *= 0.5
        else:
            break
    return t, err


# ---------------------------------------------------------------------------
# cs2 closed form


def _F(x, u, v):
    """Antiderivative of 1/|x - (u + iv)|^2, with the +-inf limits."""
    if x == math.inf:
        return 0.5 * math.pi / v
    if x == -math.inf:
        return -0.5 * math.pi / v
    return math.atan((x - u) / v) / v


def _cs2_total(E, ts, z0):
    """Balance functional: zero iff the divisor splits each gap's mass evenly.

    The outer-gap term follows the through-infinity traversal, picking up a
    -pi/v or +pi/v offset depending on the side; it is continuous and
    increasing along the gap circle.
    """
    u, v = z0.real, z0.imag
    total = 0.0
    for j, t in enumerate(ts):
        x = gap_coordinate(E, j, t % 1.0)
        if j > 0:
            a, b = E.gap(j)
            total += 2.0 * _F(x, u, v) - _F(a, u, v) - _F(b, u, v)
        elif E.kind == "S":
            total += 2.0 * _F(x, u, v) - _F(-math.inf, u, v) - _F(0.0, u, v)
        else:
            a0, b0 = E.gap(0)
            if x in (math.inf, -math.inf):
                total += -_F(a0, u, v) - _F(b0, u, v)
            elif (t % 1.0) < 0.5:
                total += 2.0 * _F(x, u, v) - _F(a0, u, v) - _F(b0, u, v) - math.pi / v
            else:
                total += 2.0 * _F(x, u, v) - _F(a0, u, v) - _F(b0, u, v) + math.pi / v
    return total


def _outer_for(E, ts_inner, z0):
    """Bisect the outer-gap coordinate solving cs2 given the inner points."""

    def f(t0):
        return _cs2_total(E, (t0,) + tuple(ts_inner), z0)

    lo, hi = _T_EPS, 1.0 - _T_EPS
    try:
        return bisect(f, lo, hi, tol=1e-15)
    except ValueError:
        return None


def _u_poly(E, xs, z):
    out = 1.0 if not isinstance(z, complex) else complex(1.0)
    for x in xs:
        if x not in (math.inf, -math.inf):
            out = out * (z - x)
    return out


def _rho_data(E, xs, z0):
    """Amplitude and realness defect from -i rho = U_X(z0) / radical(z0).

    The canonical radical branch (sqrt T for bounded, sqrt -T for unbounded
    systems) makes the ratio purely imaginary exactly at solutions.
    """
    w = _u_poly(E, xs, complex(z0)) / complex(radical(E)(complex(z0)))
    rho = -w.imag  # from -i rho = w
    defect = abs(w.real) / abs(w) if abs(w) > 0 else 0.0
    return rho, defect


def _rho_bar_sq(E, xs):
    """Admissibility ceiling: min over E of U_X^2/|T| (equals -sup U^2/T)."""
    roots = defining_roots(E)

    def ratio(x):
        t = 1.0
        for r in roots:
            t *= x - r
        return -(_u_poly(E, xs, x) ** 2) / abs(t)

    best = math.inf
    for lo, hi in E.bands():
        if hi == math.inf:
            hi = max(abs(r) for r in roots) * 4.0 + abs(max(xs, default=0.0)) + 10.0
        pad = (hi - lo) * 1e-9
        _, val = golden_max(ratio, lo + pad, hi - pad)
        best = min(best, -val)
    return best


def gaji_solve(E, beta, z0, tol=1e-11, newton_iters=80):
    """Solve the coupled (cs1, cs2) system for the g+1 point divisor at z0.

    Returns an InversionSolution; all Newton branches found from the
    multistart grid are deduplicated, the one with smallest residual is
    primary and the rest are attached in .others with unique=False.
    """
    z0 = complex(z0)
    if z0.imag <= 0:
        raise GeometryError("gaji needs Im z0 > 0")
    g = E.g
    if len(beta) != g:
        raise GeometryError("character length %d != g = %d" % (len(beta), g))

    if g == 0:
        t0 = _outer_for(E, (), z0)
        if t0 is None:
            raise SolverError("outer balance equation has no root")
        return _package(E, (t0,), z0, beta, unique=True, others=())

    js = tuple(range(1, g + 1))

    def full_res(ts_inner):
        t0 = _outer_for(E, ts_inner, z0)
        if t0 is None:
            return None, None
        ts = (t0,) + tuple(ts_inner)
        r = _char_residual(E, ts, beta, (0,) + js)
        return r, t0

    def res(ts_inner):
        r, _ = full_res(ts_inner)
        if r is None:
            return np.full(g, 0.49)
        return r

    sols = []
    for s in _coarse_seeds(res, g, per_axis=8 if g == 1 else 5, keep=6):
        t, err = _newton_mod1(res, s, tol=tol, iters=newton_iters)
        if err < 1e-9:
            if not any(np.max(np.abs(_wrap(t - p))) < 1e-6 for p, _ in sols):
                sols.append((t, err))
    if not sols:
        raise SolverError("no convergent branch for beta=%r at z0=%r" % (beta, z0))
    sols.sort(key=lambda se: se[1])
    packaged = []
    for t, _ in sols:
        _, t0 = full_res(t)
        packaged.append(((t0,) + tuple(t % 1.0)))
    primary = _package(
        E, packaged[0], z0, beta, unique=len(packaged) == 1,
        others=tuple(
            _package(E, ts, z0, beta, unique=False, others=()) for ts in packaged[1:]
        ),
    )
    return primary


def _package(E, ts, z0, beta, unique, others):
    g = E.g
    span = max(abs(r) for r in defining_roots(E))
    ts = list(t % 1.0 for t in ts)
    xs = []
    for j, t in enumerate(ts):
        x = gap_coordinate(E, j, t)
        # a J outer point past the character clamp is infinity in all but name
        if j == 0 and E.kind == "J" and abs(x) > 1e8 * span:
            x, ts[0] = math.inf, 0.5
        xs.append(x)
    xs = tuple(xs)
    r_cs1 = (
        float(np.max(np.abs(_char_residual(E, ts, beta, tuple(range(g + 1))))))
        if g
        else 0.0
    )
    r_cs2 = abs(_cs2_total(E, ts, z0)) * z0.imag
    rho, defect = _rho_data(E, xs, z0)
    rbar = _rho_bar_sq(E, xs)
    return InversionSolution(
        points=xs,
        gap_points=tuple(GapPoint(j, t % 1.0) for j, t in enumerate(ts)),
        residual_cs1=r_cs1,
        residual_cs2=r_cs2,
        rho=rho,
        realness_defect=defect,
        rho_sq=rho * rho,
        rho_bar_sq=rbar,
        unique=unique,
        others=others,
    )


def jacobian_check(E, sol, z0, h=1e-6):
    """Nondegeneracy data at a solved divisor.

    Returns (sigma_min, indicator): the smallest singular value of the
    finite-difference Jacobian of the coupled (cs1, cs2) map in the torus
    coordinates, and |m_X(z0) - conj m_X(z0)| for the divisor's m-function,
    which must be nonzero off the real axis at nondegenerate solutions.
    """
    z0 = complex(z0)
    if isinstance(sol, InversionSolution):
        ts = [gp.t for gp in sol.gap_points]
        xs = sol.points
    else:
        ts = [gp.t for gp in sol]
        xs = tuple(gap_coordinate(E, gp.j, gp.t) for gp in sol)
    finite = [x for x in xs if x not in (math.inf, -math.inf)]
    if len(finite) > 1:
        span = max(finite) - min(finite)
        if span < 1e-8 * max(1.0, max(abs(x) for x in finite)):
            warnings.warn("divisor points coalesce; Jacobian is degenerate")
    g = E.g
    beta0 = CharacterVector((0.0,) * g)

    def F(tvec):
        r1 = _char_residual(E, tvec, beta0, tuple(range(g + 1))) if g else np.zeros(0)
        r2 = _cs2_total(E, tvec, z0) * z0.imag
        return np.append(r1, r2)

    t = np.asarray(ts, dtype=float)
    J = np.empty((g + 1, g + 1))
    for i in range(g + 1):
        tp, tm = t.copy(), t.copy()
        tp[i] += h
        tm[i] -= h
        J[:, i] = (F(tp) - F(tm)) / (2 * h)
    sigma_min = float(np.linalg.svd(J, compute_uv=False)[-1])

    # m-function indicator: V interpolates the gap-real radical branch.
    rad = radical(E)
    R = complex(rad(z0))
    vals = []
    nodes = []
    for x in xs:
        if x in (math.inf, -math.inf):
            continue
        nodes.append(x)
        vals.append(float(np.real(rad(x + 0j))))
    if nodes:
        V = np.polynomial.polynomial.polyfit(nodes, vals, len(nodes) - 1)
        vz = np.polynomial.polynomial.polyval(z0, V)
    else:
        vz = 0.0
    m = (-R + vz) / _u_poly(E, xs, z0)
    indicator = abs(2.0 * m.imag)
    return sigma_min, indicator


def bifurcation_scan(inst, z0, beta_values=None, n_grid=241):
    """Trace the g = 1 solution curve and classify branches per character.

    The inner coordinate t_1 parametrizes the curve: the outer point follows
    by bisection and beta(t_1) is read off.  For each requested beta the
    roots along the grid give the branch list; rows carry
    (beta, branch, x_0, x_1, rho^2, rho_bar^2, valid).  Returns (rows, info)
    with info reporting multivalued windows, threshold crossings, and, for a
    two-arc instance observed from the disk center, the angle-form balance
    residual.
    """
    from .geometry import ArcSystem, arc_transplant

    arcs = None
    if isinstance(inst, ArcSystem):
        arcs = inst
        E, to_line, _ = arc_transplant(inst)
        z0_line = to_line(complex(z0))
    else:
        E, z0_line = inst, complex(z0)
    if E.g != 1:
        raise GeometryError("the scan is for single-inner-gap systems")
    if beta_values is None:
        beta_values = [i / 40.0 for i in range(40)]

    t_grid = np.linspace(1e-6, 1.0 - 1e-6, n_grid)
    curve = []
    for t1 in t_grid:
        t0 = _outer_for(E, (t1,), z0_line)
        if t0 is None:
            curve.append((t1, None, math.nan))
            continue
        b = float(
            (character_of_point(E, 0, t0) + character_of_point(E, 1, t1))[1]
        )
        curve.append((t1, t0, b))

    def beta_at(t1):
        t0 = _outer_for(E, (t1,), z0_line)
        if t0 is None:
            return None, math.nan
        return t0, float(
            (character_of_point(E, 0, t0) + character_of_point(E, 1, t1))[1]
        )

    rows = []
    angle_resid = 0.0
    for b_req in beta_values:
        branch = 0
        for (tA, t0A, bA), (tB, t0B, bB) in zip(curve[:-1], curve[1:]):
            if t0A is None or t0B is None:
                continue
            dA, dB = float(_wrap(bA - b_req)), float(_wrap(bB - b_req))
            # a sign flip of the wrapped difference also happens at the
            # antipode; only a local straddle is a genuine root
            if dA == 0.0 or ((dA < 0) != (dB < 0) and abs(dA) + abs(dB) < 0.5):
                if abs(dA) < 1e-15:
                    t1, t0, _ = tA, t0A, bA
                else:
                    t1 = bisect(
                        lambda t: float(_wrap(beta_at(t)[1] - b_req)), tA, tB, tol=1e-12
                    )
                    t0, _ = beta_at(t1)
                xs = (gap_coordinate(E, 0, t0), gap_coordinate(E, 1, t1))
                rho, _ = _rho_data(E, xs, z0_line)
                rbar = _rho_bar_sq(E, xs)
                rows.append(
                    {
                        "beta": b_req,
                        "branch": branch,
                        "x0": xs[0],
                        "x1": xs[1],
                        "rho_sq": rho * rho,
                        "rho_bar_sq": rbar,
                        "valid": rho * rho <= rbar,
                    }
                )
                if arcs is not None and abs(complex(z0)) < 1e-12:
                    angle_resid = max(
                        angle_resid, _angle_balance_residual(arcs, xs)
                    )
                branch += 1

    counts = {}
    for r in rows:
        counts[r["beta"]] = counts.get(r["beta"], 0) + 1
    info = {
        "multivalued_betas": sorted(b for b, c in counts.items() if c > 1),
        "invalid_rows": sum(1 for r in rows if not r["valid"]),
        "curve": curve,
    }
    if arcs is not None:
        info["angle_balance_residual"] = angle_resid
    return rows, info


def _angle_balance_residual(arcs, xs):
    """Angle form of cs2 for a divisor seen from the disk center."""
    gs = sorted(arcs.gaps)
    theta_star = 0.5 * (gs[0][0] + gs[0][1])

    def to_angle(x):
        if x in (math.inf, -math.inf):
            return theta_star
        return theta_star + 2.0 * math.atan2(1.0, -x)

    total = 0.0
    thetas = sorted(to_angle(x) % (2 * math.pi) for x in xs)
    for (a, b) in gs:
        th = next(
            (
                t
                for t in thetas
                if a - 1e-9 <= t <= b + 1e-9
                or a - 1e-9 <= t + 2 * math.pi <= b + 1e-9
            ),
            None,
        )
        if th is None:
            return math.inf
        if th < a - 1e-9:
            th += 2 * math.pi
        total += 2.0 * th - a - b
    return abs(_wrap(total / (2 * math.pi))) * 2 * math.pi
