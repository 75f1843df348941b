"""Ground-truth extremal derivatives by semi-infinite linear programming.

A_n(z0; E) = sup{|P'(z0)| : deg P <= n, |P| <= 1 on E, P(z0) = 0} is computed
by writing P = (z - z0) Q, which removes the equality constraints and makes
the objective Re Q(z0) (a rotation makes the optimal derivative positive
real, so the real part loses nothing).  Modulus constraints are enforced on a
finite point set and refined by constraint exchange: after each solve the
true |P| is scanned on E, local maxima are polished by golden section, and
violated points enter the working set with a tangent facet at the current
phase of P.  The reported bracket is [opt / max_E |P|, opt]; both ends are
certified by the dual solution.

The LP itself is solved in the dual (the basis stays at the number of
polynomial coefficients, not the number of grid rows) by a dense two-phase
revised simplex with Dantzig pricing and a Bland fallback against cycling.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArcSystem, BandSystem, GeometryError
from .quadrature import chebyshev_band_nodes, golden_max

_TOL = 1e-11


class LPError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LPSpec:
    """max objective . v subject to rows . v <= bounds, v free."""

    objective: np.ndarray
    rows: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "objective", np.asarray(self.objective, dtype=float))
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=float))
        object.__setattr__(self, "bounds", np.asarray(self.bounds, dtype=float))
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise LPError("need at least one constraint row")
        if not (
            np.all(np.isfinite(self.objective))
            and np.all(np.isfinite(self.rows))
            and np.all(np.isfinite(self.bounds))
        ):
            raise LPError("non-finite LP data")


@dataclass(frozen=True)
class ExtremalResult:
    """Oracle output: certified bracket and the optimal polynomial."""

    n: int
    lower: float
    upper: float
    coefficients: tuple
    basis: tuple
    contact: tuple
    iterations: int
    poly: object = field(repr=False, default=None)


def _simplex(A, b, c, basis, tol=1e-11, max_iter=50000):
    """min c x s.t. A x = b, x >= 0, from a feasible basis. Returns (basis, xB)."""
    m, n = A.shape
    basis = list(basis)
    stall, last = 0, math.inf
    for _ in range(max_iter):
        B = A[:, basis]
        try:
            xB = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            raise LPError("singular working basis")
        red = c - y @ A
        red[basis] = 0.0
        cand = np.flatnonzero(red < -tol)
        if cand.size == 0:
            return basis, np.maximum(xB, 0.0)
        if stall > 50:  # Bland's rule: smallest eligible index, no cycling
            j = int(cand[0])
        else:
            j = int(cand[np.argmin(red[cand])])
        d = np.linalg.solve(B, A[:, j])
        pos = np.flatnonzero(d > tol)
        if pos.size == 0:
            raise LPError("unbounded direction in simplex")
        ratios = xB[pos] / d[pos]
        rmin = ratios.min()
        ties = pos[np.flatnonzero(ratios <= rmin + 1e-12)]
        i = int(ties[np.argmin([basis[t] for t in ties])])
        obj = float(c[basis] @ xB)
        stall = stall + 1 if obj >= last - 1e-13 else 0
        last = obj
        basis[i] = j
    raise LPError("simplex iteration limit")


def lp_solve(spec):
    """Solve the LPSpec; returns (optimum, v, dual, info).

    Solved through the dual min b.mu, rows^T mu = objective, mu >= 0, whose
    basis size equals the variable count.  The returned info dict carries the
    dual-feasibility and duality-gap certificate; a violated certificate
    raises rather than reporting a wrong optimum.
    """
    c = spec.objective
    A = spec.rows
    b = spec.bounds
    m, nv = A.shape
    if c.shape != (nv,):
        raise LPError("objective length %d != %d" % (c.shape[0], nv))
    scale = max(1.0, float(np.max(np.abs(c))))
    cs = c / scale

    # dual equalities: A^T mu = cs
    Aeq = A.T.copy()
    rhs = cs.copy()
    flip = rhs < 0
    Aeq[flip] *= -1.0
    rhs[flip] *= -1.0

    full = np.hstack([Aeq, np.eye(nv)])
    cost1 = np.concatenate([np.zeros(m), np.ones(nv)])
    basis, xB = _simplex(full, rhs, cost1, list(range(m, m + nv)))
    if float(cost1[basis] @ xB) > 1e-9 * (1.0 + float(np.sum(rhs))):
        raise LPError("dual infeasible: the primal problem is unbounded")
    # drive leftover artificials out of the basis
    for k in range(nv):
        if basis[k] >= m:
            B = full[:, basis]
            ek = np.zeros(nv)
            ek[k] = 1.0
            row = np.linalg.solve(B.T, ek) @ Aeq.T  # tableau row over real columns
            j = next(
                (
                    jj
                    for jj in range(m)
                    if jj not in basis and abs(row[jj]) > 1e-9
                ),
                None,
            )
            if j is None:
                raise LPError("redundant dual equality; cannot leave phase 1")
            basis[k] = j
    cost2 = np.concatenate([b, np.full(nv, 1e30)])
    basis, xB = _simplex(full, rhs, cost2, basis)
    if any(v >= m for v in basis):
        raise LPError("artificial variable stuck in the final basis")

    mu = np.zeros(m)
    for k, v in enumerate(basis):
        mu[v] = xB[k]
    mu /= scale
    dual_resid = float(np.max(np.abs(A.T @ mu - cs * scale / scale * c / scale)))
    dual_resid = float(np.max(np.abs(A.T @ mu - c / scale)))
    opt = float(b @ mu) * scale

    vert = np.linalg.solve(A[basis], b[basis])
    gap = abs(float(c @ vert) - opt) / (1.0 + abs(opt))
    info = {
        "dual_residual": dual_resid * scale,
        "gap": gap,
        "basis_rows": tuple(int(v) for v in basis),
    }
    if gap > 1e-7 or dual_resid > 1e-7 * (1.0 + float(np.max(np.abs(c)))) / scale:
        raise LPError("duality certificate failed: gap=%.3g resid=%.3g" % (gap, dual_resid))
    return opt, vert, mu, info


# ---------------------------------------------------------------------------
# extremal derivative oracle


def _cheb_basis(E):
    pts = [p for p in E.branch_points() if p not in (math.inf, -math.inf)]
    lo, hi = min(pts), max(pts)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0

    def T(k, z):
        u = (np.asarray(z, dtype=complex) - mid) / half
        # Chebyshev by the stable three-term recurrence, valid off [-1, 1]
        if k == 0:
            return np.ones_like(u)
        tkm, tk = np.ones_like(u), u
        for _ in range(k - 1):
            tkm, tk = tk, 2.0 * u * tk - tkm
        return tk

    return T, (mid, half)


def _grid(E, n):
    if isinstance(E, ArcSystem):
        return [np.exp(1j * t) for t in E.arc_points(max(30 * n, 48))]
    pts = []
    for lo, hi in E.bands():
        if hi == math.inf:
            raise GeometryError("the oracle needs a compact E")
        pts.extend(chebyshev_band_nodes(lo, hi, max(30 * n, 48)))
    return [complex(p) for p in pts]


def _real_case(E, z0):
    return isinstance(E, BandSystem) and abs(complex(z0).imag) == 0.0


def extremal_deriv(E, n, z0, K=8, exch_tol=1e-7, max_rounds=50):
    """Certified A_n(z0; E) for bands or arcs.

    Returns an ExtremalResult whose poly field evaluates the optimizer.  The
    bracket [lower, upper] accounts for both the facet relaxation and any
    residual grid violation; exchange failure after max_rounds raises with
    the best bracket in the message.
    """
    z0 = complex(z0)
    n = int(n)
    if n < 1:
        raise GeometryError("need degree n >= 1")
    if isinstance(E, ArcSystem):
        if min(abs(np.exp(1j * t) - z0) for t in E.arc_points(64)) < 1e-9:
            raise GeometryError("z0 on E")
        basis_name = "monomial"

        def bfun(k, z):
            return np.asarray(z, dtype=complex) ** k

    else:
        if E.kind != "J":
            raise GeometryError("the oracle needs a compact (J-kind) system")
        if z0.imag == 0.0 and E.contains(z0.real):
            raise GeometryError("z0 on E")
        T, _ = _cheb_basis(E)
        basis_name = "chebyshev"
        bfun = T

    real_lp = _real_case(E, z0)
    nq = n  # Q runs through degree n-1: n coefficients
    pts = _grid(E, n)

    def q_at(coeffs, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape if z.shape else (1,), dtype=complex)
        if real_lp:
            for k in range(nq):
                out = out + coeffs[k] * bfun(k, z)
        else:
            for k in range(nq):
                out = out + (coeffs[k] + 1j * coeffs[nq + k]) * bfun(k, z)
        return out

    def p_at(coeffs, z):
        z = np.asarray(z, dtype=complex)
        return (z - z0) * q_at(coeffs, z)

    nvars = nq if real_lp else 2 * nq

    def facet_row(x, phase):
        cvec = np.exp(-1j * phase) * (x - z0) * np.array(
            [bfun(k, x) for k in range(nq)], dtype=complex
        ).reshape(nq)
        if real_lp:
            return np.real(cvec)
        return np.concatenate([np.real(cvec), -np.imag(cvec)])

    obj_c = np.array([bfun(k, z0) for k in range(nq)], dtype=complex).reshape(nq)
    if real_lp:
        objective = np.real(obj_c)
    else:
        objective = np.concatenate([np.real(obj_c), -np.imag(obj_c)])

    rows, bounds = [], []
    seed = pts if len(pts) <= 30 * n else pts
    for x in seed:
        phases = (0.0, math.pi) if real_lp else (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)
        for ph in phases:
            rows.append(facet_row(x, ph))
            bounds.append(1.0)

    scan = _scan_points(E, n)
    opt = coeffs = None
    iters = 0
    for rnd in range(max_rounds):
        spec = LPSpec(objective, np.array(rows), np.array(bounds))
        opt, coeffs, _, _ = lp_solve(spec)
        iters = rnd + 1
        peaks = _violations(E, lambda z: p_at(coeffs, z), scan)
        worst = max((v for _, v in peaks), default=0.0)
        for x, v in peaks:
            if v > 1.0 + exch_tol:
                val = complex(p_at(coeffs, x))
                ph = math.atan2(val.imag, val.real)
                if real_lp:
                    rows.append(facet_row(x, 0.0 if val.real > 0 else math.pi))
                else:
                    rows.append(facet_row(x, ph))
                bounds.append(1.0)
        if worst <= 1.0 + exch_tol:
            break
    else:
        raise LPError(
            "exchange did not converge; bracket [%r, %r]" % (opt / worst, opt)
        )

    sup = max(worst, 1.0)
    lower, upper = opt / sup, opt
    contact = tuple(
        complex(x) for x in scan if abs(complex(p_at(coeffs, x))) >= 1.0 - 1e-7
    )

    def poly(z, _c=np.array(coeffs)):
        return p_at(_c, z)

    return ExtremalResult(
        n=n,
        lower=float(lower),
        upper=float(upper),
        coefficients=tuple(float(v) for v in coeffs),
        basis=(basis_name, "split" if not real_lp else "real"),
        contact=contact,
        iterations=iters,
        poly=poly,
    )


def _scan_points(E, n):
    if isinstance(E, ArcSystem):
        return [complex(np.exp(1j * t)) for t in E.arc_points(max(120 * n // (E.g + 1), 256))]
    pts = []
    for lo, hi in E.bands():
        pts.extend(chebyshev_band_nodes(lo, hi, max(90 * n, 128)))
    return [complex(p) for p in pts]


def _violations(E, p, scan):
    """Local maxima of |p| on E above 1, polished by golden section."""
    vals = np.abs(np.asarray(p(np.array(scan))))
    out = []
    if isinstance(E, ArcSystem):
        angs = np.angle(np.array(scan))
        for i in range(len(scan)):
            if vals[i] >= vals[i - 1] and vals[i] >= vals[(i + 1) % len(scan)]:
                lo = angs[i - 1]
                hi = angs[(i + 1) % len(scan)]
                if hi <= lo:
                    hi += 2 * math.pi
                t, v = golden_max(lambda a: abs(complex(p(np.exp(1j * a)))), lo, hi, tol=1e-12)
                out.append((complex(np.exp(1j * t)), v))
        return out
    idx = 0
    for lo, hi in E.bands():
        sel = [i for i, x in enumerate(scan) if lo - 1e-12 <= x.real <= hi + 1e-12]
        for pos, i in enumerate(sel):
            left = vals[sel[pos - 1]] if pos > 0 else -math.inf
            right = vals[sel[pos + 1]] if pos + 1 < len(sel) else -math.inf
            if vals[i] >= left and vals[i] >= right:
                a = scan[sel[pos - 1]].real if pos > 0 else lo
                b = scan[sel[pos + 1]].real if pos + 1 < len(sel) else hi
                t, v = golden_max(lambda x: abs(complex(p(x + 0j))), a, b, tol=1e-13)
                out.append((complex(t), v))
        idx += 1
    return out


def convergence_sweep(E, z0, n_list, predicted=None, scale_fn=None, beta_fn=None):
    """Oracle values over n with a scaling and an optional predicted limit.

    Returns rows of dicts (n, lower, upper, scaled, beta, predicted, ratio).
    scale_fn(n) multiplies the oracle value; beta_fn(n) labels the row's
    character; predicted may be a constant or a callable of beta.  Rows are
    computed concurrently (AHL_THREADS caps the pool) in deterministic order.
    """
    n_list = list(n_list)
    workers = int(os.environ.get("AHL_THREADS", "0")) or min(8, len(n_list)) or 1

    def one(n):
        r = extremal_deriv(E, n, z0)
        return r

    if workers > 1 and len(n_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, n_list))
    else:
        results = [one(n) for n in n_list]
    rows = []
    for n, r in zip(n_list, results):
        mid = 0.5 * (r.lower + r.upper)
        s = scale_fn(n) if scale_fn is not None else 1.0
        beta = beta_fn(n) if beta_fn is not None else None
        pred = predicted(beta) if callable(predicted) else predicted
        rows.append(
            {
                "n": n,
                "lower": r.lower,
                "upper": r.upper,
                "scaled": mid * s,
                "beta": beta,
                "predicted": pred,
                "ratio": (mid * s / pred) if pred else math.nan,
            }
        )
    return rows
