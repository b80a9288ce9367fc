"""Numerical integration of logarithmic forms over bounded regions.

The singular integral is approximated through an excision ladder: for a
decreasing sequence eps_k the form is integrated over the part of the
region with |r_i| >= eps_k for every divisor coordinate carrying a dr/r
factor, and the rung values are extrapolated.  Convergence of the ladder is
the numerical counterpart of absolute convergence; divergence is a verdict,
not an exception.

Within a rung, the outer coordinates are integrated by adaptive composite
Gauss panels (log-scaled on divisor coordinates, so dr/r becomes ds) and
the innermost coordinate exactly: the fiber is a union of intervals from
slicing, and the 1-d integral of poly(x)/x or poly(x) over each interval is
a closed form.  Above mc_threshold dimensions (three by default) a
stratified Monte-Carlo estimator with a counter-based generator replaces
the tensor quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .polyform import LogForm, Polynomial
from .region import ProbeConfig, Region, RegionError
from .slicing import slice_fiber


class IntegrationError(ValueError):
    pass


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature and ladder settings.

    eps0 / ratio / ladder_len fix the excision rungs eps0 * ratio**-k;
    window and shrink control the convergence verdict (the last `window`
    successive differences must each shrink by at least `shrink`).
    """

    eps0: float = 2.0**-4
    ladder_len: int = 12
    ratio: float = 2.0
    nodes: int = 15
    max_depth: int = 24
    quad_tol: float = 1e-8
    nested_shrink: float = 0.02  # tolerance factor per nesting level
    mc_budget: int = 40000
    mc_threshold: int = 3  # tensor quadrature up to this many coordinates
    seed: int = 0
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    window: int = 3
    shrink: float = 1.5
    # early_stop quits once the last `window` diffs are below tolerance;
    # off by default because a region whose fibers only open up below the
    # current excision radius would be misread as settled.
    early_stop: bool = False

    def __post_init__(self):
        if self.eps0 <= 0:
            raise IntegrationError("eps0 must be positive")
        if self.ladder_len < 3:
            raise IntegrationError("the ladder needs at least 3 rungs")
        if self.ratio <= 1:
            raise IntegrationError("the ladder ratio must exceed 1")
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.quad_tol <= 0:
            raise IntegrationError("tolerances must be positive")

    def rungs(self):
        return [self.eps0 * self.ratio**-k for k in range(self.ladder_len)]


@dataclass
class Ladder:
    entries: list  # (param, value, stderr)
    verdict: str = "inconclusive"  # converged | diverging | inconclusive
    limit: float | None = None
    error: float | None = None

    def params(self):
        return [p for p, _, _ in self.entries]

    def values(self):
        return [v for _, v, _ in self.entries]

    def to_csv(self) -> str:
        lines = ["param,value,stderr"]
        for p, v, s in self.entries:
            lines.append(f"{float(p)!r},{complex(v).real!r},{float(s)!r}")
        if self.verdict == "converged":
            limit = complex(self.limit).real if self.limit is not None else float("nan")
            lines.append(f"verdict,converged,limit={limit!r},error={float(self.error)!r}")
        else:
            lines.append(f"verdict,{self.verdict},,")
        return "\n".join(lines) + "\n"


def classify_ladder(entries, cfg: QuadConfig) -> Ladder:
    ladder = Ladder(list(entries))
    values = ladder.values()
    stderrs = [s for _, _, s in entries]
    if len(values) < 2:
        ladder.verdict = "inconclusive"
        return ladder
    diffs = [values[i + 1] - values[i] for i in range(len(values) - 1)]
    scale = max(1.0, abs(values[-1]))
    noise = cfg.abs_tol + cfg.rel_tol * scale + 3.0 * max(stderrs)
    w = min(cfg.window, len(diffs))
    tail = diffs[-w:]
    if all(abs(d) <= noise for d in tail):
        ladder.verdict = "converged"
        ladder.limit = values[-1]
        ladder.error = noise + max(abs(d) for d in tail)
        return ladder
    shrinking = all(
        abs(tail[i + 1]) <= abs(tail[i]) / cfg.shrink for i in range(len(tail) - 1)
    )
    if shrinking and len(tail) >= 2:
        rho = abs(tail[-1]) / abs(tail[-2]) if abs(tail[-2]) else 0.0
        rho = min(rho, 1.0 / cfg.shrink)
        geom = rho / (1.0 - rho)
        ladder.verdict = "converged"
        ladder.limit = values[-1] + tail[-1] * geom
        ladder.error = abs(tail[-1]) * (geom + 1.0) + noise
        return ladder
    growing = all(
        abs(tail[i + 1]) >= abs(tail[i]) * 0.999 for i in range(len(tail) - 1)
    )
    if growing and abs(values[-1]) > abs(values[0]) and abs(tail[-1]) > noise:
        ladder.verdict = "diverging"
        return ladder
    ladder.verdict = "inconclusive"
    return ladder


@dataclass
class IntegralResult:
    value: float
    error: float
    absolute: float
    ladder: Ladder
    abs_ladder: Ladder | None = None
    flags: list = field(default_factory=list)

    def __str__(self):
        return (
            f"value={self.value:.9g} +/- {self.error:.2g} "
            f"(abs integral {self.absolute:.9g}, ladder {self.ladder.verdict})"
        )


# ---------------------------------------------------------------------------
# low level quadrature pieces


_GAUSS_CACHE: dict = {}


def _gauss_nodes(n: int):
    if n not in _GAUSS_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GAUSS_CACHE[n] = (x, w)
    return _GAUSS_CACHE[n]


def _adaptive_1d(f: Callable[[float], float], a: float, b: float,
                 tol: float, depth: int, err_acc: list) -> float:
    """Adaptive 15-point Gauss with bisection; the tolerance budget halves
    with each split so the accepted panel errors sum below `tol`."""
    xs, ws = _gauss_nodes(15)

    def gauss(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        return half * sum(w * f(mid + half * x) for x, w in zip(xs, ws))

    def recurse(lo, hi, whole, budget, d):
        mid = 0.5 * (lo + hi)
        left = gauss(lo, mid)
        right = gauss(mid, hi)
        err = abs(left + right - whole)
        if err <= budget or d <= 0:
            err_acc[0] += err
            return left + right
        return recurse(lo, mid, left, 0.5 * budget, d - 1) + recurse(
            mid, hi, right, 0.5 * budget, d - 1
        )

    if a >= b:
        return 0.0
    whole = gauss(a, b)
    return recurse(a, b, whole, tol * max(1.0, abs(whole)), depth)


def _poly_line_coeffs(coeff: Polynomial, base: Mapping[int, float], axis: int):
    deg = coeff.degree_in(axis)
    out = [0.0] * (deg + 1)
    for exp, c in coeff.terms.items():
        val = float(c)
        for v, e in enumerate(exp):
            if v == axis or e == 0:
                continue
            val *= base[v] ** e
        out[exp[axis]] += val
    return out


def _line_signed(coeffs, a: float, b: float, log_weight: bool) -> float:
    """Exact integral of sum c_k x^k (over x if log_weight) on [a, b]."""
    total = 0.0
    if log_weight:
        if coeffs and coeffs[0]:
            total += coeffs[0] * math.log(b / a)
        for k in range(1, len(coeffs)):
            if coeffs[k]:
                total += coeffs[k] * (b**k - a**k) / k
    else:
        for k, c in enumerate(coeffs):
            if c:
                total += c * (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    return total


def _line_roots(coeffs, a: float, b: float):
    arr = np.array(coeffs, dtype=float)
    while arr.size and abs(arr[-1]) < 1e-300:
        arr = arr[:-1]
    if arr.size <= 1:
        return []
    if arr.size == 2:
        roots = [-arr[0] / arr[1]]
    else:
        rs = np.roots(arr[::-1])
        roots = [float(r.real) for r in rs if abs(r.imag) < 1e-9]
    return sorted(r for r in roots if a < r < b)


def _line_integral(coeffs, a: float, b: float, log_weight: bool, absolute: bool) -> float:
    if a >= b:
        return 0.0
    if not absolute:
        return _line_signed(coeffs, a, b, log_weight)
    cuts = [a] + _line_roots(coeffs, a, b) + [b]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        total += abs(_line_signed(coeffs, lo, hi, log_weight))
    return total


def _clip_log(intervals, eps: float):
    out = []
    for a, b in intervals:
        a, b = float(a), float(b)
        if b > eps:
            out.append((max(a, eps), b))
        if a < -eps:
            out.append((a, min(b, -eps)))
    return [(a, b) for a, b in out if b > a]


def _log_pieces(lo: float, hi: float, eps: float):
    """((s_lo, s_hi, sign_of_x, orientation_sign)) pieces for a log coordinate."""
    pieces = []
    if hi > eps:
        a = max(lo, eps)
        if hi > a:
            pieces.append((math.log(a), math.log(hi), 1.0, 1.0))
    if lo < -eps:
        b = min(hi, -eps)
        if b > lo:
            pieces.append((math.log(-b), math.log(-lo), -1.0, -1.0))
    return pieces


# ---------------------------------------------------------------------------
# the rung integral


class Integrand:
    """Polynomial coefficient (exact inner integral) or pointwise factor.

    `coeff` is the polynomial coefficient of the top-degree term; the
    measure carries one 1/x factor per log variable.  `pointwise`, when
    given, multiplies the polynomial part and is evaluated at full points
    (ambient plus derived auxiliaries); the inner integral then falls back
    to Gauss nodes.
    """

    def __init__(self, coeff: Polynomial, log_vars: Sequence[int],
                 pointwise: Callable | None = None, complex_valued: bool = False):
        self.coeff = coeff
        self.log_vars = tuple(sorted(log_vars))
        self.pointwise = pointwise
        self.complex_valued = complex_valued


def _full_point(region: Region, base: Mapping[int, float]) -> dict:
    full = dict(base)
    extras = region.cells[0].extra if region.cells else ()
    for i, e in enumerate(extras):
        if e.derived_from is not None and e.derived_from in full:
            full[region.n + i] = math.sqrt(full[e.derived_from] ** 2 + 1.0)
    return full


class _FiberSolver:
    """Fiber intervals along one axis, with a direct interval-arithmetic
    fast path for all-linear cells and generic slicing otherwise."""

    def __init__(self, region: Region, axis: int):
        self.region = region
        self.axis = axis
        box = region.bounding_box()
        self.lo_box = float(box[axis][0])
        self.hi_box = float(box[axis][1])
        self.linear = []
        generic = []
        for cell in region.cells:
            if not cell.extra and all(c.is_linear() for c in cell.constraints):
                rows = []
                for c in cell.constraints:
                    coeffs, offset = c.payload.as_affine()
                    rows.append(
                        (
                            np.array([float(v) for v in coeffs]),
                            float(-offset),
                            c.equality,
                        )
                    )
                self.linear.append(rows)
            else:
                generic.append(cell)
        self.generic_region = region.with_cells(generic) if generic else None

    def intervals(self, base: Mapping[int, float]) -> list:
        n = self.region.n
        vec = np.zeros(n)
        for v, val in base.items():
            if v < n:
                vec[v] = val
        out = []
        for rows in self.linear:
            lo, hi = self.lo_box, self.hi_box
            empty = False
            for a, rhs, eq in rows:
                c = a[self.axis]
                rest = float(a @ vec) - c * vec[self.axis]
                rem = rhs - rest
                tol = 1e-9 * (1.0 + abs(rhs))
                if eq:
                    if abs(c) > 1e-12:
                        empty = True  # point fiber: measure zero
                        break
                    if abs(rem) > tol:
                        empty = True
                        break
                elif c > 1e-12:
                    hi = min(hi, rem / c)
                elif c < -1e-12:
                    lo = max(lo, rem / c)
                elif rem < -tol:
                    empty = True
                    break
                if hi <= lo:
                    empty = True
                    break
            if not empty and hi > lo:
                out.append((lo, hi))
        if self.generic_region is not None:
            fs = slice_fiber(self.generic_region, base, self.axis, mode="float")
            out.extend((float(a), float(b)) for a, b in fs.intervals)
        out.sort()
        merged = []
        for lo, hi in out:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return merged


def _final_level_cuts(solver: "_FiberSolver", level_var: int,
                      base: Mapping[int, float], lo: float, hi: float) -> list:
    """Breakpoints, in the level variable, of the fiber structure of the
    linear cells (crossings of the affine inner-bound candidates and
    feasibility flips of rows without the inner variable).  Between
    consecutive cuts the one-level-up integrand is analytic."""
    n = solver.region.n
    vec = np.zeros(n)
    for v, val in base.items():
        if v < n:
            vec[v] = val
    vec[solver.axis] = 0.0
    vec[level_var] = 0.0
    cuts = set()
    for rows in solver.linear:
        cands = [(solver.lo_box, 0.0), (solver.hi_box, 0.0)]
        for a, rhs, _eq in rows:
            ci = a[solver.axis]
            cl = a[level_var]
            rem = rhs - float(a @ vec)
            if abs(ci) > 1e-12:
                cands.append((rem / ci, -cl / ci))
            elif abs(cl) > 1e-12:
                cuts.add(rem / cl)
        for i in range(len(cands)):
            ai, bi = cands[i]
            for j in range(i + 1, len(cands)):
                aj, bj = cands[j]
                if abs(bi - bj) > 1e-12:
                    cuts.add((aj - ai) / (bi - bj))
    return sorted(x for x in cuts if lo + 1e-13 < x < hi - 1e-13)


def _fiber_integral(region: Region, base: dict, axis: int, eps: float,
                    integrand: Integrand, absolute: bool, cfg: QuadConfig,
                    solver: "_FiberSolver | None" = None):
    if solver is not None:
        intervals = solver.intervals(base)
    else:
        fs = slice_fiber(region, base, axis, mode="float")
        intervals = [(float(a), float(b)) for a, b in fs.intervals]
    log_inner = axis in integrand.log_vars
    if log_inner:
        intervals = _clip_log(intervals, eps)
    if not intervals:
        return 0.0
    full = _full_point(region, base)
    if integrand.pointwise is None:
        coeffs = _poly_line_coeffs(integrand.coeff, full, axis)
        return sum(
            _line_integral(coeffs, a, b, log_inner, absolute) for a, b in intervals
        )
    total = 0.0
    xs, ws = _gauss_nodes(cfg.nodes)
    nvars = region.n + (len(region.cells[0].extra) if region.cells else 0)
    for a, b in intervals:
        if log_inner:
            # x = sign * e^s over [log|a|, log|b|]
            sgn = 1.0 if a > 0 else -1.0
            s_lo, s_hi = math.log(abs(a)), math.log(abs(b))
            if s_lo > s_hi:
                s_lo, s_hi = s_hi, s_lo
            mid, half = 0.5 * (s_lo + s_hi), 0.5 * (s_hi - s_lo)
            svals = mid + half * xs
            xvals = sgn * np.exp(svals)
            orient = 1.0 if (absolute or sgn > 0) else -1.0
            weights = ws * half * orient
        else:
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            xvals = mid + half * xs
            weights = ws * half
        pts = np.zeros((len(xvals), nvars))
        for v, val in full.items():
            pts[:, v] = val
        pts[:, axis] = xvals
        extras = region.cells[0].extra if region.cells else ()
        for i, e in enumerate(extras):
            if e.derived_from is not None:
                pts[:, region.n + i] = np.sqrt(pts[:, e.derived_from] ** 2 + 1.0)
        vals = integrand.coeff.eval_many(pts[:, : integrand.coeff.nvars])
        vals = vals * integrand.pointwise(pts)
        if absolute:
            vals = np.abs(vals)
        total += float(np.real(np.sum(weights * vals)))
    return total


def _rung_value(region: Region, integrand: Integrand, eps: float,
                absolute: bool, cfg: QuadConfig, rung_index: int):
    """One excision rung; returns (value, error_estimate, stderr)."""
    box = region.bounding_box()
    n = region.n
    if n > cfg.mc_threshold:
        return _mc_rung(region, integrand, eps, absolute, cfg, rung_index)
    # divisor coordinates go innermost: constraints coupling the radii then
    # produce kinks (not jumps) in the outer integrands, and the singular
    # direction is integrated by the exact closed form.
    quad_vars = [v for v in range(n) if v >= region.p] + list(range(region.p))
    inner = quad_vars[-1]
    outers = quad_vars[:-1]
    err_acc = [0.0]
    solver = _FiberSolver(region, inner)

    def level(d: int, base: dict):
        if d == len(outers):
            return _fiber_integral(region, base, inner, eps, integrand, absolute,
                                   cfg, solver)
        var = outers[d]
        lo, hi = box[var]
        tol_d = cfg.quad_tol * cfg.nested_shrink**d
        final = d == len(outers) - 1
        total = 0.0
        if var in integrand.log_vars:
            for s_lo, s_hi, sgn, orient in _log_pieces(lo, hi, eps):
                factor = 1.0 if absolute else orient

                def g(s, sgn=sgn):
                    base[var] = sgn * math.exp(s)
                    return level(d + 1, base)

                if final:
                    xcuts = _final_level_cuts(solver, var, base,
                                              min(sgn * math.exp(s_lo), sgn * math.exp(s_hi)),
                                              max(sgn * math.exp(s_lo), sgn * math.exp(s_hi)))
                    scuts = sorted(math.log(abs(x)) for x in xcuts if x * sgn > 0)
                else:
                    scuts = []
                segs = [s_lo] + [s for s in scuts if s_lo < s < s_hi] + [s_hi]
                budget = tol_d / max(1, len(segs) - 1)
                for a2, b2 in zip(segs, segs[1:]):
                    total += factor * _adaptive_1d(
                        g, a2, b2, budget, cfg.max_depth, err_acc
                    )
        else:

            def g(x):
                base[var] = x
                return level(d + 1, base)

            cuts = _final_level_cuts(solver, var, base, lo, hi) if final else []
            segs = [lo] + cuts + [hi]
            budget = tol_d / max(1, len(segs) - 1)
            for a2, b2 in zip(segs, segs[1:]):
                total += _adaptive_1d(g, a2, b2, budget, cfg.max_depth, err_acc)
        base.pop(var, None)
        return total

    if integrand.complex_valued and not absolute:
        # run twice against real and imaginary parts of the pointwise factor
        pw = integrand.pointwise
        re = Integrand(integrand.coeff, integrand.log_vars,
                       lambda pts: np.real(pw(pts)), False)
        im = Integrand(integrand.coeff, integrand.log_vars,
                       lambda pts: np.imag(pw(pts)), False)
        vr = _rung_value(region, re, eps, absolute, cfg, rung_index)
        vi = _rung_value(region, im, eps, absolute, cfg, rung_index)
        return complex(vr[0], vi[0]), vr[1] + vi[1], 0.0

    value = level(0, {}) if n > 1 else _fiber_integral(
        region, {}, 0, eps, integrand, absolute, cfg, solver
    )
    return value, err_acc[0], 0.0


def _mc_rung(region: Region, integrand: Integrand, eps: float,
             absolute: bool, cfg: QuadConfig, rung_index: int):
    """Stratified Monte-Carlo over the per-coordinate domain pieces."""
    box = region.bounding_box()
    n = region.n
    if region.cells and any(e.derived_from is None for c in region.cells for e in c.extra):
        raise IntegrationError("Monte-Carlo path cannot handle existential variables")
    per_var = []
    for v in range(n):
        lo, hi = box[v]
        if v in integrand.log_vars:
            pieces = [
                ("log", s_lo, s_hi, sgn, orient)
                for s_lo, s_hi, sgn, orient in _log_pieces(lo, hi, eps)
            ]
        else:
            pieces = [("lin", lo, hi, 1.0, 1.0)]
        if not pieces:
            return 0.0, 0.0, 0.0
        per_var.append(pieces)

    combos = [[]]
    for pieces in per_var:
        combos = [c + [p] for c in combos for p in pieces]
    rng = np.random.Generator(np.random.Philox(key=cfg.seed * 1000003 + rung_index))
    total = 0.0 + (0j if integrand.complex_valued and not absolute else 0.0)
    var_sum = 0.0
    budget = max(16, cfg.mc_budget // max(1, len(combos)))
    for combo in combos:
        vol = 1.0
        orient = 1.0
        for kind, a, b, sgn, osign in combo:
            vol *= b - a
            if not absolute:
                orient *= osign
        if vol <= 0:
            continue
        u = rng.uniform(0.0, 1.0, size=(budget, n))
        pts = np.zeros((budget, n))
        for v, (kind, a, b, sgn, osign) in enumerate(combo):
            t = a + (b - a) * u[:, v]
            pts[:, v] = sgn * np.exp(t) if kind == "log" else t
        inside = region.members(pts)
        vals = integrand.coeff.eval_many(pts).astype(
            complex if integrand.complex_valued else float
        )
        if integrand.pointwise is not None:
            full = pts
            vals = vals * integrand.pointwise(full)
        if absolute:
            vals = np.abs(vals)
        vals = np.where(inside, vals, 0.0)
        mean = vals.mean()
        total += orient * vol * mean
        spread = float(np.abs(vals - mean).std()) if budget > 1 else 0.0
        var_sum += (vol * spread) ** 2 / budget
    stderr = math.sqrt(var_sum)
    return total, stderr, stderr


# ---------------------------------------------------------------------------
# public operations


def _top_integrand(region: Region, form: LogForm) -> Integrand:
    if form.n != region.n:
        raise IntegrationError("form ambient does not match the region")
    if form.degree != region.n:
        raise IntegrationError(
            f"need a top-degree form (degree {region.n}), got degree {form.degree}"
        )
    key = (tuple(range(form.p)), tuple(range(form.p, form.n)))
    if not form.terms:
        return Integrand(Polynomial.zero(region.n), ())
    coeff = form.terms.get(key)
    if coeff is None:
        raise IntegrationError("top-degree form has an unexpected term shape")
    return Integrand(coeff, tuple(range(form.p)))


def _build_ladder(region: Region, integrand: Integrand, cfg: QuadConfig,
                  absolute: bool) -> Ladder:
    entries = []
    if not integrand.log_vars or integrand.coeff.is_zero():
        value, err, stderr = _rung_value(region, integrand, 0.0, absolute, cfg, 0)
        entries = [(0.0, value, stderr + err)]
        ladder = Ladder(entries, "converged", value, err + stderr)
        return ladder
    values = []
    for k, eps in enumerate(cfg.rungs()):
        value, err, stderr = _rung_value(region, integrand, eps, absolute, cfg, k)
        entries.append((eps, value, stderr + err))
        values.append(value)
        if cfg.early_stop and len(values) >= cfg.window + 1:
            tail = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
            noise = cfg.abs_tol + cfg.rel_tol * max(1.0, abs(value))
            if all(d <= noise for d in tail[-cfg.window:]):
                break
    return classify_ladder(entries, cfg)


def integrate_log_form(region: Region, form: LogForm, cfg: QuadConfig | None = None,
                       integrand: Integrand | None = None) -> IntegralResult:
    """Signed integral with the standard orientation of R^n, plus the
    absolute integral and the excision ladders behind both."""
    cfg = cfg or QuadConfig()
    integrand = integrand or _top_integrand(region, form)
    ladder = _build_ladder(region, integrand, cfg, absolute=False)
    abs_ladder = _build_ladder(region, integrand, cfg, absolute=True)
    value = ladder.limit if ladder.limit is not None else ladder.values()[-1]
    error = ladder.error if ladder.error is not None else float("nan")
    absolute = (
        abs_ladder.limit if abs_ladder.limit is not None else abs_ladder.values()[-1]
    )
    flags = ["orientation: standard orientation of R^n (signed references match up to orientation)"]
    if ladder.verdict == "diverging" or abs_ladder.verdict == "diverging":
        flags.append("diverging")
    return IntegralResult(value, error, absolute, ladder, abs_ladder, flags)


def integrate_abs(region: Region, form: LogForm, cfg: QuadConfig | None = None) -> float:
    cfg = cfg or QuadConfig()
    integrand = _top_integrand(region, form)
    ladder = _build_ladder(region, integrand, cfg, absolute=True)
    return ladder.limit if ladder.limit is not None else ladder.values()[-1]


def excision_ladder(region: Region, form: LogForm, cfg: QuadConfig | None = None,
                    absolute: bool = False) -> Ladder:
    cfg = cfg or QuadConfig()
    integrand = _top_integrand(region, form)
    return _build_ladder(region, integrand, cfg, absolute)


def integrate_mc(region: Region, form: LogForm, eps: float,
                 cfg: QuadConfig | None = None, absolute: bool = False):
    """Stratified Monte-Carlo estimate of a single rung (oracle use)."""
    cfg = cfg or QuadConfig()
    integrand = _top_integrand(region, form)
    value, err, stderr = _mc_rung(region, integrand, eps, absolute, cfg, 0)
    return value, stderr


def quadrature_rung(region: Region, form: LogForm, eps: float,
                    cfg: QuadConfig | None = None, absolute: bool = False):
    cfg = cfg or QuadConfig()
    integrand = _top_integrand(region, form)
    value, err, _ = _rung_value(region, integrand, eps, absolute, cfg, 0)
    return value, err


# ---------------------------------------------------------------------------
# decay fits


@dataclass
class DecayFit:
    scale: float      # C
    exponent: float   # alpha
    residual: float
    used: int
    dropped: int
    flags: list = field(default_factory=list)


def fit_decay_exponent(pairs: Sequence[tuple]) -> DecayFit:
    """Least squares line on (log t, log vol); zero entries are dropped."""
    usable = [(t, v) for t, v in pairs if v > 0 and t > 0]
    dropped = len(pairs) - len(usable)
    if len(usable) < 4:
        raise IntegrationError(
            f"need at least 4 positive entries to fit a decay law, got {len(usable)}"
        )
    xs = np.log([t for t, _ in usable])
    ys = np.log([v for _, v in usable])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = float(np.sqrt(np.mean((ys - (slope * xs + intercept)) ** 2)))
    flags = []
    if slope < 0.05:
        flags.append("no decay")
    return DecayFit(float(np.exp(intercept)), float(slope), resid, len(usable), dropped, flags)


@dataclass
class DecayReport:
    monomial: dict
    entries: list  # (t, vol)
    fit: DecayFit | None
    verdict: str
    heuristic: bool = False

    def __str__(self):
        if self.fit is None:
            return f"decay: {self.verdict}"
        return (
            f"decay: {self.verdict} alpha={self.fit.exponent:.4f} "
            f"C={self.fit.scale:.4g} residual={self.fit.residual:.3g}"
        )


def default_t_ladder():
    return [2.0**-k for k in range(2, 11)]


def slice_region_and_form(region: Region, u: Mapping[int, int], form: LogForm, t: float):
    """The slice {u = t} as a region in one fewer coordinate, with the form
    restricted to it.

    For u = r_j^k the coordinate is fixed to t^(1/k).  For a multi-variable
    monomial some exponent must be 1; that coordinate is eliminated through
    r_j = t * prod r_i^-m_i, clearing denominators against the positive
    orthant (the region must have nonnegative bounds on the participating
    coordinates), and dr_j/r_j restricts to -sum m_i dr_i/r_i.
    """
    u = {int(v): int(e) for v, e in u.items() if e}
    if not u:
        raise IntegrationError("the monomial u must be nontrivial")
    if any(not 0 <= v < region.p for v in u):
        raise IntegrationError("u must be a monomial in the divisor coordinates")
    if len(u) == 1:
        (j, k), = u.items()
        tj = t ** (1.0 / k) if k > 1 else t
        sub = region.substitute_coordinate(j, Fraction(tj))
        restricted = form.substitute_log_relation(j, [])
        out = LogForm.zero(form.n, form.p, form.degree)
        for (I, J), coeff in restricted.terms.items():
            out = out + LogForm.term(form.n, form.p,
                                     coeff.partial_eval({j: Fraction(tj)}), I, J)
        return sub, out.remove_coordinate(j)

    j = next((v for v, e in sorted(u.items()) if e == 1), None)
    if j is None:
        raise IntegrationError(
            "unsupported monomial: need a unit exponent to eliminate a coordinate"
        )
    box = region.bounding_box()
    for v in u:
        if box[v][0] < 0:
            raise IntegrationError(
                "multi-variable slices need the region inside the positive orthant"
            )
    others = [(v, e) for v, e in sorted(u.items()) if v != j]
    n = region.n
    t_frac = Fraction(t)

    def substitute(payload: Polynomial) -> Polynomial:
        d = payload.degree_in(j)
        out: dict = {}
        for exp, c in payload.terms.items():
            e = exp[j]
            new = list(exp)
            new[j] = 0
            for v, m in others:
                new[v] += m * (d - e)
            coeff = c * t_frac**e
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + coeff
        return Polynomial(n, out)

    from .region import Cell, Constraint

    cells = []
    hi_j = Fraction(box[j][1])
    for cell in region.cells:
        if cell.extra:
            raise IntegrationError("cells with auxiliary variables cannot be sliced")
        consts = [Constraint(substitute(c.payload), c.equality) for c in cell.constraints]
        # keep the slice away from the cleared divisor locus: r_j <= hi_j
        # becomes t <= hi_j * prod r_i^m_i.
        guard = {(0,) * n: Fraction(t)}
        mono = [0] * n
        for v, m in others:
            mono[v] = m
        guard[tuple(mono)] = -hi_j
        consts.append(Constraint(Polynomial(n, guard), equality=False))
        cells.append(Cell(consts))
    sliced = Region(n, region.p, cells, region.kind, region.box, region.name)
    sliced = sliced.substitute_coordinate(j, 0)  # j no longer occurs

    relation = [(Fraction(-m), v) for v, m in others]
    restricted = form.substitute_log_relation(j, relation)
    for (I, J), coeff in restricted.terms.items():
        if coeff.uses_var(j):
            raise IntegrationError(
                "form coefficients may not involve the eliminated coordinate"
            )
    reduced = restricted.remove_coordinate(j)
    return sliced, reduced


def slice_decay_report(region: Region, u: Mapping[int, int], form: LogForm,
                       cfg: QuadConfig | None = None,
                       ts: Sequence[float] | None = None,
                       probe: ProbeConfig | None = None) -> DecayReport:
    """Fit vol(A cap {u = t}) ~ C t^alpha over a ladder of slice values."""
    cfg = cfg or QuadConfig()
    ts = list(ts) if ts is not None else default_t_ladder()
    verdict_allow = region.is_allowable(cfg=probe)
    if not verdict_allow.ok:
        raise RegionError(f"precondition: region is not allowable ({verdict_allow})")
    entries = []
    for t in ts:
        sliced, reduced = slice_region_and_form(region, u, form, t)
        if not sliced.cells:
            entries.append((t, 0.0))
            continue
        entries.append((t, integrate_abs(sliced, reduced, cfg)))
    if all(v <= cfg.abs_tol for _, v in entries):
        return DecayReport(dict(u), entries, None, "identically zero",
                           verdict_allow.heuristic)
    fit = fit_decay_exponent(entries)
    verdict = "decays to zero" if fit.exponent > 0.05 else "no decay detected"
    return DecayReport(dict(u), entries, fit, verdict, verdict_allow.heuristic)


# ---------------------------------------------------------------------------
# pushforward bound and deformation limits


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    delta: int | None
    max_coeff: float
    image_volume: float
    verdict: str  # pass | fail | inconclusive

    def __str__(self):
        return f"{self.verdict}: |integral|={self.lhs:.6g} <= {self.rhs:.6g}"


def _delta_probe_1d(region: Region, f: Polynomial, samples: int, cap: int, seed: int):
    """Max fiber cardinality of a scalar map on a 1-d region, by counting
    roots of f - u over sampled image values."""
    box = region.bounding_box()
    rng = np.random.Generator(np.random.Philox(key=seed))
    xs = np.linspace(box[0][0], box[0][1], 512)
    inside = region.members(xs[:, None])
    if not inside.any():
        return 0, 0.0, (0.0, 0.0)
    fvals = f.eval_many(xs[:, None])
    lo, hi = float(fvals[inside].min()), float(fvals[inside].max())
    best = 0
    hits = 0
    trials = samples
    for _ in range(trials):
        u = float(rng.uniform(lo, hi))
        shifted = f - Polynomial.const(1, u)
        coeffs = [0.0] * (shifted.degree() + 1)
        for exp, c in shifted.terms.items():
            coeffs[exp[0]] = float(c)
        arr = np.array(coeffs)
        while arr.size and abs(arr[-1]) < 1e-300:
            arr = arr[:-1]
        if arr.size <= 1:
            continue
        roots = np.roots(arr[::-1]) if arr.size > 2 else np.array([-arr[0] / arr[1]])
        real = [float(r.real) for r in roots if abs(r.imag) < 1e-9]
        pts = np.array([[r] for r in real]) if real else np.zeros((0, 1))
        count = int(region.members(pts).sum()) if len(pts) else 0
        if count:
            hits += 1
        best = max(best, count)
        if best > cap:
            return best, (hi - lo), (lo, hi)
    vol = (hi - lo) * hits / trials
    return best, vol, (lo, hi)


def pushforward_bound_check(region: Region, fs: Sequence[Polynomial], a: Polynomial,
                            cfg: QuadConfig | None = None, samples: int = 256,
                            cap: int = 64) -> BoundReport:
    """Check |int a df_1 ^ ... ^ df_m| <= delta(f) * max|a| * vol(f(S))."""
    cfg = cfg or QuadConfig()
    m = len(fs)
    if region.n != m:
        raise IntegrationError("need dim S = m = number of map components")
    target = LogForm.term(m, 0, Polynomial.const(m, 1), (), tuple(range(m)))
    pulled = target.pullback_polymap(list(fs), p_source=region.p).scale(a)
    result = integrate_log_form(region, pulled, cfg)
    lhs = abs(result.value)

    box = region.bounding_box()
    rng = np.random.Generator(np.random.Philox(key=cfg.seed + 7))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = rng.uniform(lo, hi, size=(4096, region.n))
    inside = region.members(pts)
    if inside.any():
        max_a = float(np.abs(a.eval_many(pts[inside])).max())
    else:
        max_a = 0.0
    if a.is_constant():
        max_a = abs(float(a.constant_value()))
    max_a *= 1.05

    if m == 1:
        delta, image_vol, _ = _delta_probe_1d(region, fs[0], samples, cap, cfg.seed)
        if delta > cap:
            return BoundReport(lhs, delta * max_a * image_vol, None, max_a,
                               image_vol, "inconclusive")
        rhs = delta * max_a * image_vol
        verdict = "pass" if lhs <= rhs + cfg.abs_tol else "fail"
        return BoundReport(lhs, rhs, delta, max_a, image_vol, verdict)
    return BoundReport(lhs, float("nan"), None, max_a, float("nan"), "inconclusive")


def deformation_limit_check(region: Region, comps: Sequence[Polynomial],
                            psi: LogForm, ts: Sequence[float] | None = None,
                            cfg: QuadConfig | None = None):
    """Values of int_S h_t^* psi along a ladder of deformation parameters,
    with the verdict comparing the extrapolated limit to the t = 0 value.

    Components are polynomials in the region coordinates plus a trailing
    deformation variable.
    """
    cfg = cfg or QuadConfig()
    ts = list(ts) if ts is not None else [2.0**-k for k in range(1, 9)]
    n = region.n

    def at(t: float) -> float:
        frozen = [h.partial_eval({n: Fraction(t)}).drop_vars([n]) for h in comps]
        pulled = psi.pullback_polymap(frozen, p_source=region.p)
        return integrate_log_form(region, pulled, cfg).value

    v0 = at(0.0)
    entries = [(t, at(t), 0.0) for t in sorted(ts, reverse=True)]
    ladder = classify_ladder(entries, cfg)
    limit = ladder.limit if ladder.limit is not None else entries[-1][1]
    tol = cfg.abs_tol + cfg.rel_tol * max(1.0, abs(v0)) + (ladder.error or 0.0)
    if ladder.verdict == "converged" and abs(limit - v0) <= tol:
        ladder.verdict = "converged"
        ladder.limit = limit
    elif abs(entries[-1][1] - v0) <= tol:
        ladder.verdict = "converged"
        ladder.limit = entries[-1][1]
        ladder.error = tol
    else:
        ladder.verdict = "inconclusive"
    return ladder, v0
