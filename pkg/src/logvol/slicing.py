"""Real-root isolation and fiberwise slicing of a region along one axis.

Root isolation is exact: Descartes sign-variation counts on interval
transforms of the square-free part, bisected until each interval holds one
root, with multiplicities recovered from the square-free decomposition.
Slicing substitutes a base point into every constraint and keeps the
intervals between critical values whose midpoints satisfy the cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from .polyform import Polynomial, PolyError
from .region import Region, RegionError


# ---------------------------------------------------------------------------
# univariate helpers over Fraction coefficient lists (ascending degree)


def _trim(coeffs):
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs


def _derive(coeffs):
    return _trim([coeffs[i] * i for i in range(1, len(coeffs))])


def _eval(coeffs, x):
    total = Fraction(0)
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _divmod_poly(num, den):
    num = list(num)
    den = _trim(list(den))
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(0, len(num) - len(den) + 1)
    while len(num) >= len(den) and _trim(list(num)):
        num = _trim(num)
        if len(num) < len(den):
            break
        shift = len(num) - len(den)
        factor = num[-1] / den[-1]
        q[shift] = factor
        for i, d in enumerate(den):
            num[shift + i] -= factor * d
        num = num[:-1]
    return _trim(q), _trim(num)


def _gcd_poly(a, b):
    a = _trim(list(a))
    b = _trim(list(b))
    while b:
        _, r = _divmod_poly(a, b)
        a, b = b, r
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _square_free_decomposition(coeffs):
    """Yun's algorithm: list of (factor, multiplicity)."""
    a = _trim(list(coeffs))
    if len(a) <= 1:
        return []
    d = _gcd_poly(a, _derive(a))
    b, _ = _divmod_poly(a, d)
    c, _ = _divmod_poly(_derive(a), d)
    z = _trim([ci - bi for ci, bi in _pad(c, _derive(b))])
    out = []
    k = 1
    while len(b) > 1:
        g = _gcd_poly(b, z)
        if len(g) > 1:
            out.append((g, k))
        b, _ = _divmod_poly(b, g)
        c, _ = _divmod_poly(z, g)
        z = _trim([ci - bi for ci, bi in _pad(c, _derive(b))])
        k += 1
    return out


def _pad(a, b):
    width = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (width - len(a))
    b = list(b) + [Fraction(0)] * (width - len(b))
    return zip(a, b)


def _taylor_shift(coeffs, t):
    """Coefficients of f(x + t)."""
    out = list(coeffs)
    n = len(out)
    for i in range(n - 1, -1, -1):
        for j in range(i, n - 1):
            out[j] += t * out[j + 1]
    return out


def _scale(coeffs, s):
    return [c * s**i for i, c in enumerate(coeffs)]


def _sign_variations(coeffs):
    signs = [c for c in coeffs if c != 0]
    count = 0
    for a, b in zip(signs, signs[1:]):
        if (a < 0) != (b < 0):
            count += 1
    return count


def _descartes_count(coeffs, a, b):
    """Upper bound (exact when 0 or 1) for the roots in the open interval."""
    shifted = _taylor_shift(coeffs, a)
    scaled = _scale(shifted, b - a)
    rev = list(reversed(scaled))
    return _sign_variations(_taylor_shift(rev, Fraction(1)))


@dataclass
class RootIntervals:
    """Sorted disjoint rational intervals, one real root each."""

    intervals: list  # (lo, hi, multiplicity); lo == hi marks an exact root

    def roots_float(self):
        return [float((lo + hi) / 2) for lo, hi, _ in self.intervals]

    def __len__(self):
        return len(self.intervals)


def isolate_real_roots(poly, tol=Fraction(1, 10**12)) -> RootIntervals:
    """Isolate all real roots of a univariate polynomial.

    Accepts a one-variable Polynomial or an ascending coefficient list of
    Fractions.  Each returned interval has width <= tol and carries the
    multiplicity of its root.
    """
    if isinstance(poly, Polynomial):
        if poly.nvars != 1:
            raise PolyError("root isolation needs a univariate polynomial")
        coeffs = [Fraction(0)] * (poly.degree() + 1)
        for exp, c in poly.terms.items():
            coeffs[exp[0]] = c
    else:
        coeffs = [Fraction(c) for c in poly]
    coeffs = _trim(list(coeffs))
    if not coeffs:
        raise PolyError("zero polynomial has no isolated roots")
    if len(coeffs) == 1:
        return RootIntervals([])
    tol = Fraction(tol)

    factors = _square_free_decomposition(coeffs)
    sf = [Fraction(1)]
    for g, _ in factors:
        prod = [Fraction(0)] * (len(sf) + len(g) - 1)
        for i, ci in enumerate(sf):
            for j, cj in enumerate(g):
                prod[i + j] += ci * cj
        sf = prod
    if len(sf) <= 1:
        return RootIntervals([])

    exact_roots = []

    def deflate(poly, root):
        # exact synthetic division by (Y - root)
        out = [Fraction(0)] * (len(poly) - 1)
        carry = Fraction(0)
        for i in range(len(poly) - 1, 0, -1):
            carry = poly[i] + carry
            out[i - 1] = carry
            carry = carry * root
        return out

    # Exact rational roots found at bisection midpoints are divided out and
    # the walk restarts, so isolating-interval endpoints are never roots.
    isolating = []
    while True:
        if len(sf) <= 1:
            break
        if len(sf) == 2:
            exact_roots.append(-sf[0] / sf[1])
            break
        bound = Fraction(1) + max(abs(c) for c in sf[:-1]) / abs(sf[-1])
        isolating = []
        restart = False
        stack = [(-bound, bound)]
        while stack:
            a, b = stack.pop()
            count = _descartes_count(sf, a, b)
            if count == 0:
                continue
            if count == 1:
                isolating.append((a, b))
                continue
            mid = (a + b) / 2
            if _eval(sf, mid) == 0:
                exact_roots.append(mid)
                sf = deflate(sf, mid)
                restart = True
                break
            stack.append((a, mid))
            stack.append((mid, b))
        if not restart:
            break

    refined = []
    for a, b in isolating:
        exact_here = None
        while b - a > tol:
            mid = (a + b) / 2
            v = _eval(sf, mid)
            if v == 0:
                exact_here = mid
                break
            if (_eval(sf, a) < 0) != (v < 0):
                b = mid
            else:
                a = mid
        if exact_here is not None:
            exact_roots.append(exact_here)
        else:
            refined.append((a, b))

    out = [(r, r) for r in exact_roots] + refined
    out.sort()

    def multiplicity(lo, hi):
        for g, k in factors:
            if lo == hi:
                if _eval(g, lo) == 0:
                    return k
            else:
                va, vb = _eval(g, lo), _eval(g, hi)
                if va == 0 or vb == 0 or (va < 0) != (vb < 0):
                    return k
        return 1

    return RootIntervals([(lo, hi, multiplicity(lo, hi)) for lo, hi in out])


# ---------------------------------------------------------------------------
# fibers


@dataclass
class FiberSlices:
    base: dict
    axis: int
    intervals: list  # [(lo, hi)] sorted, disjoint, floats or Fractions
    degenerate: bool = False

    def total_length(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))


def _restrict_to_axis(payload: Polynomial, base: Mapping[int, object], axis: int,
                      exact: bool):
    """Coefficient list (ascending) of the payload restricted to the line."""
    deg = payload.degree_in(axis)
    if exact:
        coeffs = [Fraction(0)] * (deg + 1)
    else:
        coeffs = [0.0] * (deg + 1)
    for exp, c in payload.terms.items():
        value = c if exact else float(c)
        for v, e in enumerate(exp):
            if v == axis or e == 0:
                continue
            value = value * (base[v] ** e)
        coeffs[exp[axis]] += value
    return coeffs


def _real_roots_of_coeffs(coeffs, exact: bool, tol):
    if exact:
        trimmed = _trim(list(coeffs))
        if len(trimmed) <= 1:
            return []
        if len(trimmed) == 2:
            return [-trimmed[0] / trimmed[1]]
        iso = isolate_real_roots(trimmed, tol)
        return [(lo + hi) / 2 for lo, hi, _ in iso.intervals]
    arr = np.array(coeffs, dtype=float)
    while arr.size and abs(arr[-1]) < 1e-300:
        arr = arr[:-1]
    if arr.size <= 1:
        return []
    if arr.size == 2:
        return [-arr[0] / arr[1]]
    roots = np.roots(arr[::-1])
    scale = max(1.0, float(np.max(np.abs(arr))))
    return sorted(float(r.real) for r in roots if abs(r.imag) < 1e-9 * scale)


def slice_fiber(region: Region, base, axis: int, mode: str = "exact",
                tol=Fraction(1, 10**12)) -> FiberSlices:
    """The fiber of the region over a base point, along one coordinate.

    base maps every ambient coordinate except `axis` to a value.  Exact mode
    requires rational base values; float mode uses numpy root finding (for
    the quadrature inner loop).  When every constraint of a cell vanishes
    identically on the line the cell contributes the whole box interval,
    flagged degenerate.
    """
    exact = mode == "exact"
    if isinstance(base, (list, tuple)):
        base = {v: x for v, x in enumerate(base) if v != axis}
    base = dict(base)
    if exact:
        base = {v: Fraction(x) for v, x in base.items()}
    box = region.bounding_box()
    lo_box, hi_box = box[axis]
    if exact:
        lo_box, hi_box = Fraction(lo_box), Fraction(hi_box)

    pieces = []
    degenerate = False
    for cell in region.cells:
        if any(e.derived_from is None for e in cell.extra):
            raise RegionError("cannot slice a cell with existential variables")
        full_base = dict(base)
        for i, e in enumerate(cell.extra):
            src = e.derived_from
            if src == axis:
                raise RegionError("cannot slice along a coordinate with a derived companion")
            val = full_base[src]
            s = (float(val) ** 2 + 1.0) ** 0.5
            full_base[region.n + i] = Fraction(s) if exact else s
        restricted = []
        all_zero = True
        feasible = True
        for c in cell.constraints:
            coeffs = _restrict_to_axis(c.payload, full_base, axis, exact)
            nonzero = any(
                (v != 0) if exact else (abs(v) > 1e-12) for v in coeffs
            )
            if not nonzero:
                continue
            all_zero = False
            if len(coeffs) == 1:
                v = coeffs[0]
                bad = (v != 0) if c.equality else (v > (0 if exact else 1e-9))
                if bad:
                    feasible = False
                    break
                continue
            restricted.append((coeffs, c.equality))
        if not feasible:
            continue
        if all_zero and not restricted:
            if cell.constraints:
                degenerate = True
                pieces.append((lo_box, hi_box))
            continue

        eqs = [rc for rc in restricted if rc[1]]
        if eqs:
            # candidate roots are isolated to width <= tol, so acceptance of
            # the remaining constraints uses a matching tolerance
            candidates = _real_roots_of_coeffs(eqs[0][0], exact, tol)
            for root in candidates:
                slack = _acceptance_slack(restricted, root, tol)
                ok = True
                for coeffs, equality in restricted:
                    v = _eval(coeffs, root) if exact else _eval_f(coeffs, root)
                    if equality:
                        if abs(v) > slack:
                            ok = False
                            break
                    elif v > slack:
                        ok = False
                        break
                if ok and lo_box <= root <= hi_box:
                    pieces.append((root, root))
            continue

        critical = set()
        for coeffs, _ in restricted:
            for r in _real_roots_of_coeffs(coeffs, exact, tol):
                if lo_box < r < hi_box:
                    critical.add(r)
        points = sorted(critical | {lo_box, hi_box})
        for a, b in zip(points, points[1:]):
            mid = (a + b) / 2
            ok = True
            for coeffs, _ in restricted:
                v = _eval(coeffs, mid) if exact else _eval_f(coeffs, mid)
                if (exact and v > 0) or (not exact and v > 1e-9):
                    ok = False
                    break
            if ok:
                pieces.append((a, b))

    pieces.sort()
    merged = []
    for lo, hi in pieces:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return FiberSlices(base, axis, merged, degenerate)


def _eval_f(coeffs, x):
    total = 0.0
    for c in reversed(coeffs):
        total = total * x + c
    return total


def _acceptance_slack(restricted, root, tol):
    """Constraint tolerance matched to the root localization width: the
    payload can move by about |payload'| * tol across the interval."""
    width = float(tol) if float(tol) > 0 else 1e-12
    scale = 1.0
    for coeffs, _ in restricted:
        deriv = sum(
            abs(float(c)) * k * (abs(float(root)) + 1.0) ** (k - 1)
            for k, c in enumerate(coeffs)
            if k
        )
        scale = max(scale, deriv)
    return max(1e-9, 4.0 * width * scale)


@dataclass
class SupVolumeReport:
    value: float
    samples: int


def slice_sup_volume(region: Region, axis: int, fixed: Mapping[int, object],
                     samples: int = 256, seed: int = 0) -> SupVolumeReport:
    """Sampled lower bound of the supremum, over base points with the given
    divisor coordinates, of the 1-d measure of the fiber along `axis`."""
    box = region.bounding_box()
    free = [v for v in range(region.n) if v != axis and v not in fixed]
    rng = np.random.Generator(np.random.Philox(key=seed))
    best = 0.0
    count = max(1, samples) if free else 1
    for _ in range(count):
        base = {v: float(x) for v, x in fixed.items()}
        for v in free:
            lo, hi = box[v]
            base[v] = float(rng.uniform(lo, hi))
        fs = slice_fiber(region, base, axis, mode="float")
        best = max(best, fs.total_length())
    return SupVolumeReport(best, count)
