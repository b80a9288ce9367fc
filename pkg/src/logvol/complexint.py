"""Reduction of complex logarithmic integrals to real quadrature tasks.

The complex plane is covered by four closed sectors S_a = i^(a-1) * S_1
with S_1 = {x >= |y|}; on each sector the semi-algebraic polar change of
variables (r, tau) -> i^(a-1) * (r + i r tau) / sqrt(tau^2 + 1) is an
isomorphism off the origin.  Under it

    dz/z = dr/r + i dtau/(tau^2 + 1)
    dz/z ^ dzbar = i^(1-a) * (-2)(tau + i) / (tau^2 + 1)^(3/2) dr ^ dtau

so a logarithmic (n, m-n)-form pulls back, per sector assignment and per
partition (P, Q, R) of the coordinates, to a constant times a polynomial
coefficient times bounded smooth prefactors against the real measure

    prod_P dr_i/r_i  prod_Q dtau_j  prod_R dr_k dtau_k .

Regions transform exactly: a z-monomial of pair degree d contributes
r^d * (affine in tau)^d / (tau^2+1)^(d/2); multiplying each constraint by
the positive power (tau^2+1)^ceil(D/2) clears the denominators, with an
auxiliary coordinate s_i = sqrt(tau_i^2 + 1) (s_i in [1, sqrt(2)],
s_i^2 = tau_i^2 + 1) absorbing odd parities.  Dropped coordinates (tau_i
for i in P, r_j for j in Q) are eliminated exactly when they enter every
constraint affinely, and kept as existentially quantified auxiliaries
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from typing import Callable, Mapping, Sequence

import numpy as np

from .integrate import (
    Integrand,
    QuadConfig,
    fit_decay_exponent,
    DecayFit,
    _build_ladder,
)
from .polyform import LogForm, Polynomial
from .region import (
    Cell,
    Constraint,
    ExtraVar,
    ProbeConfig,
    Region,
    eliminate_var_linear,
    simplify_cell,
)


class ComplexIntError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sectors and the polar map


# rotation z = i^(a-1) zeta: (zr, zi) in terms of (x1, y1) = (re, im of zeta)
_ROTATIONS = {
    1: ((1, 0), (0, 1)),    # zr = x1,  zi = y1
    2: ((0, -1), (1, 0)),   # zr = -y1, zi = x1
    3: ((-1, 0), (0, -1)),  # zr = -x1, zi = -y1
    4: ((0, 1), (-1, 0)),   # zr = y1,  zi = -x1
}


def _sector_affines(sector: int):
    """(c1, c2) with zr = r c1(tau)/s, zi = r c2(tau)/s; affine in tau."""
    (a11, a12), (a21, a22) = _ROTATIONS[sector]
    # x1 = r/s, y1 = r tau / s
    c1 = (Fraction(a11), Fraction(a12))  # constant, tau coefficient
    c2 = (Fraction(a21), Fraction(a22))
    return c1, c2


def polar_map(r: float, tau: float, sector: int = 1):
    """Point of the closed sector with |z| = r and angular parameter tau."""
    if not -1.0 <= tau <= 1.0 + 1e-15:
        raise ComplexIntError("tau must lie in [-1, 1]")
    if r < 0:
        raise ComplexIntError("r must be nonnegative")
    s = math.sqrt(tau * tau + 1.0)
    x1, y1 = r / s, r * tau / s
    (a11, a12), (a21, a22) = _ROTATIONS[sector]
    return (a11 * x1 + a12 * y1, a21 * x1 + a22 * y1)


def polar_inverse(x: float, y: float, sector: int = 1):
    """Inverse of polar_map on the closed sector minus the origin."""
    if x == 0.0 and y == 0.0:
        raise ComplexIntError("the polar map collapses the origin")
    (a11, a12), (a21, a22) = _ROTATIONS[sector]
    # rotate back: zeta = i^(1-a) z; the rotation matrix is orthogonal
    x1 = a11 * x + a21 * y
    y1 = a12 * x + a22 * y
    if x1 < -1e-12 or abs(y1) > x1 * (1 + 1e-9) + 1e-12:
        raise ComplexIntError(f"point ({x}, {y}) is outside sector {sector}")
    r = math.hypot(x, y)
    tau = y1 / x1
    return (r, tau)


def sector_constraints(sector: int, nvars: int, zr: int, zi: int) -> list:
    """Two linear inequalities cutting the closed sector out of the plane."""
    x = Polynomial.var(nvars, zr)
    y = Polynomial.var(nvars, zi)
    if sector == 1:
        rows = [y - x, -y - x]
    elif sector == 2:
        rows = [x - y, -x - y]
    elif sector == 3:
        rows = [y + x, -y + x]
    elif sector == 4:
        rows = [x + y, -x + y]
    else:
        raise ComplexIntError(f"unknown sector {sector}")
    return [Constraint(row, equality=False) for row in rows]


def sector_decompose(region: Region) -> list:
    """Pieces A cap (S_a1 x ... x S_an); provably empty pieces dropped,
    undecided ones kept."""
    if region.kind != "complex":
        raise ComplexIntError("sector decomposition expects a complex region")
    out = []
    for alphas, piece, _orig in _sector_pieces(region):
        out.append((alphas, piece))
    return out


def _sector_pieces(region: Region):
    """(assignment, augmented piece, surviving original cells) triples.

    The original cells are what the polar transform consumes: the polar
    domain {r >= 0, |tau| <= 1} maps onto the closed sector, so the sector
    membership rows are implied and would only smuggle auxiliary variables
    into the transformed constraints.
    """
    nc = region.n // 2
    for alphas in iproduct((1, 2, 3, 4), repeat=nc):
        cells = []
        originals = []
        for cell in region.cells:
            nv = cell.nvars_total(region.n)
            consts = list(cell.constraints)
            for i, a in enumerate(alphas):
                consts.extend(sector_constraints(a, nv, 2 * i, 2 * i + 1))
            simp = simplify_cell(region, Cell(consts, cell.extra))
            if simp is not None:
                cells.append(simp)
                originals.append(cell)
        if cells:
            yield alphas, region.with_cells(cells), region.with_cells(originals)


# ---------------------------------------------------------------------------
# forms


@dataclass
class Partition:
    P: tuple
    Q: tuple
    R: tuple

    def __post_init__(self):
        self.P = tuple(sorted(self.P))
        self.Q = tuple(sorted(self.Q))
        self.R = tuple(sorted(self.R))
        pieces = self.P + self.Q + self.R
        if len(set(pieces)) != len(pieces):
            raise ComplexIntError("partition blocks must be disjoint")

    def degree(self) -> int:
        return len(self.P) + len(self.Q) + 2 * len(self.R)


class ComplexLogForm:
    """Sum of terms a(zr, zi) * (dz_1/z_1 ^ ... ^ dz_n/z_n) ^ dzbar_R."""

    def __init__(self, n: int, anti_degree: int, terms: Sequence[tuple]):
        self.n = int(n)
        self.anti_degree = int(anti_degree)
        self.terms = []
        for re, im, R in terms:
            R = tuple(sorted(set(int(k) for k in R)))
            if len(R) != self.anti_degree:
                raise ComplexIntError("every term must carry |R| = m - n dzbar factors")
            if any(not 0 <= k < self.n for k in R):
                raise ComplexIntError("dzbar index out of range")
            if re.nvars != 2 * self.n or im.nvars != 2 * self.n:
                raise ComplexIntError("coefficients live on the 2n real coordinates")
            self.terms.append((re, im, R))

    @property
    def degree(self) -> int:
        return self.n + self.anti_degree

    @staticmethod
    def volume_like(n: int, R: Sequence[int], coeff_re=None, coeff_im=None) -> "ComplexLogForm":
        re = coeff_re if coeff_re is not None else Polynomial.const(2 * n, 1)
        im = coeff_im if coeff_im is not None else Polynomial.zero(2 * n)
        return ComplexLogForm(n, len(tuple(R)), [(re, im, tuple(R))])

    def conjugate(self) -> "ComplexLogForm":
        """The transported complex conjugate: integrating this form over the
        conjugated region gives the conjugate of the original integral.

        Coordinate conjugation has Jacobian determinant (-1)^n, so the
        transport carries that sign besides conjugating the coefficient and
        evaluating it at the conjugate point.
        """
        sign = -1 if self.n % 2 else 1
        flips = []
        for re, im, R in self.terms:
            comps = []
            for v in range(2 * self.n):
                var = Polynomial.var(2 * self.n, v)
                comps.append(-var if v % 2 else var)
            flips.append((sign * re.compose(comps), -sign * im.compose(comps), R))
        return ComplexLogForm(self.n, self.anti_degree, flips)


def conjugate_region(region: Region) -> Region:
    if region.kind != "complex":
        raise ComplexIntError("conjugation expects a complex region")
    comps = []
    for v in range(region.n):
        var = Polynomial.var(region.n, v)
        comps.append(-var if v % 2 else var)
    cells = []
    for cell in region.cells:
        if cell.extra:
            raise ComplexIntError("cells with auxiliaries cannot be conjugated")
        cells.append(
            Cell([Constraint(c.payload.compose(comps), c.equality) for c in cell.constraints])
        )
    box = None
    if region.box is not None:
        box = []
        for v, (lo, hi) in enumerate(region.box):
            box.append((-hi, -lo) if v % 2 else (lo, hi))
    return Region(region.n, region.p, cells, "complex", box, region.name)


# ---------------------------------------------------------------------------
# the exact polar lift of constraints


def _mul_in(term_map, var, power=1):
    """Multiply a {key: coeff} map by var**power; keys are sorted tuples of
    ((kind, index), exponent) pairs with kind in {"v", "s"}."""
    out = {}
    for key, c in term_map.items():
        kd = dict(key)
        kd[var] = kd.get(var, 0) + power
        out[tuple(sorted(kd.items()))] = c
    return out


def _mul_affine(term_map, affine, tau_var):
    c0, c1 = affine
    out = {}
    for key, c in term_map.items():
        if c0 != 0:
            out[key] = out.get(key, Fraction(0)) + c * c0
        if c1 != 0:
            kd = dict(key)
            kd[tau_var] = kd.get(tau_var, 0) + 1
            k2 = tuple(sorted(kd.items()))
            out[k2] = out.get(k2, Fraction(0)) + c * c1
    return {k: v for k, v in out.items() if v != 0}


def _mul_tau_sq_plus_1(term_map, tau_var, power):
    for _ in range(power):
        plus = _mul_in(_mul_in(term_map, tau_var), tau_var)
        out = dict(plus)
        for key, c in term_map.items():
            out[key] = out.get(key, Fraction(0)) + c
        term_map = {k: v for k, v in out.items() if v != 0}
    return term_map


def _lift_payload(payload: Polynomial, alphas, nc: int):
    """Constraint payload in (zr, zi) -> payload over (r_1..r_n, tau_1..tau_n,
    s_i ...) with denominators cleared; returns (poly-as-dict, s_needed)."""
    pair_deg = []
    for i in range(nc):
        d = 0
        for exp in payload.terms:
            d = max(d, exp[2 * i] + exp[2 * i + 1])
        pair_deg.append(d)
    mult = [(d + 1) // 2 for d in pair_deg]  # multiply by (tau^2+1)^mult[i]
    s_needed = set()
    work: dict = {}
    for exp, coeff in payload.terms.items():
        factor_terms = {(): coeff}
        for i in range(nc):
            a_e, b_e = exp[2 * i], exp[2 * i + 1]
            d = a_e + b_e
            if d == 0 and mult[i] == 0:
                continue
            c1, c2 = _sector_affines(alphas[i])
            r_var = ("v", i)
            tau_var = ("v", nc + i)
            if d:
                factor_terms = _mul_in(factor_terms, r_var, d)
                for _ in range(a_e):
                    factor_terms = _mul_affine(factor_terms, c1, tau_var)
                for _ in range(b_e):
                    factor_terms = _mul_affine(factor_terms, c2, tau_var)
            resid = 2 * mult[i] - d  # residual power of s after clearing
            if resid:
                factor_terms = _mul_tau_sq_plus_1(factor_terms, tau_var, resid // 2)
                if resid % 2:
                    s_needed.add(i)
                    factor_terms = _mul_in(factor_terms, ("s", i))
        for key, c in factor_terms.items():
            work[key] = work.get(key, Fraction(0)) + c
    work = {k: v for k, v in work.items() if v != 0}
    return work, s_needed


def _pack_lifted(work: dict, nc: int, s_order: list) -> Polynomial:
    nv = 2 * nc + len(s_order)
    s_pos = {i: 2 * nc + j for j, i in enumerate(s_order)}
    terms = {}
    for key, c in work.items():
        exp = [0] * nv
        for (kind, idx), e in key:
            if kind == "s":
                exp[s_pos[idx]] = e
            else:
                exp[idx] = e
        key2 = tuple(exp)
        terms[key2] = terms.get(key2, Fraction(0)) + c
    return Polynomial(nv, terms)


def _radius_bound(region: Region, i: int) -> float:
    box = region.bounding_box()
    zr_lo, zr_hi = box[2 * i]
    zi_lo, zi_hi = box[2 * i + 1]
    return math.hypot(max(abs(zr_lo), abs(zr_hi)), max(abs(zi_lo), abs(zi_hi)))


def transform_piece(piece: Region, alphas, partition: Partition,
                    extra_polar_constraints: Sequence[tuple] = (),
                    eliminate: Mapping[int, float] | None = None) -> Region:
    """One sector piece in the task coordinates of a partition.

    extra_polar_constraints are (payload-over-(r, tau), equality) pairs in
    the full polar variable order r_1..r_n, tau_1..tau_n, applied before
    projection (used for annulus slices).  `eliminate` fixes full-polar
    coordinates to values before projection.
    """
    nc = piece.n // 2
    keep_r = sorted(set(partition.P) | set(partition.R))
    keep_tau = sorted(set(partition.Q) | set(partition.R))
    drops = sorted({nc + i for i in partition.P} | {j for j in partition.Q})
    radius = [_radius_bound(piece, i) for i in range(nc)]

    task_cells = []
    for cell in piece.cells:
        if cell.extra:
            raise ComplexIntError("complex cells with auxiliaries are not supported")
        works = []
        s_needed = set()
        for c in cell.constraints:
            w, s_n = _lift_payload(c.payload, alphas, nc)
            works.append((w, c.equality))
            s_needed |= s_n
        s_order = sorted(s_needed)
        nv = 2 * nc + len(s_order)
        constraints = [
            Constraint(_pack_lifted(w, nc, s_order), eq) for w, eq in works
        ]
        for payload, eq in extra_polar_constraints:
            constraints.append(Constraint(payload.map_vars(list(range(2 * nc)), nv), eq))
        # polar domain rows
        for i in range(nc):
            r = Polynomial.var(nv, i)
            constraints.append(Constraint(-r, equality=False))
            constraints.append(Constraint(r - Fraction(radius[i] * (1 + 1e-9)), equality=False))
            t = Polynomial.var(nv, nc + i)
            constraints.append(Constraint(t - 1, equality=False))
            constraints.append(Constraint(-t - 1, equality=False))

        if eliminate:
            fixed = {v: Fraction(val) for v, val in eliminate.items()}
            constraints = [
                Constraint(c.payload.partial_eval(fixed), c.equality)
                for c in constraints
            ]

        drop_here = [d for d in drops if not (eliminate and d in eliminate)]
        existential = []
        for v in list(drop_here):
            tau_of_s = v - nc if v >= nc else None
            if tau_of_s is not None and tau_of_s in s_needed:
                existential.append(v)  # an s depends on this tau: keep it
                continue
            attempt = eliminate_var_linear(constraints, v, nv)
            if attempt is None:
                existential.append(v)
            else:
                constraints = attempt

        # final coordinate layout
        kept = [i for i in keep_r] + [nc + j for j in keep_tau]
        if eliminate:
            kept = [v for v in kept if v not in eliminate]
        n_task = len(kept)
        mapping = {}
        for pos, v in enumerate(kept):
            mapping[v] = pos
        extras = []
        for pos, v in enumerate(existential):
            mapping[v] = n_task + pos
            if v >= nc:
                extras.append(ExtraVar(f"tau{v - nc + 1}", -1.0, 1.0))
            else:
                extras.append(ExtraVar(f"r{v + 1}", 0.0, radius[v] * (1 + 1e-9)))
        for j, i in enumerate(s_order):
            mapping[2 * nc + j] = n_task + len(existential) + j
        total = n_task + len(existential) + len(s_order)
        for j, i in enumerate(s_order):
            tau_idx = mapping.get(nc + i)
            if tau_idx is None:
                raise ComplexIntError("internal: s-variable without its tau")
            extras.append(
                ExtraVar(f"s{i + 1}", 1.0, math.sqrt(2.0) + 1e-12, derived_from=tau_idx)
            )

        full_map = [mapping.get(v, 0) for v in range(nv)]
        final = []
        drop_ok = True
        for c in constraints:
            for v in range(nv):
                if v not in mapping and c.payload.uses_var(v):
                    drop_ok = False  # eliminated variable resurfaced
            final.append(Constraint(c.payload.map_vars(full_map, total), c.equality))
        if not drop_ok:
            raise ComplexIntError("projection left a dangling variable")
        task_cells.append(Cell(final, tuple(extras)))

    # task box
    box = []
    for i in keep_r:
        if eliminate and i in eliminate:
            continue
        box.append((Fraction(0), Fraction(radius[i] * (1 + 1e-9))))
    for j in keep_tau:
        if eliminate and (nc + j) in eliminate:
            continue
        box.append((Fraction(-1), Fraction(1)))
    p_task = len([i for i in keep_r if not (eliminate and i in eliminate)])
    shell = Region(len(box), p_task, [], "real", box, piece.name)
    cells = []
    for cell in task_cells:
        simp = simplify_cell(shell, cell)
        if simp is not None:
            cells.append(simp)
    return Region(len(box), p_task, cells, "real", box, piece.name)


# ---------------------------------------------------------------------------
# task assembly


@dataclass
class RealTask:
    """One (sector, term, partition) quadrature job in real coordinates."""

    sector: tuple
    partition: Partition
    region: Region
    poly_re: Polynomial        # over task + auxiliary variables
    poly_im: Polynomial
    prefactor: list            # (tau position, half power e): (tau^2+1)^(-e/2)
    log_positions: tuple       # task positions carrying dr/r
    coeff_eval: Callable | None = None

    def pointwise(self) -> Callable:
        pre = list(self.prefactor)
        re, im = self.poly_re, self.poly_im
        extra = self.coeff_eval
        width = re.nvars  # auxiliary columns (if any) are appended after

        def f(pts: np.ndarray) -> np.ndarray:
            ambient = pts[:, :width]
            vals = re.eval_many(ambient) + 1j * im.eval_many(ambient)
            for pos, e in pre:
                vals = vals * (pts[:, pos] ** 2 + 1.0) ** (-0.5 * e)
            if extra is not None:
                vals = vals * extra(pts)
            return vals

        return f

    def integrand(self) -> Integrand:
        one = Polynomial.const(self.region.n, 1)
        return Integrand(one, self.log_positions, self.pointwise(), complex_valued=True)


_I_POWERS = {0: (1, 0), 1: (0, 1), 2: (-1, 0), 3: (0, -1)}


def _cx(re=0, im=0):
    return (Fraction(re), Fraction(im))


def _cx_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _i_power(k: int):
    return _cx(*_I_POWERS[k % 4])


def _partition_form(partition: Partition, alphas, n_task: int, task_index: Mapping,
                    nc: int):
    """(poly_re, poly_im, prefactor, log_positions) of one pulled-back task.

    The task is integrated against Lebesgue measure in the parametrization
    order (r_P, tau_Q, (r, tau)_R), which the sector maps carry with
    positive Jacobian; reordering the coordinates flips the form
    coefficient and the orientation by the same parity, so no permutation
    sign appears here.  Only the sign from moving each dzbar_k next to its
    dz_k/z_k survives.
    """
    P, Q, R = partition.P, partition.Q, partition.R
    const = _cx(1)
    # moving each dzbar_k (ascending k) next to its dz_k/z_k
    for k in R:
        if (nc - 1 - k) % 2:
            const = _cx_mul(const, _cx(-1))
    # i per Q factor, i^(1-alpha) and -2 per R pair
    const = _cx_mul(const, _i_power(len(Q)))
    for k in R:
        const = _cx_mul(const, _i_power(1 - alphas[k]))
        const = _cx_mul(const, _cx(-2))

    # polynomial part: prod over R of (tau_k + i)
    re = Polynomial.const(n_task, const[0])
    im = Polynomial.const(n_task, const[1])
    for k in R:
        tau = Polynomial.var(n_task, task_index[("tau", k)])
        re, im = re * tau - im, im * tau + re

    prefactor = [(task_index[("tau", j)], 2) for j in Q]
    prefactor += [(task_index[("tau", k)], 3) for k in R]
    log_positions = tuple(task_index[("r", i)] for i in P)
    return re, im, prefactor, log_positions


def _coefficient_eval(re: Polynomial, im: Polynomial, partition: Partition,
                      alphas, task_index: Mapping, nc: int) -> Callable | None:
    """Pointwise a(polar point) for non-constant coefficients; supported when
    the coefficient only involves coordinates whose r and tau both survive."""
    if re.is_constant() and im.is_constant():
        return None
    needed = set()
    for poly in (re, im):
        for exp in poly.terms:
            for v, e in enumerate(exp):
                if e:
                    needed.add(v // 2)
    for i in needed:
        if i not in partition.R:
            raise ComplexIntError(
                "non-constant coefficients are supported only on coordinates whose "
                "polar pair is kept (the R block)"
            )

    def f(pts: np.ndarray) -> np.ndarray:
        zpts = np.zeros((pts.shape[0], 2 * nc))
        for i in needed:
            r = pts[:, task_index[("r", i)]]
            tau = pts[:, task_index[("tau", i)]]
            s = np.sqrt(tau * tau + 1.0)
            (a11, a12), (a21, a22) = _ROTATIONS[alphas[i]]
            x1, y1 = r / s, r * tau / s
            zpts[:, 2 * i] = a11 * x1 + a12 * y1
            zpts[:, 2 * i + 1] = a21 * x1 + a22 * y1
        return re.eval_many(zpts) + 1j * im.eval_many(zpts)

    return f


@dataclass
class PulledBackForm:
    """phi_{P,Q,R} data for one (sector, partition) choice: a polynomial
    complex coefficient (split into real and imaginary parts over the task
    coordinates), the bounded smooth prefactor prod (tau^2+1)^(-e/2), and
    the positions of the task coordinates carrying dr/r factors."""

    partition: Partition
    poly_re: Polynomial
    poly_im: Polynomial
    prefactor: list
    log_positions: tuple
    coeff_eval: Callable | None = None


def pullback_complex_log_form(form: ComplexLogForm, alphas,
                              partition: Partition) -> list:
    """Pull one sector's worth of the form back to real task data.

    Returns one PulledBackForm per form term whose dzbar block matches the
    partition's R; the polynomial part carries i per dtau factor and
    i^(1-alpha) (-2)(tau_k + i) per paired block, and the denominators
    (tau^2+1) and (tau^2+1)^(3/2) ride along as pointwise prefactors.
    """
    nc = form.n
    if partition.degree() != form.degree:
        raise ComplexIntError(
            f"partition degree {partition.degree()} does not match the form "
            f"degree {form.degree}"
        )
    out = []
    for re, im, R in form.terms:
        if tuple(R) != partition.R:
            continue
        index, n_task = _task_index(partition)
        pre, pim, prefactor, logpos = _partition_form(
            partition, alphas, n_task, index, nc
        )
        coeff = _coefficient_eval(re, im, partition, alphas, index, nc)
        if coeff is None:
            c0, c1 = re.constant_value(), im.constant_value()
            pre, pim = pre * c0 - pim * c1, pim * c0 + pre * c1
        out.append(PulledBackForm(partition, pre, pim, prefactor, logpos, coeff))
    return out


def split_projective_charts(region: Region, form: ComplexLogForm,
                            inverted: Sequence[int]):
    """The affine piece of a product-of-lines input for one chart choice.

    The listed coordinates are read in the chart at infinity: the region is
    intersected with {|z_i| >= 1} there (and {|z_i| <= 1} elsewhere) and the
    substitution z_i = 1/w_i is applied, clearing the positive denominators
    (wr^2 + wi^2)^deg.  The form transform flips the sign of dz_i/z_i, so
    inversion is supported exactly when no inverted coordinate carries a
    dzbar factor (otherwise the coefficient turns rational).
    """
    inverted = sorted(set(int(i) for i in inverted))
    nc = region.n // 2
    if any(not 0 <= i < nc for i in inverted):
        raise ComplexIntError("inverted coordinate out of range")
    for _re, _im, R in form.terms:
        for i in inverted:
            if i in R:
                raise ComplexIntError(
                    "cannot invert a coordinate carrying a dzbar factor"
                )
            if _re.uses_var(2 * i) or _re.uses_var(2 * i + 1) or \
                    _im.uses_var(2 * i) or _im.uses_var(2 * i + 1):
                raise ComplexIntError(
                    "cannot invert a coordinate the coefficient depends on"
                )
    n = region.n

    def invert_payload(payload: Polynomial) -> Polynomial:
        # z = 1/w: zr -> wr / |w|^2, zi -> -wi / |w|^2; multiply through by
        # |w|^(2 max-pair-degree) per inverted coordinate.
        out = Polynomial.zero(n)
        degs = {}
        for i in inverted:
            degs[i] = max(
                (exp[2 * i] + exp[2 * i + 1] for exp in payload.terms), default=0
            )
        for exp, c in payload.terms.items():
            term = Polynomial.const(n, c)
            for i in range(nc):
                a_e, b_e = exp[2 * i], exp[2 * i + 1]
                zr = Polynomial.var(n, 2 * i)
                zi = Polynomial.var(n, 2 * i + 1)
                if i in inverted:
                    norm = zr * zr + zi * zi
                    term = term * zr**a_e * (-zi) ** b_e
                    term = term * norm ** (degs[i] - a_e - b_e)
                else:
                    term = term * zr**a_e * zi**b_e
            out = out + term
        return out

    cells = []
    for cell in region.cells:
        if cell.extra:
            raise ComplexIntError("cells with auxiliaries cannot be chart-split")
        consts = [Constraint(invert_payload(c.payload), c.equality)
                  for c in cell.constraints]
        for i in range(nc):
            zr = Polynomial.var(n, 2 * i)
            zi = Polynomial.var(n, 2 * i + 1)
            # after inversion every chart keeps its unit polydisc piece
            consts.append(Constraint(zr * zr + zi * zi - 1, equality=False))
        cells.append(Cell(consts))
    box = [(Fraction(-1), Fraction(1))] * n
    piece = Region(n, region.p, cells, "complex", box, region.name)

    sign = -1 if len(inverted) % 2 else 1
    flipped = ComplexLogForm(
        form.n, form.anti_degree,
        [(sign * re, sign * im, R) for re, im, R in form.terms],
    )
    return piece, flipped


def _task_index(partition: Partition, eliminate_done: set = frozenset()):
    keep_r = sorted(set(partition.P) | set(partition.R))
    keep_tau = sorted(set(partition.Q) | set(partition.R))
    index = {}
    pos = 0
    for i in keep_r:
        if ("r", i) in eliminate_done:
            continue
        index[("r", i)] = pos
        pos += 1
    for j in keep_tau:
        if ("tau", j) in eliminate_done:
            continue
        index[("tau", j)] = pos
        pos += 1
    return index, pos


def reduce_to_real_tasks(region: Region, form: ComplexLogForm, m: int,
                         probe: ProbeConfig | None = None,
                         check_gate: bool = True) -> list:
    """All (sector, term, partition) tasks of an admissible integral."""
    nc = region.n // 2
    if form.n != nc:
        raise ComplexIntError("form and region have different complex dimensions")
    if form.degree != m:
        raise ComplexIntError(f"form degree {form.degree} does not match m={m}")
    if check_gate:
        verdict = region.is_admissible(m, probe)
        if not verdict.ok:
            raise ComplexIntError(f"admissibility gate failed: {verdict}")
    tasks = []
    for alphas, _piece, originals in _sector_pieces(region):
        piece = originals
        for re, im, R in form.terms:
            rest = [i for i in range(nc) if i not in R]
            for bits in iproduct((0, 1), repeat=len(rest)):
                P = tuple(i for i, b in zip(rest, bits) if b == 0)
                Q = tuple(i for i, b in zip(rest, bits) if b == 1)
                part = Partition(P, Q, R)
                index, n_task = _task_index(part)
                task_region = transform_piece(piece, alphas, part)
                if not task_region.cells:
                    continue
                pre, pim, prefactor, logpos = _partition_form(
                    part, alphas, n_task, index, nc
                )
                coeff = _coefficient_eval(re, im, part, alphas, index, nc)
                if coeff is None:
                    c0, c1 = re.constant_value(), im.constant_value()
                    pre, pim = pre * c0 - pim * c1, pim * c0 + pre * c1
                tasks.append(
                    RealTask(alphas, part, task_region, pre, pim, prefactor,
                             logpos, coeff)
                )
    return tasks


def task_allowability(task: RealTask, probe: ProbeConfig | None = None,
                      faces: str = "P"):
    """is_allowable of the transformed region, restricted by default to the
    faces guaranteed by the reduction (subsets of the P block)."""
    region = task.region
    if faces == "P":
        from itertools import combinations

        ppos = list(task.log_positions)
        face_list = []
        for k in range(1, len(ppos) + 1):
            face_list.extend(combinations(ppos, k))
        return region.is_allowable(faces=face_list, cfg=probe)
    return region.is_allowable(cfg=probe)


# ---------------------------------------------------------------------------
# admissible integration


@dataclass
class ComplexIntegralResult:
    value: complex
    error: float
    absolute: float
    verdict: str
    tasks: list = field(default_factory=list)

    def __str__(self):
        return (
            f"value={self.value.real:.8g}{self.value.imag:+.8g}i "
            f"+/- {self.error:.2g} (abs {self.absolute:.6g}, {self.verdict})"
        )


def _integrate_task(task: RealTask, cfg: QuadConfig, absolute: bool = False):
    integrand = task.integrand()
    ladder = _build_ladder(task.region, integrand, cfg, absolute=absolute)
    value = ladder.limit if ladder.limit is not None else ladder.values()[-1]
    error = ladder.error if ladder.error is not None else 0.0
    return value, error, ladder.verdict


def integrate_admissible(region: Region, form: ComplexLogForm, m: int,
                         cfg: QuadConfig | None = None,
                         probe: ProbeConfig | None = None) -> ComplexIntegralResult:
    """Sum of the reduced real tasks, real and imaginary parts separately."""
    cfg = cfg or QuadConfig()
    tasks = reduce_to_real_tasks(region, form, m, probe)
    total = 0j
    error = 0.0
    absolute = 0.0
    verdict = "converged"
    detail = []
    for task in tasks:
        value, err, v = _integrate_task(task, cfg, absolute=False)
        abs_val, abs_err, _ = _integrate_task(task, cfg, absolute=True)
        if v == "diverging":
            verdict = "diverging"
        total += complex(value)
        error += err
        absolute += abs(abs_val)
        detail.append((task, value, err))
    return ComplexIntegralResult(total, error, absolute, verdict, detail)


# ---------------------------------------------------------------------------
# annulus slices


@dataclass
class AnnulusDecayReport:
    entries: list
    fit: DecayFit | None
    verdict: str
    monotone: bool

    def __str__(self):
        if self.fit is None:
            return f"annulus decay: {self.verdict}"
        return (
            f"annulus decay: {self.verdict} alpha={self.fit.exponent:.4f} "
            f"(monotone={self.monotone})"
        )


def annulus_slice_decay(region: Region, form: ComplexLogForm, m: int,
                        ts: Sequence[float] | None = None,
                        cfg: QuadConfig | None = None,
                        probe: ProbeConfig | None = None) -> AnnulusDecayReport:
    """vol(A cap {|z_1| = t >= |z_2|}; |form|) along a ladder of radii.

    Gate: either m-admissibility of the region (the |z_2| <= t bound is
    then added) or A cap (union H_i) inside D, in which case the slice is
    just {|z_1| = t}.
    """
    cfg = cfg or QuadConfig()
    nc = region.n // 2
    if nc < 2:
        raise ComplexIntError("annulus slices need at least two complex coordinates")
    if form.degree != m - 1:
        raise ComplexIntError("the slice form must have total degree m - 1")
    bound_z2 = True
    verdict = region.is_admissible(m, probe)
    if not verdict.ok:
        if region.meets_divisors_only_in_d(probe):
            bound_z2 = False
        else:
            raise ComplexIntError(f"gate failed: not admissible ({verdict}) and "
                                  "the divisor locus is not inside D")
    ts = list(ts) if ts is not None else [2.0**-k for k in range(2, 11)]

    pieces = [(alphas, orig) for alphas, _aug, orig in _sector_pieces(region)]
    entries = []
    for t in ts:
        vol = 0.0
        for alphas, piece in pieces:
            for re, im, R in form.terms:
                rest = [i for i in range(nc) if i not in R]
                for bits in iproduct((0, 1), repeat=len(rest)):
                    P = tuple(i for i, b in zip(rest, bits) if b == 0)
                    Q = tuple(i for i, b in zip(rest, bits) if b == 1)
                    if 0 not in Q:
                        continue  # dr_1 restricts to zero on the slice
                    part = Partition(P, Q, R)
                    poly_extra = []
                    nvp = 2 * nc
                    r1 = Polynomial.var(nvp, 0)
                    poly_extra.append((r1 - Fraction(t), True))
                    if bound_z2:
                        r2 = Polynomial.var(nvp, 1)
                        poly_extra.append((r2 - Fraction(t), False))
                    task_region = transform_piece(
                        piece, alphas, part,
                        extra_polar_constraints=poly_extra,
                        eliminate={0: t},
                    )
                    if not task_region.cells:
                        continue
                    index, n_task = _task_index(part, eliminate_done={("r", 0)})
                    pre, pim, prefactor, logpos = _partition_form(
                        part, alphas, n_task, index, nc
                    )
                    if not (re.is_constant() and im.is_constant()):
                        raise ComplexIntError(
                            "annulus decay supports constant coefficients"
                        )
                    c = (re.constant_value(), im.constant_value())
                    pre, pim = pre * c[0] - pim * c[1], pim * c[0] + pre * c[1]
                    task = RealTask(alphas, part, task_region, pre, pim,
                                    prefactor, logpos, None)
                    abs_val, _, _ = _integrate_task(task, cfg, absolute=True)
                    vol += abs(abs_val)
        entries.append((t, vol))
    if all(v <= cfg.abs_tol for _, v in entries):
        return AnnulusDecayReport(entries, None, "identically zero", True)
    fit = fit_decay_exponent(entries)
    ordered = sorted(entries)  # ascending t
    monotone = all(a[1] <= b[1] + cfg.abs_tol for a, b in zip(ordered, ordered[1:]))
    verdict_txt = "decays to zero" if fit.exponent > 0.05 else "no decay detected"
    return AnnulusDecayReport(entries, fit, verdict_txt, monotone)
