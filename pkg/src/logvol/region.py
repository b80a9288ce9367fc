"""Semi-algebraic regions with distinguished divisor coordinates.

A Region is a finite union of conjunctive constraint cells in R^n.  The
first p coordinates r_1..r_p carry the divisors H_i = {r_i = 0}; a face is
an intersection H_I.  For complex regions the ambient has paired (zr_i,
zi_i) coordinates, the divisor H_i is {zr_i = zi_i = 0} and D_i is
{zr_i = 1, zi_i = 0}.

Dimension is exact (rational LP, implicit-equality detection, affine-hull
rank) on piecewise-linear cells and a seeded sampling probe elsewhere;
every verdict that used the probe carries a "heuristic" flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import linprog
from .polyform import Polynomial, parse_poly


class RegionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constraints and cells


class Constraint:
    """payload <= 0 or payload = 0, payload an exact Polynomial."""

    __slots__ = ("payload", "equality")

    def __init__(self, payload: Polynomial, equality: bool = False):
        self.payload = payload
        self.equality = bool(equality)

    @property
    def kind(self) -> str:
        linear = self.payload.degree() <= 1
        if self.equality:
            return "linear_eq" if linear else "poly_eq"
        return "linear_le" if linear else "poly_le"

    def is_linear(self) -> bool:
        return self.payload.degree() <= 1

    def __eq__(self, other):
        if not isinstance(other, Constraint):
            return NotImplemented
        return self.equality == other.equality and self.payload == other.payload

    def __hash__(self):
        return hash((self.equality, self.payload))

    def __repr__(self):
        op = "=" if self.equality else "<="
        return f"Constraint({self.payload!r} {op} 0)"


@dataclass(frozen=True)
class ExtraVar:
    """Auxiliary cell variable beyond the ambient coordinates.

    derived_from holds the index of a coordinate t such that the variable
    equals sqrt(t^2 + 1); otherwise the variable is existentially
    quantified over [lo, hi] (the cell is the projection of the lifted
    constraint set to the ambient).
    """

    name: str
    lo: float
    hi: float
    derived_from: int | None = None


class Cell:
    __slots__ = ("constraints", "extra")

    def __init__(self, constraints: Sequence[Constraint], extra: Sequence[ExtraVar] = ()):
        self.constraints = list(constraints)
        self.extra = tuple(extra)

    def nvars_total(self, n: int) -> int:
        return n + len(self.extra)

    def is_linear(self) -> bool:
        return not self.extra and all(c.is_linear() for c in self.constraints)

    def __eq__(self, other):
        if not isinstance(other, Cell):
            return NotImplemented
        return self.constraints == other.constraints and self.extra == other.extra

    def __repr__(self):
        return f"Cell({self.constraints!r})"


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class DimResult:
    value: int
    heuristic: bool = False

    def __int__(self):
        return self.value


@dataclass
class AllowVerdict:
    ok: bool
    violations: list = field(default_factory=list)  # (face tuple 0-based, dim, need)
    heuristic: bool = False

    def __bool__(self):
        return self.ok

    def __str__(self):
        tag = " [heuristic]" if self.heuristic else ""
        if self.ok:
            return "ALLOWABLE" + tag
        face, dim, need = self.violations[0]
        ids = ",".join(str(i + 1) for i in face)
        return f"VIOLATED face={{{ids}}} dim={dim} need<{need}" + tag


@dataclass
class StrictVerdict:
    status: str  # "strict" | "not_strict" | "unknown"
    face: tuple | None = None          # the face tested
    contained_face: tuple | None = None  # face found inside the Zariski closure

    def __bool__(self):
        return self.status == "strict"

    def __str__(self):
        if self.status == "strict":
            return "STRICT"
        if self.status == "unknown":
            return "UNKNOWN (nonlinear cell)"
        ids = ",".join(str(i + 1) for i in self.contained_face)
        return f"NOT-STRICT contains face={{{ids}}}"


@dataclass
class FiberReport:
    verdict: str  # "finite" | "infinite" | "cap exceeded"
    max_count: int
    samples: int

    def __str__(self):
        if self.verdict == "finite":
            return f"max fiber count {self.max_count} over {self.samples} samples"
        if self.verdict == "infinite":
            return "infinite fiber witnessed"
        return f"cap exceeded (> {self.max_count})"


@dataclass(frozen=True)
class ProbeConfig:
    """Settings for the sampled dimension probe.

    The relative singular value cutoff must sit above the curvature scale
    radius/diameter of the manifolds being probed; with the default
    radius of diameter/64 a cutoff of 0.2 separates tangent directions
    from curvature for the unit-scale corpus.
    """

    samples: int = 4096
    theta: float = 0.2
    radius_divisor: float = 64.0
    seed: int = 0
    centers: int = 8
    local_cloud: int = 64
    newton_iters: int = 30
    eq_tol: float = 1e-8
    ineq_tol: float = 1e-7
    exist_grid: int = 65


# ---------------------------------------------------------------------------
# region


class Region:
    def __init__(
        self,
        n: int,
        p: int,
        cells: Sequence[Cell],
        kind: str = "real",
        box: Sequence | None = None,
        name: str = "",
    ):
        if kind not in ("real", "complex"):
            raise RegionError(f"unknown region kind {kind!r}")
        if kind == "real" and not 0 <= p <= n:
            raise RegionError("need 0 <= p <= n")
        if kind == "complex":
            if n % 2:
                raise RegionError("complex regions need an even ambient dimension")
            if not 0 <= p <= n // 2:
                raise RegionError("complex divisor count exceeds coordinate pairs")
        self.n = int(n)
        self.p = int(p)
        self.kind = kind
        self.cells = list(cells)
        self.box = None if box is None else [
            (Fraction(lo) if not isinstance(lo, float) else lo,
             Fraction(hi) if not isinstance(hi, float) else hi)
            for lo, hi in box
        ]
        self.name = name
        for cell in self.cells:
            for c in cell.constraints:
                if c.payload.nvars != cell.nvars_total(self.n):
                    raise RegionError("constraint ambient does not match the cell")

    # -- naming ----------------------------------------------------------

    def var_names(self) -> list:
        if self.kind == "complex":
            names = []
            for i in range(self.n // 2):
                names += [f"zr{i + 1}", f"zi{i + 1}"]
            return names
        return [f"r{i + 1}" for i in range(self.p)] + [
            f"x{i + 1}" for i in range(self.p, self.n)
        ]

    def divisor_var_indices(self, i: int) -> list:
        """Ambient coordinate indices pinned to zero on H_{i} (0-based i)."""
        if self.kind == "complex":
            return [2 * i, 2 * i + 1]
        return [i]

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        return (
            (self.n, self.p, self.kind) == (other.n, other.p, other.kind)
            and self.cells == other.cells
            and self._box_key() == other._box_key()
        )

    def _box_key(self):
        if self.box is None:
            return None
        return [(Fraction(lo) if not isinstance(lo, float) else lo,
                 Fraction(hi) if not isinstance(hi, float) else hi)
                for lo, hi in self.box]

    def __repr__(self):
        return f"Region(n={self.n}, p={self.p}, kind={self.kind}, cells={len(self.cells)})"

    # -- structural operations --------------------------------------------

    def with_cells(self, cells: Sequence[Cell]) -> "Region":
        return Region(self.n, self.p, cells, self.kind, self.box, self.name)

    def face_intersection(self, face: Iterable[int]) -> "Region":
        """Add the equalities of H_I to every cell (0-based indices)."""
        face = tuple(sorted(set(int(i) for i in face)))
        if any(not 0 <= i < self.p for i in face):
            raise RegionError(f"face index out of range: {face}")
        cells = []
        for cell in self.cells:
            nv = cell.nvars_total(self.n)
            new = list(cell.constraints)
            for i in face:
                for v in self.divisor_var_indices(i):
                    new.append(Constraint(Polynomial.var(nv, v), equality=True))
            cells.append(Cell(new, cell.extra))
        return Region(self.n, self.p, cells, self.kind, self.box, self.name)

    def add_cell_constraints(self, constraints: Sequence[Constraint]) -> "Region":
        cells = []
        for cell in self.cells:
            if cell.extra:
                raise RegionError("cannot extend cells carrying auxiliary variables")
            cells.append(Cell(list(cell.constraints) + list(constraints), cell.extra))
        return self.with_cells(cells)

    def substitute_coordinate(self, index: int, value) -> "Region":
        """Fix coordinate `index` to an exact value and drop it."""
        value = Fraction(value)
        cells = []
        for cell in self.cells:
            nv = cell.nvars_total(self.n)
            consts = []
            empty = False
            for c in cell.constraints:
                payload = c.payload.partial_eval({index: value}).drop_vars([index])
                if payload.is_constant():
                    v = payload.constant_value()
                    if (c.equality and v != 0) or (not c.equality and v > 0):
                        empty = True
                        break
                    continue
                consts.append(Constraint(payload, c.equality))
            if empty:
                continue
            extra = tuple(
                replace(e, derived_from=_shift_index(e.derived_from, index))
                for e in cell.extra
            )
            cells.append(Cell(consts, extra))
        new_p = self.p - 1 if index < self.p and self.kind == "real" else self.p
        box = None
        if self.box is not None:
            box = [b for i, b in enumerate(self.box) if i != index]
        return Region(self.n - 1, new_p, cells, self.kind, box, self.name)

    # -- boxes --------------------------------------------------------------

    def bounding_box(self) -> list:
        """The declared box, or an exact LP-derived one for linear regions."""
        if self.box is not None:
            return [(float(lo), float(hi)) for lo, hi in self.box]
        box = []
        for v in range(self.n):
            lo_best = None
            hi_best = None
            obj = [Fraction(0)] * self.n
            obj[v] = Fraction(1)
            any_cell = False
            for cell in self.cells:
                if not cell.is_linear():
                    raise RegionError(
                        "bounding box required: nonlinear cell without a declared box"
                    )
                sys = _linear_system(self, cell, with_box=False)
                if sys is None:
                    continue
                a_ub, b_ub, a_eq, b_eq = sys
                hi = linprog.solve_lp(obj, a_ub, b_ub, a_eq, b_eq, maximize=True)
                lo = linprog.solve_lp(obj, a_ub, b_ub, a_eq, b_eq, maximize=False)
                if hi.status == linprog.INFEASIBLE:
                    continue
                any_cell = True
                if hi.status != linprog.OPTIMAL or lo.status != linprog.OPTIMAL:
                    raise RegionError("region is unbounded; declare a bounding box")
                hi_best = hi.value if hi_best is None else max(hi_best, hi.value)
                lo_best = lo.value if lo_best is None else min(lo_best, lo.value)
            if not any_cell:
                box.append((0.0, 0.0))
            else:
                box.append((float(lo_best), float(hi_best)))
        return box

    def cell_boxes(self, cell: Cell) -> list:
        """Box rows of the full (ambient + extra) variable list, as floats."""
        base = self.bounding_box()
        return base + [(float(e.lo), float(e.hi)) for e in cell.extra]

    # -- membership ----------------------------------------------------------

    def members(self, pts: np.ndarray, cfg: ProbeConfig | None = None) -> np.ndarray:
        """Boolean membership for an (N, n) array of ambient points."""
        cfg = cfg or ProbeConfig()
        inside = np.zeros(pts.shape[0], dtype=bool)
        for cell in self.cells:
            inside |= _cell_members(self, cell, pts, cfg)
        return inside

    # -- dimension -------------------------------------------------------------

    def dimension(self, cfg: ProbeConfig | None = None) -> DimResult:
        cfg = cfg or ProbeConfig()
        best = -1
        heuristic = False
        for cell in self.cells:
            d, h = _cell_dimension(self, cell, cfg)
            heuristic = heuristic or h
            best = max(best, d)
        return DimResult(best, heuristic)

    # -- checkers ---------------------------------------------------------------

    def faces(self, nonempty_only: bool = True):
        idx = range(self.p)
        sizes = range(1 if nonempty_only else 0, self.p + 1)
        for k in sizes:
            for comb in combinations(idx, k):
                yield comb

    def is_allowable(self, faces: Iterable[tuple] | None = None,
                     cfg: ProbeConfig | None = None) -> AllowVerdict:
        """dim(A cap H_I) < dim H_I for the listed faces (default: all)."""
        if self.kind == "complex":
            raise RegionError("allowability is defined for real regions")
        cfg = cfg or ProbeConfig()
        face_list = list(faces) if faces is not None else list(self.faces())
        violations = []
        heuristic = False
        for face in face_list:
            face = tuple(sorted(face))
            sub = self.face_intersection(face)
            d = sub.dimension(cfg)
            heuristic = heuristic or d.heuristic
            need = self.n - len(face)
            if d.value >= need:
                violations.append((face, d.value, need))
        return AllowVerdict(not violations, violations, heuristic)

    def is_strictly_allowable(self, face: Iterable[int],
                              cfg: ProbeConfig | None = None) -> StrictVerdict:
        """Whether the Zariski closure of A cap H_F contains no face.

        Exact for piecewise-linear intersections (the closure of a convex
        polyhedral cell is its affine hull); nonlinear cells that cannot be
        proved empty give the verdict "unknown".
        """
        if self.kind == "complex":
            raise RegionError("strict allowability is defined for real regions")
        cfg = cfg or ProbeConfig()
        face = tuple(sorted(set(face)))
        sub = self.face_intersection(face)
        hulls = []
        for cell in sub.cells:
            simp = simplify_cell(sub, cell)
            if simp is None:
                continue
            if not simp.is_linear():
                return StrictVerdict("unknown", face)
            sys = _linear_system(sub, simp, with_box=True)
            rows = _affine_hull_rows(self.n, sys)
            if rows is None:
                continue  # infeasible cell
            hulls.append(rows)
        candidates = [
            J
            for k in range(0, self.p + 1)
            for J in combinations(range(self.p), k)
            if set(J) >= set(face)
        ]
        for rows in hulls:
            for J in candidates:
                if _hull_contains_face(rows, J, self.n):
                    return StrictVerdict("not_strict", face, tuple(J))
        return StrictVerdict("strict", face)

    def is_almost_strictly_allowable(self, cfg: ProbeConfig | None = None) -> StrictVerdict:
        """Strict allowability w.r.t. every proper face; it suffices to test
        the codimension-one faces (restriction passes to smaller faces)."""
        for i in range(self.p):
            v = self.is_strictly_allowable((i,), cfg)
            if v.status != "strict":
                return v
        return StrictVerdict("strict", None)

    def is_admissible(self, m: int, cfg: ProbeConfig | None = None) -> AllowVerdict:
        """dim(A cap H_I minus D) <= m - 2|I| for every nonempty face.

        The removal of D = union {z_t = 1} is dimension-theoretic: a cell
        whose intersection with some D_t has the cell's full dimension is
        treated as lying inside D_t (exact for convex cells).
        """
        if self.kind != "complex":
            raise RegionError("admissibility is defined for complex regions")
        nc = self.n // 2
        if not nc <= m <= 2 * nc:
            raise RegionError(f"need {nc} <= m <= {2 * nc}")
        cfg = cfg or ProbeConfig()
        violations = []
        heuristic = False
        # nonempty faces first, then the empty face (whose condition is the
        # global bound dim(A minus D) <= m)
        face_list = list(self.faces()) + [()]
        for face in face_list:
            sub = self.face_intersection(face)
            cell_dims = []
            for cell in sub.cells:
                d, h = _cell_dimension(sub, cell, cfg)
                heuristic = heuristic or h
                cell_dims.append((cell, d))
            d_excl = -1
            for cell, d in cell_dims:
                if d < 0:
                    continue
                in_divisor_locus = False
                for t in range(nc):
                    nv = cell.nvars_total(self.n)
                    dt = [
                        Constraint(Polynomial.var(nv, 2 * t) - 1, equality=True),
                        Constraint(Polynomial.var(nv, 2 * t + 1), equality=True),
                    ]
                    dcell = Cell(list(cell.constraints) + dt, cell.extra)
                    d_dt, h2 = _cell_dimension(sub, dcell, cfg)
                    heuristic = heuristic or h2
                    if d_dt == d:
                        in_divisor_locus = True
                        break
                if not in_divisor_locus:
                    d_excl = max(d_excl, d)
            need = m - 2 * len(face)
            if d_excl >= 0 and d_excl > need:
                violations.append((face, d_excl, need + 1))
        return AllowVerdict(not violations, violations, heuristic)

    def meets_divisors_only_in_d(self, cfg: ProbeConfig | None = None) -> bool:
        """Whether A cap (union H_i) is contained in D (dimension-detected)."""
        if self.kind != "complex":
            raise RegionError("only meaningful for complex regions")
        cfg = cfg or ProbeConfig()
        nc = self.n // 2
        for i in range(self.p):
            sub = self.face_intersection((i,))
            for cell in sub.cells:
                d, _ = _cell_dimension(sub, cell, cfg)
                if d < 0:
                    continue
                contained = False
                for t in range(nc):
                    nv = cell.nvars_total(self.n)
                    dt = [
                        Constraint(Polynomial.var(nv, 2 * t) - 1, equality=True),
                        Constraint(Polynomial.var(nv, 2 * t + 1), equality=True),
                    ]
                    dcell = Cell(list(cell.constraints) + dt, cell.extra)
                    d_dt, _ = _cell_dimension(sub, dcell, cfg)
                    if d_dt == d:
                        contained = True
                        break
                if not contained:
                    return False
        return True

    # -- fiber probe ---------------------------------------------------------

    def fiber_finiteness_probe(
        self,
        axis: int,
        samples: int = 64,
        cap: int = 64,
        seed: int = 0,
        length_tol: float = 1e-9,
    ) -> FiberReport:
        """Sample base points and count connected components of the fibers
        along `axis`; an interval of positive length witnesses an infinite
        fiber."""
        from .slicing import slice_fiber

        box = self.bounding_box()
        rng = np.random.Generator(np.random.Philox(key=seed))
        base_vars = [v for v in range(self.n) if v != axis]
        scale = max(hi - lo for lo, hi in box) + 1e-30
        max_count = 0
        for _ in range(samples):
            base = {}
            for v in base_vars:
                lo, hi = box[v]
                base[v] = float(rng.uniform(lo, hi))
            fs = slice_fiber(self, base, axis, mode="float")
            for lo, hi in fs.intervals:
                if hi - lo > length_tol * scale:
                    return FiberReport("infinite", 0, samples)
            count = len(fs.intervals)
            if count > cap:
                return FiberReport("cap exceeded", count, samples)
            max_count = max(max_count, count)
        return FiberReport("finite", max_count, samples)

    # -- documents ------------------------------------------------------------

    def to_document(self) -> dict:
        names = self.var_names()
        doc = {
            "ambient_dim": self.n,
            "divisor_count": self.p,
            "complex": self.kind == "complex",
        }
        if self.name:
            doc["name"] = self.name
        if self.box is not None:
            doc["box"] = [[_num_out(lo), _num_out(hi)] for lo, hi in self.box]
        cells_doc = []
        for cell in self.cells:
            if cell.extra:
                raise RegionError("cells with auxiliary variables do not serialize")
            rows = []
            for c in cell.constraints:
                op = "=" if c.equality else "<="
                rows.append(f"{c.payload.to_text(names)} {op} 0")
            cells_doc.append({"constraints": rows})
        doc["cells"] = cells_doc
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2)


def _shift_index(idx, removed):
    if idx is None:
        return None
    return idx - 1 if idx > removed else idx


def _num_out(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return v


# ---------------------------------------------------------------------------
# parsing


_OPS = ["<=", ">=", "==", "="]


def parse_constraint(text: str, names: Sequence[str]) -> Constraint:
    op = None
    for cand in _OPS:
        if cand in text:
            op = cand
            break
    if op is None:
        raise RegionError(f"constraint {text!r} has no comparison operator")
    left, right = text.split(op, 1)
    lhs = parse_poly(left.strip(), names)
    rhs = parse_poly(right.strip(), names)
    if op == ">=":
        return Constraint(rhs - lhs, equality=False)
    return Constraint(lhs - rhs, equality=(op in ("=", "==")))


def parse_region(document) -> Region:
    """Region file: UTF-8 JSON with ambient_dim, divisor_count, complex,
    box and cells; see the README for the grammar."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise RegionError(f"malformed region document: {exc}") from exc
    else:
        doc = document
    try:
        n = int(doc["ambient_dim"])
        p = int(doc["divisor_count"])
    except KeyError as exc:
        raise RegionError(f"region document missing field {exc}") from exc
    kind = "complex" if doc.get("complex") else "real"
    if kind == "real" and p > n:
        raise RegionError("divisor_count exceeds ambient_dim")
    box = None
    if "box" in doc and doc["box"] is not None:
        box = []
        for lo, hi in doc["box"]:
            box.append((_num_in(lo), _num_in(hi)))
        if len(box) != n:
            raise RegionError("box length must equal ambient_dim")
    shell = Region(n, p, [], kind, box, doc.get("name", ""))
    names = shell.var_names()
    cells = []
    for cell_doc in doc.get("cells", []):
        constraints = [parse_constraint(s, names) for s in cell_doc["constraints"]]
        cells.append(Cell(constraints))
    return Region(n, p, cells, kind, box, doc.get("name", ""))


def _num_in(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        return v
    return Fraction(v)


# ---------------------------------------------------------------------------
# exact machinery


def _affine_parts(cell_n: int, c: Constraint):
    aff = c.payload.as_affine()
    if aff is None:
        return None
    coeffs, offset = aff
    return coeffs, -offset  # coeffs . x <= rhs  (or = rhs)


def _linear_system(region: Region, cell: Cell, with_box: bool = True):
    """(a_ub, b_ub, a_eq, b_eq) over the full cell variable list."""
    nv = cell.nvars_total(region.n)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for c in cell.constraints:
        parts = _affine_parts(nv, c)
        if parts is None:
            continue
        coeffs, rhs = parts
        if c.equality:
            a_eq.append(coeffs)
            b_eq.append(rhs)
        else:
            a_ub.append(coeffs)
            b_ub.append(rhs)
    if with_box and region.box is not None:
        boxes = list(region.box) + [(e.lo, e.hi) for e in cell.extra]
        for v, (lo, hi) in enumerate(boxes):
            row_hi = [Fraction(0)] * nv
            row_hi[v] = Fraction(1)
            a_ub.append(row_hi)
            b_ub.append(Fraction(hi))
            row_lo = [Fraction(0)] * nv
            row_lo[v] = Fraction(-1)
            a_ub.append(row_lo)
            b_ub.append(-Fraction(lo))
    return a_ub, b_ub, a_eq, b_eq


def _affine_hull_rows(n: int, system):
    """Equality rows (homogeneous part, rhs) cutting out the affine hull of a
    feasible linear cell, restricted to the first n (ambient) columns.
    Returns None when the cell is infeasible."""
    a_ub, b_ub, a_eq, b_eq = system
    nv = len(a_ub[0]) if a_ub else (len(a_eq[0]) if a_eq else n)
    if linprog.feasible_point(a_ub, b_ub, a_eq, b_eq, nv) is None:
        return None
    rows = [(list(a), Fraction(b)) for a, b in zip(a_eq, b_eq)]
    for a, b in zip(a_ub, b_ub):
        if all(v == 0 for v in a):
            continue
        res = linprog.solve_lp([-v for v in a], a_ub, b_ub, a_eq, b_eq)
        if res.status == linprog.OPTIMAL and Fraction(b) + res.value == 0:
            rows.append((list(a), Fraction(b)))
    return [(row[:n], b) for row, b in rows]


def _hull_contains_face(rows, J, n) -> bool:
    """H_J = {x_j = 0, j in J} lies in every hyperplane {a.x = b} of rows."""
    J = set(J)
    for a, b in rows:
        if b != 0:
            return False
        for i, coef in enumerate(a):
            if coef != 0 and i not in J:
                return False
    return True


def _exact_cell_dimension(region: Region, cell: Cell):
    system = _linear_system(region, cell, with_box=True)
    rows = _affine_hull_rows(cell.nvars_total(region.n), system)
    if rows is None:
        return -1
    hom = [a for a, _ in rows if any(v != 0 for v in a)]
    if not hom:
        return region.n
    return region.n - linprog.rank_of_rows(hom)


# ---------------------------------------------------------------------------
# constraint simplification


def _positive_on_cell(region: Region, cell: Cell, var: int) -> bool:
    """Certify var > 0 on the cell via the linear subsystem plus a one-step
    interval bound from constraints of the form c - k * monomial <= 0."""
    nv = cell.nvars_total(region.n)
    sys = _linear_system(region, cell, with_box=True)
    a_ub, b_ub, a_eq, b_eq = sys
    obj = [Fraction(0)] * nv
    obj[var] = Fraction(1)
    res = linprog.solve_lp(obj, a_ub, b_ub, a_eq, b_eq, maximize=False)
    if res.status == linprog.OPTIMAL and res.value > 0:
        return True
    if res.status == linprog.INFEASIBLE:
        return False
    # interval pass: c <= k * prod x^e with positive constant c forces each
    # participating nonnegative variable away from zero once the others are
    # bounded above.
    boxes = None
    if region.box is not None:
        boxes = list(region.box) + [(e.lo, e.hi) for e in cell.extra]
    if boxes is None:
        return False
    lo = [Fraction(b[0]) for b in boxes]
    hi = [Fraction(b[1]) for b in boxes]
    if lo[var] > 0:
        return True
    if lo[var] < 0:
        return False
    for c in cell.constraints:
        if c.equality or len(c.payload.terms) != 2:
            continue
        terms = sorted(c.payload.terms.items(), key=lambda t: sum(t[0]))
        (e0, c0), (e1, c1) = terms
        if any(e != 0 for e in e0):
            continue
        # c0 - |c1| * x^e1 <= 0 with c0 > 0
        if c0 <= 0 or c1 >= 0:
            continue
        if e1[var] == 0:
            continue
        bound = c0 / (-c1)
        ok = True
        for i, e in enumerate(e1):
            if i == var or e == 0:
                continue
            if lo[i] < 0 or hi[i] <= 0:
                ok = False
                break
            bound /= hi[i] ** e
        if ok and bound > 0:
            return True
    return False


def simplify_cell(region: Region, cell: Cell, max_rounds: int | None = None) -> Cell | None:
    """Equivalent cell with linear equalities propagated, constants
    resolved and certified-positive monomial factors divided out.
    Returns None when the cell is provably empty."""
    constraints = list(cell.constraints)
    nv = cell.nvars_total(region.n)
    if max_rounds is None:
        max_rounds = max(8, 2 * len(constraints))
    solved: set[int] = set()
    for _ in range(max_rounds):
        changed = False

        # resolve constant payloads
        kept = []
        for c in constraints:
            if c.payload.is_constant():
                v = c.payload.constant_value()
                if (c.equality and v != 0) or (not c.equality and v > 0):
                    return None
                changed = True
                continue
            kept.append(c)
        constraints = kept

        # propagate one linear equality per round
        for idx, c in enumerate(constraints):
            if not c.equality:
                continue
            aff = c.payload.as_affine()
            if aff is None:
                continue
            coeffs, offset = aff
            pivot = next(
                (v for v in range(nv) if coeffs[v] != 0 and v not in solved), None
            )
            if pivot is None:
                continue
            # pivot = -(offset + sum_{v != pivot} coeffs[v] x_v) / coeffs[pivot]
            expr_terms = {(0,) * nv: -offset / coeffs[pivot]}
            for v in range(nv):
                if v != pivot and coeffs[v] != 0:
                    e = [0] * nv
                    e[v] = 1
                    expr_terms[tuple(e)] = -coeffs[v] / coeffs[pivot]
            expr = Polynomial(nv, expr_terms)
            comps = [
                expr if v == pivot else Polynomial.var(nv, v) for v in range(nv)
            ]
            new_constraints = []
            for j, other in enumerate(constraints):
                if j == idx:
                    new_constraints.append(other)
                elif other.payload.uses_var(pivot):
                    new_constraints.append(
                        Constraint(other.payload.compose(comps), other.equality)
                    )
                    changed = True
                else:
                    new_constraints.append(other)
            constraints = new_constraints
            solved.add(pivot)
            if changed:
                break

        # divide out certified-positive monomial factors
        probe_cell = Cell(constraints, cell.extra)
        new_constraints = []
        for c in constraints:
            if c.payload.is_zero():
                changed = True
                continue
            content = c.payload.content_monomial()
            divisor = [0] * nv
            for v, e in enumerate(content):
                if e > 0 and _positive_on_cell(region, probe_cell, v):
                    divisor[v] = e
            if any(divisor):
                new_constraints.append(
                    Constraint(c.payload.divide_monomial(divisor), c.equality)
                )
                changed = True
            else:
                new_constraints.append(c)
        constraints = new_constraints

        if not changed:
            break

    # exact infeasibility of the linear subsystem settles emptiness
    probe_cell = Cell(constraints, cell.extra)
    sys = _linear_system(region, probe_cell, with_box=True)
    a_ub, b_ub, a_eq, b_eq = sys
    if a_ub or a_eq:
        if linprog.feasible_point(a_ub, b_ub, a_eq, b_eq, nv) is None:
            return None
    return probe_cell


# ---------------------------------------------------------------------------
# sampled dimension probe


def _cell_members(region: Region, cell: Cell, pts: np.ndarray, cfg: ProbeConfig) -> np.ndarray:
    """Membership of ambient points; existential extras are grid-searched,
    derived extras computed."""
    n = region.n
    extras = cell.extra
    exist = [n + i for i, e in enumerate(extras) if e.derived_from is None]
    total = cell.nvars_total(n)
    full = np.zeros((pts.shape[0], total))
    full[:, :n] = pts
    for i, e in enumerate(extras):
        if e.derived_from is not None:
            full[:, n + i] = np.sqrt(full[:, e.derived_from] ** 2 + 1.0)
    if not exist:
        return _eval_constraints(cell, full, cfg)
    grids = [np.linspace(extras[v - n].lo, extras[v - n].hi, cfg.exist_grid) for v in exist]
    ok = np.zeros(pts.shape[0], dtype=bool)
    mesh = np.meshgrid(*grids, indexing="ij")
    combos = np.stack([m.ravel() for m in mesh], axis=1)
    for combo in combos:
        trial = full.copy()
        for v, val in zip(exist, combo):
            trial[:, v] = val
        for i, e in enumerate(extras):
            if e.derived_from is not None:
                trial[:, n + i] = np.sqrt(trial[:, e.derived_from] ** 2 + 1.0)
        ok |= _eval_constraints(cell, trial, cfg, eq_tol_scale=50.0)
        if ok.all():
            break
    return ok


def _eval_constraints(cell: Cell, full: np.ndarray, cfg: ProbeConfig,
                      eq_tol_scale: float = 1.0) -> np.ndarray:
    ok = np.ones(full.shape[0], dtype=bool)
    for c in cell.constraints:
        vals = c.payload.eval_many(full)
        if c.equality:
            ok &= np.abs(vals) <= cfg.eq_tol * eq_tol_scale
        else:
            ok &= vals <= cfg.ineq_tol
    return ok


def _newton_project(cell: Cell, region: Region, pts: np.ndarray, cfg: ProbeConfig) -> np.ndarray:
    """Project points onto the zero set of the cell's equality constraints.

    Gauss-Newton with the minimum-norm step, batched over all points.
    Derived auxiliaries s = sqrt(t^2 + 1) are not free unknowns: their
    columns are folded into the source variable by the chain rule and the
    values recomputed after every step.
    """
    n = region.n
    eqs = [c.payload for c in cell.constraints if c.equality]
    if not eqs:
        return pts
    total = pts.shape[1]
    derived = {
        n + i: e.derived_from
        for i, e in enumerate(cell.extra)
        if e.derived_from is not None
    }
    free = [v for v in range(total) if v not in derived]
    partials = [[g.partial(v) for v in range(total)] for g in eqs]
    out = pts.copy()
    k = len(eqs)
    eye = np.eye(k)
    for _ in range(cfg.newton_iters):
        gvals = np.stack([g.eval_many(out) for g in eqs], axis=1)  # (N, k)
        if np.max(np.abs(gvals)) < cfg.eq_tol * 0.1:
            break
        full_jac = np.stack(
            [
                np.stack([pg.eval_many(out) for pg in row], axis=1)
                for row in partials
            ],
            axis=1,
        )  # (N, k, total)
        jac = full_jac[:, :, free].copy()
        for d_idx, src in derived.items():
            # d = sqrt(x_src^2 + 1): dd/dx_src = x_src / d
            factor = out[:, src] / out[:, d_idx]
            col = free.index(src) if src in free else None
            if col is not None:
                jac[:, :, col] += full_jac[:, :, d_idx] * factor[:, None]
        gram = jac @ np.transpose(jac, (0, 2, 1)) + 1e-12 * eye
        y = np.linalg.solve(gram, gvals[:, :, None])
        step = (np.transpose(jac, (0, 2, 1)) @ y)[:, :, 0]  # (N, len(free))
        for col, v in enumerate(free):
            out[:, v] -= step[:, col]
        for d_idx, src in derived.items():
            out[:, d_idx] = np.sqrt(out[:, src] ** 2 + 1.0)
    return out


def _cell_dimension(region: Region, cell: Cell, cfg: ProbeConfig):
    """(dimension, used_heuristic) of one cell."""
    simp = simplify_cell(region, cell)
    if simp is None:
        return -1, False
    if simp.is_linear():
        return _exact_cell_dimension(region, simp), False
    return _probe_cell_dimension(region, simp, cfg), True


def _probe_cell_dimension(region: Region, cell: Cell, cfg: ProbeConfig) -> int:
    n = region.n
    boxes = region.cell_boxes(cell)
    total = cell.nvars_total(n)
    lo = np.array([b[0] for b in boxes])
    hi = np.array([b[1] for b in boxes])
    diam = float(np.linalg.norm(hi - lo)) or 1.0
    radius = diam / cfg.radius_divisor
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))

    exist = [n + i for i, e in enumerate(cell.extra) if e.derived_from is None]
    pts = rng.uniform(lo, hi, size=(cfg.samples, total))
    for i, e in enumerate(cell.extra):
        if e.derived_from is not None:
            pts[:, n + i] = np.sqrt(pts[:, e.derived_from] ** 2 + 1.0)
    pts = _newton_project(cell, region, pts, cfg)
    good = _eval_constraints(cell, pts, cfg, eq_tol_scale=10.0)
    inside_box = np.all((pts >= lo - radius) & (pts <= hi + radius), axis=1)
    accepted = pts[good & inside_box]
    if accepted.shape[0] == 0:
        return -1

    best = 0
    centers = accepted[: cfg.centers]
    for center in centers:
        ball = rng.uniform(-radius, radius, size=(cfg.local_cloud, total))
        cloud = center[None, :] + ball
        np.clip(cloud, lo, hi, out=cloud)
        for i, e in enumerate(cell.extra):
            if e.derived_from is not None:
                cloud[:, n + i] = np.sqrt(cloud[:, e.derived_from] ** 2 + 1.0)
        cloud = _newton_project(cell, region, cloud, cfg)
        keep = _eval_constraints(cell, cloud, cfg, eq_tol_scale=10.0)
        keep &= np.linalg.norm(cloud - center[None, :], axis=1) <= 2.5 * radius
        local = cloud[keep]
        if local.shape[0] < max(4, n + 1):
            continue
        disp = (local - local.mean(axis=0)) / radius
        disp = disp[:, :n]  # dimension of the projection to the ambient block
        sv = np.linalg.svd(disp, compute_uv=False)
        if sv.size == 0 or sv[0] == 0:
            continue
        dim = int(np.sum(sv >= cfg.theta * sv[0]))
        best = max(best, dim)
    return best


# ---------------------------------------------------------------------------
# linear variable elimination (projection of polyhedral cells)


def eliminate_var_linear(constraints: Sequence[Constraint], var: int, nv: int):
    """Fourier-Motzkin style exact elimination of one variable.

    Requires the variable to enter every constraint affinely with a constant
    coefficient.  Returns the new constraint list (still over nv variables,
    with `var` unused) or None when elimination is not possible.
    """
    with_var = []
    without = []
    for c in constraints:
        if not c.payload.uses_var(var):
            without.append(c)
            continue
        if c.payload.degree_in(var) > 1:
            return None
        coef_poly = c.payload.partial(var)
        if not coef_poly.is_constant():
            return None
        coef = coef_poly.constant_value()
        rest = c.payload.partial_eval({var: 0})
        with_var.append((coef, rest, c.equality))
    # a linear equality solves the variable outright
    for pos, (coef, rest, eq) in enumerate(with_var):
        if eq:
            expr = rest * (Fraction(-1) / coef)
            out = list(without)
            for pos2, (coef2, rest2, eq2) in enumerate(with_var):
                if pos2 == pos:
                    continue
                out.append(Constraint(rest2 + coef2 * expr, eq2))
            return out
    lowers = []  # var >= expr
    uppers = []  # var <= expr
    for coef, rest, _ in with_var:
        expr = rest * (Fraction(-1) / coef)
        if coef > 0:
            uppers.append(expr)
        else:
            lowers.append(expr)
    out = list(without)
    for lo_e in lowers:
        for up_e in uppers:
            out.append(Constraint(lo_e - up_e, equality=False))
    return out
