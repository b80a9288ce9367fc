"""Boundary-versus-differential checks on simplices with polynomial maps.

The standard simplex in R^m carries the orientation of R^m; its boundary
is the alternating sum of the vertex-opposite faces in the simplicial
convention (for m = 1 the signed points -{0} + {1}, calibrated for m = 2
by the test case with integrand x1 dx2 where both sides equal 1/2).
Maps are polynomial, so face restrictions and pullbacks are exact
polynomial operations and smoothness on the interior is automatic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .polyform import LogForm, Polynomial
from .region import Cell, Constraint, Region


class StokesError(ValueError):
    pass


@dataclass
class SimplexMap:
    """Polynomial map Delta^m -> R^l, one component per target coordinate."""

    m: int
    components: list

    def __post_init__(self):
        for h in self.components:
            if h.nvars != self.m:
                raise StokesError("component arity must match the simplex dimension")

    @property
    def target_dim(self) -> int:
        return len(self.components)

    @staticmethod
    def identity(m: int) -> "SimplexMap":
        return SimplexMap(m, [Polynomial.var(m, i) for i in range(m)])


def simplex_region(m: int) -> Region:
    """Delta^m = {x_i >= 0, sum x_i <= 1} with p = 0."""
    consts = []
    for i in range(m):
        consts.append(Constraint(-Polynomial.var(m, i), equality=False))
    total = Polynomial.zero(m)
    for i in range(m):
        total = total + Polynomial.var(m, i)
    consts.append(Constraint(total - 1, equality=False))
    box = [(Fraction(0), Fraction(1))] * m
    return Region(m, 0, [Cell(consts)], "real", box, f"simplex{m}")


def t_excision(x: Sequence, t, m: int | None = None) -> list:
    """The retraction r_i = (1 - (m+1) t) x_i + t into the shrunken simplex."""
    m = m if m is not None else len(x)
    t = Fraction(t) if not isinstance(t, float) else t
    if not (0 <= t < 1.0 / (m + 1)):
        raise StokesError(f"need 0 <= t < 1/{m + 1}")
    scale = 1 - (m + 1) * t
    return [scale * xi + t for xi in x]


def t_excision_region(m: int, t) -> Region:
    """{x_i >= t, sum x_i <= 1 - t} as a region."""
    t = Fraction(t)
    consts = []
    for i in range(m):
        consts.append(Constraint(Polynomial.const(m, t) - Polynomial.var(m, i),
                                 equality=False))
    total = Polynomial.zero(m)
    for i in range(m):
        total = total + Polynomial.var(m, i)
    consts.append(Constraint(total - (1 - t), equality=False))
    box = [(Fraction(0), Fraction(1))] * m
    return Region(m, 0, [Cell(consts)], "real", box, f"excised{m}")


@dataclass
class BoundaryFace:
    sign: int
    components: list  # affine Polynomials over Delta^(m-1) coordinates


@dataclass
class BoundaryChain:
    m: int
    faces: list


def boundary_chain(m: int) -> BoundaryChain:
    """Faces of Delta^m opposite each vertex, sign (-1)^k for vertex k.

    Vertices are v_0 = 0 and the unit points e_1..e_m; face k embeds
    Delta^(m-1) affinely onto the span of the remaining vertices.
    """
    if m < 1:
        raise StokesError("the boundary chain needs m >= 1")
    verts = [[Fraction(0)] * m]
    for i in range(m):
        e = [Fraction(0)] * m
        e[i] = Fraction(1)
        verts.append(e)
    faces = []
    k_params = m - 1
    for k in range(m + 1):
        used = [verts[i] for i in range(m + 1) if i != k]
        base = used[0]
        comps = []
        for coord in range(m):
            terms = {(0,) * k_params: base[coord]} if k_params else {(): base[coord]}
            poly = Polynomial(k_params, terms)
            for j, vert in enumerate(used[1:]):
                delta = vert[coord] - base[coord]
                if delta != 0:
                    e = [0] * k_params
                    e[j] = 1
                    poly = poly + Polynomial.monomial(k_params, e, delta)
            comps.append(poly)
        faces.append(BoundaryFace(-1 if k % 2 else 1, comps))
    return BoundaryChain(m, faces)


def compose_polymaps(outer: Sequence[Polynomial], inner: Sequence[Polynomial]) -> list:
    return [h.compose(list(inner)) for h in outer]


@dataclass
class StokesReport:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    def __str__(self):
        return f"boundary {self.lhs:.10g} vs differential {self.rhs:.10g} (residual {self.residual:.2e})"


def check_stokes(h: SimplexMap, psi: LogForm, cfg=None) -> StokesReport:
    """Signed boundary integral of (h restricted to faces)^* psi against the
    simplex integral of h^*(d psi); both sides via exact pullbacks."""
    from .integrate import QuadConfig, integrate_log_form

    cfg = cfg or QuadConfig()
    m = h.m
    if psi.degree != m - 1:
        raise StokesError(f"need a degree-{m - 1} form on the target")
    if any(I for (I, _J) in psi.terms):
        raise StokesError("the integrand must be smooth (no dr/r factors)")

    rhs_form = psi.exterior_d().pullback_polymap(h.components, p_source=0)
    rhs = integrate_log_form(simplex_region(m), rhs_form, cfg).value

    lhs = 0.0
    chain = boundary_chain(m)
    for face in chain.faces:
        comps = compose_polymaps(h.components, face.components)
        pulled = psi.pullback_polymap(comps, p_source=0)
        if m - 1 == 0:
            # boundary of an interval: signed evaluation at the endpoint
            value = float(pulled.terms.get(((), ()), Polynomial.zero(0)).eval([]))
        else:
            value = integrate_log_form(simplex_region(m - 1), pulled, cfg).value
        lhs += face.sign * value
    return StokesReport(lhs, rhs)


def boundary_of_boundary_cancels(m: int) -> bool:
    """The (m-2)-faces of the boundary chain cancel in pairs."""
    if m < 2:
        return True
    chain = boundary_chain(m)
    book: dict = {}
    for face in chain.faces:
        sub = boundary_chain(m - 1)
        for inner in sub.faces:
            comps = compose_polymaps(face.components, inner.components)
            key = tuple(
                tuple(sorted(c.terms.items())) for c in comps
            )
            book[key] = book.get(key, 0) + face.sign * inner.sign
    return all(v == 0 for v in book.values())
