"""Exact multivariate polynomials and logarithmic differential forms.

Coefficients are arbitrary-precision rationals (fractions.Fraction); ring
arithmetic, exterior derivative, wedge product and pullback along monomial
coordinate changes are all exact.  Floats appear only when a polynomial is
evaluated at a float point.

A logarithmic m-form is a sum of terms

    a(r, x) * dr_{i1}/r_{i1} ^ ... ^ dr_{ik}/r_{ik} ^ dx_{j1} ^ ... ^ dx_{jm-k}

where the first p ambient coordinates are the divisor coordinates r and the
rest are smooth coordinates x.  Terms are normalized so the log factors come
first with ascending indices, then the smooth factors ascending; all signs
are tracked relative to that normal form.  Indices are 0-based internally.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


class PolyError(ValueError):
    pass


class PolyParseError(PolyError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise PolyError(f"cannot use {type(value).__name__} as an exact coefficient")


class Polynomial:
    """Sparse polynomial: map from exponent tuples to nonzero Fractions."""

    __slots__ = ("nvars", "terms", "_vec")

    def __init__(self, nvars: int, terms: Mapping[tuple, Fraction] | None = None):
        self.nvars = int(nvars)
        clean: dict[tuple, Fraction] = {}
        if terms:
            for exp, coeff in terms.items():
                coeff = _as_fraction(coeff)
                if coeff == 0:
                    continue
                exp = tuple(int(e) for e in exp)
                if len(exp) != self.nvars:
                    raise PolyError(
                        f"exponent tuple {exp} does not match ambient dimension {self.nvars}"
                    )
                if any(e < 0 for e in exp):
                    raise PolyError("negative exponent in monomial")
                prev = clean.get(exp)
                total = coeff if prev is None else prev + coeff
                if total == 0:
                    clean.pop(exp, None)
                else:
                    clean[exp] = total
        self.terms = clean
        self._vec = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(nvars: int) -> "Polynomial":
        return Polynomial(nvars)

    @staticmethod
    def const(nvars: int, value) -> "Polynomial":
        return Polynomial(nvars, {(0,) * nvars: _as_fraction(value)})

    @staticmethod
    def var(nvars: int, index: int) -> "Polynomial":
        if not 0 <= index < nvars:
            raise PolyError(f"variable index {index} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[index] = 1
        return Polynomial(nvars, {tuple(exp): Fraction(1)})

    @staticmethod
    def monomial(nvars: int, exps: Sequence[int], coeff=1) -> "Polynomial":
        return Polynomial(nvars, {tuple(exps): _as_fraction(coeff)})

    # -- ring structure -----------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        merged = dict(self.terms)
        for exp, c in other.terms.items():
            s = merged.get(exp, Fraction(0)) + c
            if s == 0:
                merged.pop(exp, None)
            else:
                merged[exp] = s
        return Polynomial(self.nvars, merged)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[tuple, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(exp, Fraction(0)) + c1 * c2
                if s == 0:
                    out.pop(exp, None)
                else:
                    out[exp] = s
        return Polynomial(self.nvars, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, power: int):
        if not isinstance(power, int) or power < 0:
            raise PolyError("polynomial powers must be non-negative integers")
        result = Polynomial.const(self.nvars, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise PolyError("ambient dimension mismatch")
            return other
        return Polynomial.const(self.nvars, other)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- queries --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(all(e == 0 for e in exp) for exp in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(exp) for exp in self.terms)

    def degree_in(self, index: int) -> int:
        if not self.terms:
            return -1
        return max(exp[index] for exp in self.terms)

    def uses_var(self, index: int) -> bool:
        return any(exp[index] > 0 for exp in self.terms)

    def as_affine(self):
        """Return (coeffs, offset) if degree <= 1, else None."""
        coeffs = [Fraction(0)] * self.nvars
        offset = Fraction(0)
        for exp, c in self.terms.items():
            total = sum(exp)
            if total == 0:
                offset = c
            elif total == 1:
                coeffs[exp.index(1)] = c
            else:
                return None
        return coeffs, offset

    def content_monomial(self) -> tuple:
        """Componentwise minimum exponent over all terms (the gcd monomial)."""
        if not self.terms:
            raise PolyError("zero polynomial has no content monomial")
        mins = None
        for exp in self.terms:
            mins = exp if mins is None else tuple(min(a, b) for a, b in zip(mins, exp))
        return mins

    # -- calculus and substitution ---------------------------------------

    def partial(self, index: int) -> "Polynomial":
        out: dict[tuple, Fraction] = {}
        for exp, c in self.terms.items():
            e = exp[index]
            if e == 0:
                continue
            new = list(exp)
            new[index] = e - 1
            out[tuple(new)] = out.get(tuple(new), Fraction(0)) + c * e
        return Polynomial(self.nvars, out)

    def eval(self, point: Sequence):
        """Exact when the point is rational, float otherwise."""
        if len(point) != self.nvars:
            raise PolyError(
                f"point of length {len(point)} for {self.nvars}-variable polynomial"
            )
        exact = all(isinstance(x, (int, Fraction)) for x in point)
        total = Fraction(0) if exact else 0.0
        for exp, c in self.terms.items():
            term = c if exact else float(c)
            for x, e in zip(point, exp):
                if e:
                    term *= x**e
            total += term
        return total

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized float evaluation; pts has shape (N, nvars)."""
        if self._vec is None:
            if self.terms:
                exps = np.array(list(self.terms.keys()), dtype=np.int64)
                coeffs = np.array([float(c) for c in self.terms.values()])
            else:
                exps = np.zeros((0, self.nvars), dtype=np.int64)
                coeffs = np.zeros(0)
            self._vec = (exps, coeffs)
        exps, coeffs = self._vec
        if not len(coeffs):
            return np.zeros(pts.shape[0])
        powers = pts[:, None, :] ** exps[None, :, :]
        return powers.prod(axis=2) @ coeffs

    def partial_eval(self, values: Mapping[int, object]) -> "Polynomial":
        """Fix the listed variables; the result keeps the same ambient."""
        out: dict[tuple, Fraction] = {}
        for exp, c in self.terms.items():
            coeff = c
            new = list(exp)
            ok = True
            for idx, val in values.items():
                e = exp[idx]
                if e:
                    coeff = coeff * _as_fraction(val) ** e
                new[idx] = 0
                if coeff == 0:
                    ok = False
                    break
            if not ok:
                continue
            key = tuple(new)
            s = out.get(key, Fraction(0)) + coeff
            if s == 0:
                out.pop(key, None)
            else:
                out[key] = s
        return Polynomial(self.nvars, out)

    def compose(self, comps: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute comps[i] for variable i; comps live in a common ambient."""
        if len(comps) != self.nvars:
            raise PolyError("need one substitute per variable")
        target_n = comps[0].nvars if comps else 0
        result = Polynomial.zero(target_n)
        cache: dict[tuple, Polynomial] = {}
        for exp, c in self.terms.items():
            term = Polynomial.const(target_n, c)
            for i, e in enumerate(exp):
                if e:
                    key = (i, e)
                    if key not in cache:
                        cache[key] = comps[i] ** e
                    term = term * cache[key]
            result = result + term
        return result

    def drop_vars(self, indices: Iterable[int]) -> "Polynomial":
        """Remove unused coordinates, renumbering the rest in order."""
        drop = sorted(set(indices))
        for exp in self.terms:
            for i in drop:
                if exp[i]:
                    raise PolyError(f"variable {i} still occurs; cannot drop")
        keep = [i for i in range(self.nvars) if i not in drop]
        out = {
            tuple(exp[i] for i in keep): c for exp, c in self.terms.items()
        }
        return Polynomial(len(keep), out)

    def map_vars(self, mapping: Sequence[int], new_nvars: int) -> "Polynomial":
        """Reindex: old variable i becomes mapping[i] in an ambient of new_nvars."""
        out: dict[tuple, Fraction] = {}
        for exp, c in self.terms.items():
            new = [0] * new_nvars
            for i, e in enumerate(exp):
                if e:
                    new[mapping[i]] += e
            key = tuple(new)
            out[key] = out.get(key, Fraction(0)) + c
        return Polynomial(new_nvars, out)

    def divide_monomial(self, exps: Sequence[int]) -> "Polynomial":
        out = {}
        for exp, c in self.terms.items():
            new = tuple(a - b for a, b in zip(exp, exps))
            if any(e < 0 for e in new):
                raise PolyError("monomial division is not exact")
            out[new] = c
        return Polynomial(self.nvars, out)

    # -- display ----------------------------------------------------------

    def to_text(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        def keyfn(item):
            exp, _ = item
            return (-sum(exp), tuple(-e for e in exp))
        pieces = []
        for exp, c in sorted(self.terms.items(), key=keyfn):
            factors = []
            if abs(c) != 1 or all(e == 0 for e in exp):
                factors.append(str(abs(c)))
            for i, e in enumerate(exp):
                if e == 1:
                    factors.append(names[i])
                elif e > 1:
                    factors.append(f"{names[i]}^{e}")
            text = "*".join(factors)
            pieces.append((c < 0, text))
        out = ("-" if pieces[0][0] else "") + pieces[0][1]
        for neg, text in pieces[1:]:
            out += (" - " if neg else " + ") + text
        return out

    def __repr__(self):
        names = [f"v{i}" for i in range(self.nvars)]
        return f"Polynomial({self.to_text(names)})"


# -- expression parser ------------------------------------------------------
#
# expr   := ['-'] term (('+'|'-') term)*
# term   := factor ('*' factor)*
# factor := base ('^' nat)?
# base   := var | rational | '(' expr ')'
# var    := ('r'|'x'|'zr'|'zi') nat        (any declared name, in general)


class _Parser:
    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.pos = 0
        self.names = {name: i for i, name in enumerate(names)}
        self.nvars = len(names)

    def error(self, message: str):
        raise PolyParseError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected '{ch}'")
        self.pos += 1

    def parse(self) -> Polynomial:
        value = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            self.error("unexpected trailing input")
        return value

    def expr(self) -> Polynomial:
        negate = False
        if self.peek() == "-":
            self.pos += 1
            negate = True
        value = self.term()
        if negate:
            value = -value
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                value = value + self.term()
            elif ch == "-":
                self.pos += 1
                value = value - self.term()
            else:
                return value

    def term(self) -> Polynomial:
        value = self.factor()
        while self.peek() == "*":
            self.pos += 1
            value = value * self.factor()
        return value

    def factor(self) -> Polynomial:
        value = self.base()
        if self.peek() == "^":
            self.pos += 1
            if self.peek() == "-":
                self.error("negative exponent")
            exponent = self.nat()
            value = value**exponent
        return value

    def nat(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected a natural number")
        return int(self.text[start : self.pos])

    def base(self) -> Polynomial:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            value = self.expr()
            self.expect(")")
            return value
        if ch.isdigit():
            num = self.nat()
            if self.peek() == "/":
                self.pos += 1
                den = self.nat()
                if den == 0:
                    self.error("zero denominator")
                return Polynomial.const(self.nvars, Fraction(num, den))
            return Polynomial.const(self.nvars, num)
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalpha():
                self.pos += 1
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            name = self.text[start : self.pos]
            if name not in self.names:
                self.pos = start
                self.error(f"unknown variable '{name}'")
            return Polynomial.var(self.nvars, self.names[name])
        self.error("expected a variable, number or '('")


def parse_poly(text: str, names: Sequence[str]) -> Polynomial:
    """Parse an expression over the declared variable names."""
    return _Parser(text, names).parse()


# -- Newton exponent data ----------------------------------------------------


class NewtonData:
    """Exponent support of a polynomial projected to the divisor block.

    points holds all projections; generators the componentwise-minimal ones,
    which generate the convex hull of the union of shifted positive orthants.
    """

    def __init__(self, points: set, generators: list):
        self.points = points
        self.generators = generators

    def min_total_degree(self) -> int:
        return min(sum(pt) for pt in self.points)

    def has_constant(self) -> bool:
        if not self.points:
            return False
        width = len(next(iter(self.points)))
        return (0,) * width in self.points


def newton_exponents(f: Polynomial, p: int) -> NewtonData:
    """Divisor-block exponent support; the coefficient polynomials in the
    remaining variables are automatically nonzero because distinct stored
    monomials cannot cancel."""
    if f.is_zero():
        raise PolyError("zero polynomial has no exponent support")
    points = {exp[:p] for exp in f.terms}
    gens = []
    for pt in sorted(points):
        if not any(all(q[i] <= pt[i] for i in range(p)) and q != pt for q in points):
            gens.append(pt)
    return NewtonData(points, gens)


# -- monomial coordinate changes ----------------------------------------------


class MonomialMap:
    """Map sending a source point to a target point, one signed scaled
    monomial per target coordinate: target_i = coeff_i * prod_j s_j^e_ij.

    Covers blow-up chart substitutions; composition always closes because
    monomials substituted into monomials stay monomials.
    """

    def __init__(self, n_source: int, components: Sequence[tuple]):
        self.n_source = int(n_source)
        comps = []
        for coeff, exps in components:
            coeff = _as_fraction(coeff)
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n_source:
                raise PolyError("component exponent length mismatch")
            if any(e < 0 for e in exps):
                raise PolyError("negative exponents are not permitted in a chart map")
            comps.append((coeff, exps))
        self.components = comps
        self.n_target = len(comps)

    @staticmethod
    def identity(n: int) -> "MonomialMap":
        comps = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            comps.append((Fraction(1), tuple(e)))
        return MonomialMap(n, comps)

    def compose(self, inner: "MonomialMap") -> "MonomialMap":
        """self after inner: x -> self(inner(x))."""
        if inner.n_target != self.n_source:
            raise PolyError("composition dimension mismatch")
        comps = []
        for coeff, exps in self.components:
            c = coeff
            acc = [0] * inner.n_source
            for j, e in enumerate(exps):
                if e:
                    cj, fj = inner.components[j]
                    c *= cj**e
                    for k, fe in enumerate(fj):
                        acc[k] += e * fe
            comps.append((c, tuple(acc)))
        return MonomialMap(inner.n_source, comps)

    def component_poly(self, i: int) -> Polynomial:
        coeff, exps = self.components[i]
        return Polynomial.monomial(self.n_source, exps, coeff)

    def apply(self, point: Sequence):
        out = []
        exact = all(isinstance(x, (int, Fraction)) for x in point)
        for coeff, exps in self.components:
            val = coeff if exact else float(coeff)
            for x, e in zip(point, exps):
                if e:
                    val *= x**e
            out.append(val)
        return out

    def numeric_inverse(self, target: Sequence[float]) -> list:
        """Invert on the positive orthant by solving the log-linear system."""
        if self.n_source != self.n_target:
            raise PolyError("only square maps are invertible")
        n = self.n_source
        mat = [[Fraction(exps[j]) for j in range(n)] for _, exps in self.components]
        rhs = [
            float(np.log(abs(t) / abs(float(c))))
            for t, (c, _) in zip(target, self.components)
        ]
        # exact forward elimination on the exponent matrix, float back-substitution
        import copy

        a = copy.deepcopy(mat)
        b = list(rhs)
        perm = list(range(n))
        for col in range(n):
            pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
            if pivot is None:
                raise PolyError("chart exponent matrix is singular")
            a[col], a[pivot] = a[pivot], a[col]
            b[col], b[pivot] = b[pivot], b[col]
            for r in range(col + 1, n):
                if a[r][col] != 0:
                    factor = a[r][col] / a[col][col]
                    for k in range(col, n):
                        a[r][k] -= factor * a[col][k]
                    b[r] -= float(factor) * b[col]
        logs = [0.0] * n
        for row in range(n - 1, -1, -1):
            s = b[row] - sum(float(a[row][k]) * logs[k] for k in range(row + 1, n))
            logs[row] = s / float(a[row][row])
        return [float(np.exp(v)) for v in logs]

    def __repr__(self):
        return f"MonomialMap({self.components})"


# -- logarithmic forms --------------------------------------------------------


def _merge_sign(keys: list) -> int:
    """Parity sign for sorting a list of distinct 1-form slots."""
    inversions = 0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] > keys[j]:
                inversions += 1
    return -1 if inversions % 2 else 1


class LogForm:
    """Sum of log-form terms over an ambient with p divisor coordinates."""

    __slots__ = ("n", "p", "degree", "terms")

    def __init__(self, n: int, p: int, degree: int,
                 terms: Mapping[tuple, Polynomial] | None = None):
        self.n = int(n)
        self.p = int(p)
        self.degree = int(degree)
        clean: dict[tuple, Polynomial] = {}
        if terms:
            for (I, J), coeff in terms.items():
                I = tuple(sorted(int(i) for i in I))
                J = tuple(sorted(int(j) for j in J))
                self._check_key(I, J)
                if coeff.nvars != self.n:
                    raise PolyError("coefficient ambient mismatch")
                if coeff.is_zero():
                    continue
                key = (I, J)
                if key in clean:
                    s = clean[key] + coeff
                    if s.is_zero():
                        del clean[key]
                    else:
                        clean[key] = s
                else:
                    clean[key] = coeff
        self.terms = clean

    def _check_key(self, I: tuple, J: tuple):
        if len(I) + len(J) != self.degree:
            raise PolyError("term degree mismatch")
        if any(not 0 <= i < self.p for i in I):
            raise PolyError("log index outside the divisor coordinates")
        if any(not self.p <= j < self.n for j in J):
            raise PolyError("smooth index outside the smooth coordinates")
        if len(set(I)) != len(I) or len(set(J)) != len(J):
            raise PolyError("repeated index in a term")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(n: int, p: int, degree: int) -> "LogForm":
        return LogForm(n, p, degree)

    @staticmethod
    def term(n: int, p: int, coeff: Polynomial, I: Iterable[int], J: Iterable[int]) -> "LogForm":
        I = tuple(sorted(I))
        J = tuple(sorted(J))
        return LogForm(n, p, len(I) + len(J), {(I, J): coeff})

    @staticmethod
    def dlog(n: int, p: int, index: int) -> "LogForm":
        """dr_index / r_index."""
        return LogForm.term(n, p, Polynomial.const(n, 1), (index,), ())

    @staticmethod
    def dx(n: int, p: int, index: int) -> "LogForm":
        return LogForm.term(n, p, Polynomial.const(n, 1), (), (index,))

    # -- linear structure -------------------------------------------------

    def _compatible(self, other: "LogForm"):
        if (self.n, self.p) != (other.n, other.p):
            raise PolyError("mismatched ambient (n, p)")

    def __add__(self, other: "LogForm") -> "LogForm":
        self._compatible(other)
        if self.degree != other.degree:
            raise PolyError("cannot add forms of different degree")
        merged = dict(self.terms)
        for key, coeff in other.terms.items():
            s = merged[key] + coeff if key in merged else coeff
            if s.is_zero():
                merged.pop(key, None)
            else:
                merged[key] = s
        return LogForm(self.n, self.p, self.degree, merged)

    def __neg__(self) -> "LogForm":
        return LogForm(
            self.n, self.p, self.degree, {k: -c for k, c in self.terms.items()}
        )

    def __sub__(self, other: "LogForm") -> "LogForm":
        return self + (-other)

    def scale(self, factor) -> "LogForm":
        if isinstance(factor, Polynomial):
            mult = factor
        else:
            mult = Polynomial.const(self.n, factor)
        return LogForm(
            self.n, self.p, self.degree, {k: mult * c for k, c in self.terms.items()}
        )

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, LogForm):
            return NotImplemented
        return (
            (self.n, self.p, self.degree) == (other.n, other.p, other.degree)
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.n, self.p, self.degree, frozenset(self.terms)))

    # -- exterior algebra ---------------------------------------------------

    @staticmethod
    def _slot_keys(I: tuple, J: tuple) -> list:
        return [(0, i) for i in I] + [(1, j) for j in J]

    def wedge(self, other: "LogForm") -> "LogForm":
        self._compatible(other)
        out: dict[tuple, Polynomial] = {}
        for (I1, J1), c1 in self.terms.items():
            for (I2, J2), c2 in other.terms.items():
                if set(I1) & set(I2) or set(J1) & set(J2):
                    continue
                keys = self._slot_keys(I1, J1) + self._slot_keys(I2, J2)
                sign = _merge_sign(keys)
                I = tuple(sorted(I1 + I2))
                J = tuple(sorted(J1 + J2))
                coeff = c1 * c2
                if sign < 0:
                    coeff = -coeff
                key = (I, J)
                s = out[key] + coeff if key in out else coeff
                if s.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = s
        return LogForm(self.n, self.p, self.degree + other.degree, out)

    def exterior_d(self) -> "LogForm":
        """d of a smooth form (all terms must have empty log index set).

        d in an r-direction produces r_i * da/dr_i * dr_i/r_i, which keeps
        the result inside the polynomial-coefficient log-form algebra.
        """
        out = LogForm.zero(self.n, self.p, self.degree + 1)
        for (I, J), coeff in self.terms.items():
            if I:
                raise PolyError(
                    "exterior derivative of dr/r terms is outside this algebra"
                )
            for v in range(self.n):
                dv = coeff.partial(v)
                if dv.is_zero():
                    continue
                if v < self.p:
                    new_coeff = Polynomial.var(self.n, v) * dv
                    out = out + LogForm.term(self.n, self.p, new_coeff, (v,), J)
                else:
                    if v in J:
                        continue
                    sign = -1 if sum(1 for j in J if j < v) % 2 else 1
                    new_coeff = dv if sign > 0 else -dv
                    out = out + LogForm.term(
                        self.n, self.p, new_coeff, (), tuple(sorted(J + (v,)))
                    )
        return out

    # -- pullbacks ------------------------------------------------------------

    def pullback_monomial(self, mapping: MonomialMap, p_source: int) -> "LogForm":
        """Pull back along a monomial coordinate change.

        Divisor coordinates of the target must map to monomials in the
        source divisor coordinates so each dr/r pulls back to a sum of
        du/u; smooth target coordinates may map to any signed monomial.
        """
        if mapping.n_target != self.n:
            raise PolyError("map target dimension differs from the form ambient")
        ns = mapping.n_source
        for i in range(min(self.p, mapping.n_target)):
            _, exps = mapping.components[i]
            if any(exps[k] > 0 for k in range(p_source, ns)):
                raise PolyError(
                    f"divisor coordinate {i} maps into smooth source coordinates"
                )

        def factor_pullback(slot) -> LogForm:
            kind, idx = slot
            coeff, exps = mapping.components[idx]
            if kind == 0:
                out = LogForm.zero(ns, p_source, 1)
                for k in range(p_source):
                    if exps[k]:
                        out = out + LogForm.term(
                            ns, p_source, Polynomial.const(ns, exps[k]), (k,), ()
                        )
                return out
            out = LogForm.zero(ns, p_source, 1)
            mono = Polynomial.monomial(ns, exps, coeff)
            for k in range(ns):
                e = exps[k]
                if not e:
                    continue
                if k < p_source:
                    out = out + LogForm.term(ns, p_source, e * mono, (k,), ())
                else:
                    dropped = list(exps)
                    dropped[k] -= 1
                    out = out + LogForm.term(
                        ns,
                        p_source,
                        Polynomial.monomial(ns, dropped, coeff * e),
                        (),
                        (k,),
                    )
            return out

        comps = [mapping.component_poly(i) for i in range(self.n)]
        result = LogForm.zero(ns, p_source, self.degree)
        for (I, J), coeff in self.terms.items():
            piece = LogForm.term(ns, p_source, coeff.compose(comps), (), ())
            for slot in self._slot_keys(I, J):
                piece = piece.wedge(factor_pullback(slot))
                if piece.is_zero():
                    break
            if not piece.is_zero():
                result = result + piece
        return result

    def pullback_polymap(self, comps: Sequence[Polynomial], p_source: int = 0) -> "LogForm":
        """Pull back a smooth form along a polynomial map given by components.

        Source divisor coordinates are allowed: du_k is rewritten as
        u_k * du_k/u_k there.
        """
        if len(comps) != self.n:
            raise PolyError("need one component per target coordinate")
        ns = comps[0].nvars

        def d_component(h: Polynomial) -> LogForm:
            out = LogForm.zero(ns, p_source, 1)
            for v in range(ns):
                dv = h.partial(v)
                if dv.is_zero():
                    continue
                if v < p_source:
                    out = out + LogForm.term(
                        ns, p_source, Polynomial.var(ns, v) * dv, (v,), ()
                    )
                else:
                    out = out + LogForm.term(ns, p_source, dv, (), (v,))
            return out

        result = LogForm.zero(ns, p_source, self.degree)
        for (I, J), coeff in self.terms.items():
            if I:
                raise PolyError("log factors cannot be pulled back along a general map")
            piece = LogForm.term(ns, p_source, coeff.compose(list(comps)), (), ())
            for j in J:
                piece = piece.wedge(d_component(comps[j]))
                if piece.is_zero():
                    break
            if not piece.is_zero():
                result = result + piece
        return result

    # -- slice restriction ------------------------------------------------

    def substitute_log_relation(self, index: int, replacement: Sequence[tuple]) -> "LogForm":
        """Replace every dr_index/r_index factor by sum_k c_k dr_k/r_k."""
        out = LogForm.zero(self.n, self.p, self.degree)
        for (I, J), coeff in self.terms.items():
            if index not in I:
                out = out + LogForm.term(self.n, self.p, coeff, I, J)
                continue
            rest = tuple(i for i in I if i != index)
            pos = I.index(index)
            for c, k in replacement:
                if k in rest:
                    continue
                slots = [(0, i) for i in I] + [(1, j) for j in J]
                slots[pos] = (0, k)
                sign = _merge_sign(slots)
                new_coeff = coeff * _as_fraction(c)
                if sign < 0:
                    new_coeff = -new_coeff
                out = out + LogForm.term(
                    self.n, self.p, new_coeff, tuple(sorted(rest + (k,))), J
                )
        return out

    def remove_coordinate(self, index: int) -> "LogForm":
        """Drop an unused coordinate and renumber; p shrinks if it was a divisor."""
        mapping = [i if i < index else i - 1 for i in range(self.n)]
        new_p = self.p - 1 if index < self.p else self.p
        out: dict[tuple, Polynomial] = {}
        for (I, J), coeff in self.terms.items():
            if index in I or index in J:
                raise PolyError("form still references the dropped coordinate")
            if coeff.uses_var(index):
                raise PolyError("coefficient still references the dropped coordinate")
            coeff2 = coeff.drop_vars([index])
            key = (
                tuple(mapping[i] for i in I),
                tuple(mapping[j] for j in J),
            )
            out[key] = coeff2
        return LogForm(self.n - 1, new_p, self.degree, out)

    def to_text(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for (I, J), coeff in sorted(self.terms.items()):
            factors = [f"d{names[i]}/{names[i]}" for i in I]
            factors += [f"d{names[j]}" for j in J]
            body = " ^ ".join(factors) if factors else "1"
            pieces.append(f"({coeff.to_text(names)}) {body}")
        return " + ".join(pieces)

    def __repr__(self):
        names = [f"v{i}" for i in range(self.n)]
        return f"LogForm({self.to_text(names)})"
