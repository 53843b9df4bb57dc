"""Surgery diagrams at the homological level.

A diagram is a list of surgery coefficients ``p_i/q_i`` (``q_i = 0`` for the
symbol inf) plus a symmetric integer matrix of linking numbers. Everything
computed here factors through the linking matrix: homology, linking form,
Kirby-style moves, continued fractions and the reduction of homology lens
spaces to lens spaces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

from .abgroup import Cokernel, FiniteAbelianGroup, GroupElement, NotFinite, cokernel
from .intlinalg import SingularMatrix, rational_inverse, transpose
from .linkform import LinkingForm, classify_class

INF = None


class NotApplicable(ValueError):
    pass


class NotQHS(ValueError):
    """Surgery result has positive first Betti number."""


class BadParams(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class AsymmetricLinking(ParseError):
    pass


class BadCoefficient(ParseError):
    pass


def normalize_coefficient(p: int, q: int) -> tuple[int, int]:
    """Lowest terms with ``p >= 0``; ``(1, 0)`` is inf."""
    p, q = int(p), int(q)
    if p == 0 and q == 0:
        raise ValueError("0/0 is not a surgery coefficient")
    g = gcd(p, q)
    p, q = p // g, q // g
    if p < 0 or (p == 0 and q < 0):
        p, q = -p, -q
    return p, q


def coefficient_of(r) -> tuple[int, int]:
    if r is INF:
        return (1, 0)
    if isinstance(r, tuple):
        return normalize_coefficient(*r)
    r = Fraction(r)
    return normalize_coefficient(r.numerator, r.denominator)


@dataclass(frozen=True)
class SurgeryDiagram:
    coeffs: tuple[tuple[int, int], ...]
    lk: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        coeffs = tuple(coefficient_of(c) for c in self.coeffs)
        n = len(coeffs)
        lk = tuple(tuple(int(x) for x in row) for row in self.lk) if self.lk else ((),) * 0
        if n and (len(lk) != n or any(len(r) != n for r in lk)):
            raise ValueError("linking matrix size does not match component count")
        for i in range(n):
            if lk[i][i]:
                raise ValueError("linking matrix must have zero diagonal")
            for j in range(i):
                if lk[i][j] != lk[j][i]:
                    raise ValueError("linking matrix must be symmetric")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "lk", lk)

    @classmethod
    def build(cls, coeffs: Sequence, links: Optional[dict] = None) -> "SurgeryDiagram":
        """``coeffs`` as Fractions/ints/None, ``links`` as ``{(i, j): lk}`` (0-based)."""
        n = len(coeffs)
        lk = [[0] * n for _ in range(n)]
        for (i, j), v in (links or {}).items():
            lk[i][j] = lk[j][i] = int(v)
        return cls(tuple(coefficient_of(c) for c in coeffs), tuple(map(tuple, lk)))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def coefficient(self, i: int) -> Optional[Fraction]:
        p, q = self.coeffs[i]
        return None if q == 0 else Fraction(p, q)

    def is_integral(self, i: int) -> bool:
        return abs(self.coeffs[i][1]) == 1

    def without(self, idx: Sequence[int]) -> "SurgeryDiagram":
        keep = [i for i in range(self.n) if i not in set(idx)]
        return SurgeryDiagram(
            tuple(self.coeffs[i] for i in keep),
            tuple(tuple(self.lk[i][j] for j in keep) for i in keep),
        )

    def normalized(self) -> "SurgeryDiagram":
        """Drop inf-framed components (filling along the meridian changes nothing)."""
        return self.without([i for i, (_, q) in enumerate(self.coeffs) if q == 0])

    def to_text(self) -> str:
        lines = [f"link n={self.n}"]
        for i, (p, q) in enumerate(self.coeffs):
            lines.append(f"coef {i + 1} inf" if q == 0 else f"coef {i + 1} {p}/{q}")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.lk[i][j]:
                    lines.append(f"lk {i + 1} {j + 1} {self.lk[i][j]}")
        return "\n".join(lines) + "\n"


_COEF = re.compile(r"^coef\s+(\d+)\s+(?:(inf)|(-?\d+)(?:\s*/\s*(-?\d+))?)$")
_LK = re.compile(r"^lk\s+(\d+)\s+(\d+)\s+(-?\d+)$")
_HEAD = re.compile(r"^link\s+n\s*=\s*(\d+)$")


def parse_diagram(text: str) -> SurgeryDiagram:
    """Parse the line-oriented diagram format (``link``, ``coef``, ``lk``)."""
    n = None
    coeffs: dict[int, tuple[int, int]] = {}
    links: dict[tuple[int, int], tuple[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            m = _HEAD.match(line)
            if not m:
                raise ParseError(lineno, "expected 'link n=<count>'")
            n = int(m.group(1))
            continue
        m = _COEF.match(line)
        if m:
            i = int(m.group(1))
            if not 1 <= i <= n:
                raise ParseError(lineno, f"component {i} out of range")
            if i in coeffs:
                raise ParseError(lineno, f"duplicate coefficient for component {i}")
            if m.group(2):
                coeffs[i] = (1, 0)
            else:
                p = int(m.group(3))
                q = int(m.group(4)) if m.group(4) is not None else 1
                if q == 0:
                    raise BadCoefficient(lineno, "zero denominator; write 'inf'")
                coeffs[i] = normalize_coefficient(p, q)
            continue
        m = _LK.match(line)
        if m:
            i, j, v = int(m.group(1)), int(m.group(2)), int(m.group(3))
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ParseError(lineno, f"bad component pair ({i}, {j})")
            key = (min(i, j), max(i, j))
            if key in links and links[key][0] != v:
                raise AsymmetricLinking(
                    lineno, f"lk {i} {j} = {v} conflicts with line {links[key][1]}"
                )
            links[key] = (v, lineno)
            continue
        raise ParseError(lineno, f"cannot parse {line!r}")
    if n is None:
        raise ParseError(0, "empty diagram")
    missing = [i for i in range(1, n + 1) if i not in coeffs]
    if missing:
        raise ParseError(0, f"missing coefficients for components {missing}")
    return SurgeryDiagram.build(
        [coeffs[i] for i in range(1, n + 1)],
        {(i - 1, j - 1): v for (i, j), (v, _) in links.items()},
    )


# ---------------------------------------------------------------------------
# homology


def linking_matrix(d: SurgeryDiagram) -> list[list[Fraction]]:
    if any(q == 0 for _, q in d.coeffs):
        raise ValueError("normalize away inf components first")
    return [
        [Fraction(p, q) if i == j else Fraction(d.lk[i][j]) for j in range(d.n)]
        for i, (p, q) in enumerate(d.coeffs)
    ]


def presentation(d: SurgeryDiagram) -> list[list[int]]:
    """The integer matrix ``QA``; row i is ``q_i`` times row i of A."""
    a = linking_matrix(d)
    out = []
    for (_, q), row in zip(d.coeffs, a):
        out.append([int(q * x) for x in row])
    return out


@dataclass(frozen=True)
class Homology:
    group: FiniteAbelianGroup
    form: LinkingForm
    knot_classes: tuple[GroupElement, ...]
    meridian_classes: tuple[GroupElement, ...]
    coker: Cokernel = field(repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.group.order


def homology(d: SurgeryDiagram) -> Homology:
    """First homology and linking form of the surgered manifold.

    Generators are the classes ``[K_i]``; relation i is row i of ``QA`` and
    ``lk(K_j, K_i) = -Omega_ji`` with ``Omega = A^{-1}``.
    """
    d = d.normalized()
    if d.n == 0:
        g = FiniteAbelianGroup(())
        return Homology(g, LinkingForm(g, ()), (), (), cokernel([[1]]))
    qa = presentation(d)
    try:
        coker = cokernel(transpose(qa))
        omega = rational_inverse(linking_matrix(d))
    except (NotFinite, SingularMatrix) as exc:
        raise NotQHS("surgery result has b1 > 0") from exc
    gram = [
        [
            -sum(
                a * omega[i][j] * b
                for i, a in enumerate(u)
                if a
                for j, b in enumerate(w)
                if b
            )
            for w in coker.lifts
        ]
        for u in coker.lifts
    ]
    form = LinkingForm(coker.group, gram)
    knots = tuple(coker.project([int(i == j) for j in range(d.n)]) for i in range(d.n))
    meridians = tuple(k * (-q) for k, (_, q) in zip(knots, d.coeffs))
    return Homology(coker.group, form, knots, meridians, coker)


# ---------------------------------------------------------------------------
# continued fractions


def continued_fraction_eval(a: Sequence[int]) -> Fraction:
    """``a_1 - 1/(a_2 - 1/(... - 1/a_m))``."""
    if not a:
        raise ValueError("empty continued fraction")
    val = Fraction(a[-1])
    for x in reversed(a[:-1]):
        if val == 0:
            raise ZeroDivisionError("continued fraction hits 1/0")
        val = x - 1 / val
    return val


def continued_fraction_expand(r) -> list[int]:
    """Minus continued fraction with every term after the first at least 2."""
    r = Fraction(r)
    out = []
    while True:
        a = -((-r.numerator) // r.denominator)  # ceil
        out.append(a)
        if a == r:
            return out
        r = 1 / (a - r)


def lens_chain(p: int, q: int) -> SurgeryDiagram:
    """Linear chain of unknots with integer framings presenting ``p/q``."""
    if not (p > q >= 1) or gcd(p, q) != 1:
        raise BadParams(f"lens_chain needs p > q >= 1 coprime, got ({p}, {q})")
    a = continued_fraction_expand(Fraction(p, q))
    return SurgeryDiagram.build(a, {(i, i + 1): 1 for i in range(len(a) - 1)})


# ---------------------------------------------------------------------------
# moves


@dataclass(frozen=True)
class Move:
    kind: str
    i: int = 0
    j: int = 0
    t: int = 0
    eps: int = 1
    row: tuple[int, ...] = ()

    def __str__(self) -> str:
        if self.kind in ("Prune", "BlowDown"):
            return f"{self.kind}({self.i})"
        if self.kind == "BlowUp":
            return f"BlowUp(eps={self.eps}, lk={list(self.row)})"
        if self.kind == "HandleSlide":
            return f"HandleSlide({self.i} over {self.j}, t={self.t})"
        if self.kind == "InverseSlamDunk":
            return f"InverseSlamDunk({self.i}, n={self.t})"
        if self.kind == "RolfsenTwist":
            return f"RolfsenTwist({self.i}, t={self.t})"
        return f"{self.kind}({self.i}, {self.j})"


MOVE_KINDS = (
    "SlamDunk",
    "InverseSlamDunk",
    "RolfsenTwist",
    "BlowUp",
    "BlowDown",
    "HandleSlide",
    "Prune",
)


def _with(d: SurgeryDiagram, coeffs, lk) -> SurgeryDiagram:
    return SurgeryDiagram(tuple(coeffs), tuple(tuple(r) for r in lk))


def _twist_others(d: SurgeryDiagram, u: int, t: int):
    """Effect of ``t`` full twists along unknot ``u`` on the other components."""
    coeffs = list(d.coeffs)
    lk = [list(r) for r in d.lk]
    for j in range(d.n):
        if j == u:
            continue
        lu = d.lk[j][u]
        if lu and d.coeffs[j][1] != 0:
            coeffs[j] = coefficient_of(Fraction(*d.coeffs[j]) + t * lu * lu)
        for k in range(d.n):
            if k != j and k != u:
                lk[j][k] = d.lk[j][k] + t * lu * d.lk[k][u]
    return coeffs, lk


def apply_move(d: SurgeryDiagram, m: Move) -> SurgeryDiagram:
    """Apply one Kirby-style move to the linking data.

    Raises :class:`NotApplicable` with the reason when the move's
    precondition fails.
    """
    n = d.n

    def check_index(*idx):
        for i in idx:
            if not 0 <= i < n:
                raise NotApplicable(f"component {i} out of range")

    if m.kind == "Prune":
        check_index(m.i)
        if d.coeffs[m.i] not in ((1, 1), (1, -1)):
            raise NotApplicable("prune needs coefficient +-1")
        if any(d.lk[m.i]):
            raise NotApplicable("prune needs an algebraically split component")
        return d.without([m.i])

    if m.kind == "BlowDown":
        check_index(m.i)
        if d.coeffs[m.i] not in ((1, 1), (1, -1)):
            raise NotApplicable("blow-down needs coefficient +-1")
        eps = d.coeffs[m.i][1]
        coeffs, lk = _twist_others(d, m.i, -eps)
        return _with(d, coeffs, lk).without([m.i])

    if m.kind == "BlowUp":
        if m.eps not in (1, -1) or len(m.row) != n:
            raise NotApplicable("blow-up needs eps = +-1 and one linking number per component")
        grown = _with(
            d,
            list(d.coeffs) + [(1, m.eps)],
            [list(r) + [m.row[i]] for i, r in enumerate(d.lk)] + [list(m.row) + [0]],
        )
        coeffs, lk = _twist_others(grown, n, m.eps)
        return _with(grown, coeffs, lk)

    if m.kind == "RolfsenTwist":
        check_index(m.i)
        p, q = d.coeffs[m.i]
        coeffs, lk = _twist_others(d, m.i, m.t)
        coeffs[m.i] = normalize_coefficient(p, q + m.t * p)
        return _with(d, coeffs, lk)

    if m.kind == "HandleSlide":
        check_index(m.i, m.j)
        i, j, t = m.i, m.j, m.t
        if i == j:
            raise NotApplicable("cannot slide a component over itself")
        if not d.is_integral(j) or not d.is_integral(i):
            raise NotApplicable("handle slides need integral framings")
        ai, aj = Fraction(*d.coeffs[i]), Fraction(*d.coeffs[j])
        lij = d.lk[i][j]
        coeffs = list(d.coeffs)
        coeffs[i] = coefficient_of(ai + t * t * aj + 2 * t * lij)
        lk = [list(r) for r in d.lk]
        for k in range(n):
            if k == i:
                continue
            v = lij + t * int(aj) if k == j else d.lk[i][k] + t * d.lk[j][k]
            lk[i][k] = lk[k][i] = v
        return _with(d, coeffs, lk)

    if m.kind == "SlamDunk":
        check_index(m.i, m.j)
        i, j = m.i, m.j
        if i == j:
            raise NotApplicable("slam-dunk needs two components")
        if abs(d.lk[i][j]) != 1:
            raise NotApplicable("slam-dunk needs a meridian (lk = +-1)")
        if any(d.lk[j][k] for k in range(n) if k != i):
            raise NotApplicable("dunked component must link only its partner")
        if not d.is_integral(i):
            raise NotApplicable("slam-dunk target needs an integral framing")
        pj, qj = d.coeffs[j]
        coeffs = list(d.coeffs)
        if pj == 0:
            coeffs[i] = (1, 0)
        else:
            coeffs[i] = coefficient_of(Fraction(*d.coeffs[i]) - Fraction(qj, pj))
        return _with(d, coeffs, d.lk).without([j])

    if m.kind == "InverseSlamDunk":
        check_index(m.i)
        i, a = m.i, m.t
        r = d.coefficient(i)
        if r is None:
            raise NotApplicable("inverse slam-dunk on an inf component")
        coeffs = list(d.coeffs)
        coeffs[i] = (a, 1) if a >= 0 else (-a, -1)
        rest = a - r
        coeffs.append((1, 0) if rest == 0 else coefficient_of(1 / rest))
        lk = [list(row) + [int(k == i)] for k, row in enumerate(d.lk)]
        lk.append([int(k == i) for k in range(n)] + [0])
        return _with(d, coeffs, lk)

    raise NotApplicable(f"unknown move kind {m.kind!r}")


def replay(d: SurgeryDiagram, moves: Sequence[Move]) -> SurgeryDiagram:
    for m in moves:
        d = apply_move(d, m)
    return d


# ---------------------------------------------------------------------------
# reduction of homology lens spaces


@dataclass(frozen=True)
class SavelievResult:
    lens: tuple[int, int]
    coefficient: Fraction
    moves: tuple[Move, ...]
    final: SurgeryDiagram


def saveliev_reduce(d: SurgeryDiagram, k0: int = 0) -> SavelievResult:
    """Turn ``K_0`` plus a split link of +-1 unknots into a single lens-space unknot.

    Expands the coefficient of ``K_0`` as a chain, slides ``K_0`` off every
    other component, dunks the chain back and prunes.
    """
    n = d.n
    if not 0 <= k0 < n:
        raise PreconditionViolated("distinguished component out of range")
    others = [j for j in range(n) if j != k0]
    for j in others:
        if d.coeffs[j] not in ((1, 1), (1, -1)):
            raise PreconditionViolated(f"component {j} is not +-1 framed")
        for k in others:
            if k != j and d.lk[j][k]:
                raise PreconditionViolated("components other than K_0 must be split")
    r = d.coefficient(k0)
    if r is None:
        raise PreconditionViolated("K_0 must have a finite coefficient")
    if k0 != 0:
        order = [k0] + others
        d = SurgeryDiagram(
            tuple(d.coeffs[i] for i in order),
            tuple(tuple(d.lk[i][j] for j in order) for i in order),
        )
    moves: list[Move] = []
    cur = d
    a = continued_fraction_expand(r)
    chain = [0]
    for x in a[:-1]:
        mv = Move("InverseSlamDunk", i=chain[-1], t=x)
        cur = apply_move(cur, mv)
        moves.append(mv)
        chain.append(cur.n - 1)
    for j in range(1, n):
        ell = cur.lk[0][j]
        if ell:
            eps = cur.coeffs[j][1]
            mv = Move("HandleSlide", i=0, j=j, t=-eps * ell)
            cur = apply_move(cur, mv)
            moves.append(mv)
    for a_idx, b_idx in reversed(list(zip(chain, chain[1:]))):
        mv = Move("SlamDunk", i=a_idx, j=b_idx)
        cur = apply_move(cur, mv)
        moves.append(mv)
    for j in range(n - 1, 0, -1):
        mv = Move("Prune", i=j)
        cur = apply_move(cur, mv)
        moves.append(mv)
    p, q = cur.coeffs[0]
    return SavelievResult((p, q), Fraction(p, q) if q else None, tuple(moves), cur)


# ---------------------------------------------------------------------------
# knot surgery arithmetic


@dataclass(frozen=True)
class SurgeryArithmetic:
    m0: int
    multiplicity: int
    complement_order: int
    predicted_order: int


def knot_surgery_arithmetic(f: LinkingForm, c: GroupElement, p_mult: int, q: int = 1) -> SurgeryArithmetic:
    """Divisibility, complement order and the order ``|p| m0 |G|`` after surgery."""
    rep = classify_class(f, c, context=())
    g = rep.complement_order
    return SurgeryArithmetic(rep.m0, p_mult, g, abs(p_mult) * rep.m0 * g)


__all__ = [
    "INF",
    "Move",
    "MOVE_KINDS",
    "SurgeryDiagram",
    "SurgeryArithmetic",
    "Homology",
    "apply_move",
    "continued_fraction_eval",
    "continued_fraction_expand",
    "homology",
    "knot_surgery_arithmetic",
    "lens_chain",
    "linking_matrix",
    "parse_diagram",
    "presentation",
    "replay",
    "saveliev_reduce",
]
