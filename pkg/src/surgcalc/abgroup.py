"""Finite abelian groups in invariant-factor form, their elements and characters.

A group is ``Z/d_1 + ... + Z/d_k`` with ``d_1 | d_2 | ... | d_k`` and every
``d_i >= 2``. Elements and characters are both residue vectors; a character
with coordinates ``c`` sends the i-th generator to ``exp(2 pi i c_i / d_i)``.
Character values are kept as exact phases in ``[0, 1)``.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm, prod
from typing import Callable, Iterator, Sequence

from .intlinalg import shape, smith_normal_form


class GroupMismatch(ValueError):
    pass


class NotFinite(ValueError):
    """The presentation has a free part (zero determinant)."""


@dataclass(frozen=True)
class FiniteAbelianGroup:
    invariant_factors: tuple[int, ...] = ()

    def __post_init__(self):
        factors = tuple(int(d) for d in self.invariant_factors)
        object.__setattr__(self, "invariant_factors", factors)
        for d in factors:
            if d < 2:
                raise ValueError(f"invariant factor {d} < 2")
        for a, b in zip(factors, factors[1:]):
            if b % a:
                raise ValueError(f"invariant factors {factors} do not divide in chain")

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> "FiniteAbelianGroup":
        """Normalize an arbitrary list of cyclic orders (e.g. ``[2, 3]`` -> ``Z/6``)."""
        diag = [[0] * len(orders) for _ in orders]
        for i, d in enumerate(orders):
            diag[i][i] = int(d)
        if any(d == 0 for d in orders):
            raise NotFinite("cyclic factor of order 0")
        return cls(tuple(d for d in smith_normal_form(diag).diagonal if d > 1))

    @classmethod
    def parse(cls, text: str) -> "FiniteAbelianGroup":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(int(t) for t in text.split(",")))

    def __str__(self) -> str:
        if not self.invariant_factors:
            return "0"
        return " + ".join(f"Z/{d}" for d in self.invariant_factors)

    def serialize(self) -> str:
        return ",".join(str(d) for d in self.invariant_factors)

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def order(self) -> int:
        return prod(self.invariant_factors)

    @property
    def exponent(self) -> int:
        return self.invariant_factors[-1] if self.invariant_factors else 1

    def is_cyclic(self) -> bool:
        return self.rank <= 1

    def element(self, coords: Sequence[int]) -> "GroupElement":
        return GroupElement(self, tuple(coords))

    @property
    def zero(self) -> "GroupElement":
        return GroupElement(self, (0,) * self.rank)

    def generators(self) -> list["GroupElement"]:
        return [
            GroupElement(self, tuple(int(i == j) for j in range(self.rank)))
            for i in range(self.rank)
        ]

    def elements(self) -> Iterator["GroupElement"]:
        for coords in itertools.product(*(range(d) for d in self.invariant_factors)):
            yield GroupElement(self, coords)

    def character(self, coords: Sequence[int]) -> "Character":
        return Character(self, tuple(coords))

    @property
    def trivial_character(self) -> "Character":
        return Character(self, (0,) * self.rank)


@dataclass(frozen=True)
class GroupElement:
    group: FiniteAbelianGroup
    coords: tuple[int, ...]

    def __post_init__(self):
        factors = self.group.invariant_factors
        if len(self.coords) != len(factors):
            raise ValueError("coordinate count does not match group rank")
        object.__setattr__(
            self, "coords", tuple(int(c) % d for c, d in zip(self.coords, factors))
        )

    def _check(self, other: "GroupElement"):
        if self.group != other.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, tuple(-a for a in self.coords))

    def __mul__(self, n: int) -> "GroupElement":
        return GroupElement(self.group, tuple(n * a for a in self.coords))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coords)

    @property
    def order(self) -> int:
        r = 1
        for c, d in zip(self.coords, self.group.invariant_factors):
            r = lcm(r, d // gcd(c, d))
        return r

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.coords)) + ")"


@dataclass(frozen=True)
class Character:
    """Homomorphism to the circle, stored by the phases of the generators."""

    group: FiniteAbelianGroup
    coords: tuple[int, ...]

    def __post_init__(self):
        factors = self.group.invariant_factors
        if len(self.coords) != len(factors):
            raise ValueError("coordinate count does not match group rank")
        object.__setattr__(
            self, "coords", tuple(int(c) % d for c, d in zip(self.coords, factors))
        )

    def is_trivial(self) -> bool:
        return not any(self.coords)

    @property
    def order(self) -> int:
        return GroupElement(self.group, self.coords).order

    def __mul__(self, other: "Character") -> "Character":
        if self.group != other.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")
        return Character(self.group, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __pow__(self, n: int) -> "Character":
        return Character(self.group, tuple(n * a for a in self.coords))

    def conjugate(self) -> "Character":
        return self ** -1

    def __call__(self, h: GroupElement) -> complex:
        return phase_to_complex(evaluate(self, h))

    def __str__(self) -> str:
        return "chi(" + ",".join(map(str, self.coords)) + ")"


def phase_to_complex(phase: Fraction) -> complex:
    # exact values at the quarter turns keep reports clean
    quarter = {Fraction(0): 1 + 0j, Fraction(1, 4): 1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): -1j}
    if phase in quarter:
        return quarter[phase]
    return cmath.exp(2j * cmath.pi * float(phase))


def evaluate(chi: Character, h: GroupElement) -> Fraction:
    """Exact phase of ``chi(h)`` in ``[0, 1)``."""
    if chi.group != h.group:
        raise GroupMismatch(f"{chi.group} vs {h.group}")
    total = sum(
        Fraction(c * x, d)
        for c, x, d in zip(chi.coords, h.coords, chi.group.invariant_factors)
    )
    return total % 1


def all_characters(group: FiniteAbelianGroup) -> Iterator[Character]:
    """Every character exactly once, trivial character first."""
    for coords in itertools.product(*(range(d) for d in group.invariant_factors)):
        yield Character(group, coords)


def span(gens: Sequence[GroupElement], group: FiniteAbelianGroup) -> set[GroupElement]:
    """The subgroup generated by ``gens`` (by closure; small groups only)."""
    seen = {group.zero}
    frontier = [group.zero]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x + g
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def kernel_of_character(chi: Character) -> list[GroupElement]:
    """Generators of ``ker chi``, chosen greedily from an enumeration."""
    group = chi.group
    kernel = [h for h in group.elements() if evaluate(chi, h) == 0]
    gens: list[GroupElement] = []
    generated = {group.zero}
    for h in sorted(kernel, key=lambda e: (-e.order, e.coords)):
        if len(generated) == len(kernel):
            break
        if h not in generated:
            gens.append(h)
            generated = span(gens, group)
    return gens


def subgroup_order(gens: Sequence[GroupElement], group: FiniteAbelianGroup) -> int:
    """Order of the subgroup generated by ``gens``, via SNF of the relation lattice."""
    k = group.rank
    if k == 0:
        return 1
    cols = [list(g.coords) for g in gens]
    cols += [[d * int(i == j) for i in range(k)] for j, d in enumerate(group.invariant_factors)]
    mat = [[col[i] for col in cols] for i in range(k)]
    index = prod(d for d in smith_normal_form(mat).diagonal)
    return group.order // index


@dataclass(frozen=True)
class Cokernel:
    """``Z^n / M Z^n`` together with the projection from ``Z^n``.

    ``lifts[i]`` is an integer vector projecting to the i-th generator.
    """

    group: FiniteAbelianGroup
    transform: tuple[tuple[int, ...], ...]
    lifts: tuple[tuple[int, ...], ...]

    def project(self, vec: Sequence[int]) -> GroupElement:
        coords = [sum(a * b for a, b in zip(row, vec)) for row in self.transform]
        return GroupElement(self.group, coords)

    @property
    def projection(self) -> Callable[[Sequence[int]], GroupElement]:
        return self.project


def cokernel(m: Sequence[Sequence[int]]) -> Cokernel:
    """Cokernel of the integer matrix ``m`` acting on column vectors.

    ``m`` is ``n x c``; its columns are the relations on ``Z^n``. The
    cokernel must be finite, i.e. ``m`` has rank ``n``.
    """
    rows, cols = shape(m)
    snf = smith_normal_form(m)
    diag = snf.diagonal + [0] * max(0, rows - cols)
    if any(d == 0 for d in diag):
        raise NotFinite("presentation matrix is singular")
    keep = [i for i, d in enumerate(diag) if d > 1]
    group = FiniteAbelianGroup(tuple(diag[i] for i in keep))
    # U M V = D, so v -> U v identifies Z^n / im M with the sum of Z/d_i
    transform = tuple(tuple(snf.U[i]) for i in keep)
    u_inv = snf.U_inv
    lifts = tuple(tuple(u_inv[r][i] for r in range(rows)) for i in keep)
    return Cokernel(group, transform, lifts)


@dataclass(frozen=True)
class DirectSum:
    """``G_1 + ... + G_m`` in invariant-factor form with its structure maps.

    ``injections[i][j]`` is the image of the j-th generator of ``G_i``.
    """

    group: FiniteAbelianGroup
    summands: tuple[FiniteAbelianGroup, ...]
    injections: tuple[tuple[GroupElement, ...], ...]
    coker: Cokernel

    def restrict(self, chi: Character, i: int) -> Character:
        """The component of ``chi`` on the i-th summand."""
        g = self.summands[i]
        return Character(
            g,
            [int(evaluate(chi, h) * d) for h, d in zip(self.injections[i], g.invariant_factors)],
        )

    def extend(self, parts: Sequence[Character]) -> Character:
        """The character whose components are ``parts``."""
        flat = [Fraction(c, d) for ch in parts for c, d in zip(ch.coords, ch.group.invariant_factors)]
        coords = []
        for lift, d in zip(self.coker.lifts, self.group.invariant_factors):
            phase = sum((a * x for a, x in zip(lift, flat)), Fraction(0)) % 1
            coords.append(int(phase * d))
        return Character(self.group, coords)


def direct_sum_groups(groups: Sequence[FiniteAbelianGroup]) -> DirectSum:
    orders = [d for g in groups for d in g.invariant_factors]
    m = len(orders)
    if m == 0:
        coker = cokernel([[1]])
        trivial = FiniteAbelianGroup(())
        return DirectSum(trivial, tuple(groups), tuple(() for _ in groups), coker)
    coker = cokernel([[orders[i] if i == j else 0 for j in range(m)] for i in range(m)])
    images = [coker.project([int(i == j) for j in range(m)]) for i in range(m)]
    inj, pos = [], 0
    for g in groups:
        inj.append(tuple(images[pos : pos + g.rank]))
        pos += g.rank
    return DirectSum(coker.group, tuple(groups), tuple(inj), coker)
