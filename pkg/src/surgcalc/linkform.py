"""Linking forms on finite abelian groups.

A :class:`LinkingForm` stores the pairing of the invariant-factor generators
as rationals mod 1. Decomposition into the elementary blocks ``A_p^k(q)``,
``E_0^k`` and ``E_1^k`` works one prime at a time by orthogonal splitting;
every decomposition carries an explicit basis so it can be certified
without trusting the splitting logic.
"""

from __future__ import annotations

import itertools
import json
import os
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, prod
from typing import Iterable, Optional, Sequence

from sympy import factorint, isprime

from .abgroup import FiniteAbelianGroup, GroupElement, GroupMismatch, cokernel
from .intlinalg import smith_normal_form

DEFAULT_MAX_ORDER = 4096


class DegenerateForm(ValueError):
    pass


class InvalidBlock(ValueError):
    pass


class ZeroClass(ValueError):
    pass


class TooLarge(ValueError):
    pass


class SearchExhausted(RuntimeError):
    pass


def max_order_bound() -> int:
    return int(os.environ.get("SURGCALC_MAX_ORDER", DEFAULT_MAX_ORDER))


def _frac(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class LinkingForm:
    group: FiniteAbelianGroup
    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        k = self.group.rank
        gram = tuple(tuple(_frac(x) % 1 for x in row) for row in self.gram)
        if len(gram) != k or any(len(row) != k for row in gram):
            raise ValueError("gram size does not match group rank")
        object.__setattr__(self, "gram", gram)
        d = self.group.invariant_factors
        for i in range(k):
            for j in range(k):
                if gram[i][j] != gram[j][i]:
                    raise ValueError("gram matrix is not symmetric")
                if (gram[i][j] * d[i]).denominator != 1:
                    raise ValueError(f"pairing {gram[i][j]} incompatible with Z/{d[i]}")
        if not _is_nondegenerate(self.group, gram):
            raise DegenerateForm("pairing is degenerate")

    # -- construction -------------------------------------------------------

    @classmethod
    def from_cyclic_sum(
        cls, orders: Sequence[int], gram: Sequence[Sequence]
    ) -> tuple["LinkingForm", list[GroupElement]]:
        """Form on ``Z/n_1 + ... + Z/n_m`` given on the cyclic generators.

        Returns the form on the invariant-factor group and the images of the
        original generators.
        """
        m = len(orders)
        if m == 0:
            return cls(FiniteAbelianGroup(()), ()), []
        diag = [[orders[i] if i == j else 0 for j in range(m)] for i in range(m)]
        coker = cokernel(diag)
        gram_q = [[_frac(x) for x in row] for row in gram]
        new = [
            [
                sum(
                    a * gram_q[i][j] * b
                    for i, a in enumerate(u)
                    if a
                    for j, b in enumerate(w)
                    if b
                )
                for w in coker.lifts
            ]
            for u in coker.lifts
        ]
        form = cls(coker.group, new)
        images = [coker.project([int(i == j) for j in range(m)]) for i in range(m)]
        return form, images

    # -- evaluation ---------------------------------------------------------

    @property
    def order(self) -> int:
        return self.group.order

    def eval(self, x: GroupElement, y: GroupElement) -> Fraction:
        if x.group != self.group or y.group != self.group:
            raise GroupMismatch(f"elements not in {self.group}")
        total = Fraction(0)
        for i, a in enumerate(x.coords):
            if a:
                row = self.gram[i]
                for j, b in enumerate(y.coords):
                    if b:
                        total += a * b * row[j]
        return total % 1

    def self_link(self, x: GroupElement) -> Fraction:
        return self.eval(x, x)

    def __str__(self) -> str:
        rows = "; ".join(" ".join(str(x) for x in row) for row in self.gram)
        return f"LinkingForm({self.group}, [{rows}])"

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "factors": list(self.group.invariant_factors),
            "gram": [[str(x) for x in row] for row in self.gram],
        }

    @classmethod
    def from_json(cls, data) -> "LinkingForm":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(FiniteAbelianGroup(tuple(data["factors"])), data["gram"])


def _is_nondegenerate(group: FiniteAbelianGroup, gram) -> bool:
    """The adjoint ``H -> H^#`` is injective (equivalently bijective)."""
    k = group.rank
    if k == 0:
        return True
    exp = group.exponent
    cols = [[int(gram[i][j] * exp) for j in range(k)] for i in range(k)]
    cols += [[exp * int(i == j) for i in range(k)] for j in range(k)]
    mat = [[c[r] for c in cols] for r in range(k)]
    index = prod(smith_normal_form(mat).diagonal)
    return exp**k // index == group.order


# ---------------------------------------------------------------------------
# elementary blocks


@dataclass(frozen=True)
class FormBlock:
    kind: str  # "A", "E0" or "E1"
    p: int
    k: int
    q: int = 1

    def __post_init__(self):
        if self.kind not in ("A", "E0", "E1"):
            raise InvalidBlock(f"unknown block kind {self.kind!r}")
        if self.k < 1:
            raise InvalidBlock("exponent must be >= 1")
        if not isprime(self.p):
            raise InvalidBlock(f"{self.p} is not prime")
        if self.kind == "A":
            if gcd(self.p, self.q) != 1:
                raise InvalidBlock(f"gcd({self.p}, {self.q}) != 1")
            object.__setattr__(self, "q", self.q % self.p**self.k)
        else:
            if self.p != 2:
                raise InvalidBlock("E blocks live on 2-groups")
            if self.kind == "E1" and self.k < 2:
                raise InvalidBlock("E1 requires k >= 2")
            object.__setattr__(self, "q", 1)

    @property
    def order(self) -> int:
        return self.p**self.k * (1 if self.kind == "A" else self.p**self.k)

    @property
    def complexity(self) -> int:
        if self.kind == "A":
            return self.p ** (self.k + 1)
        return 2 ** (2 * self.k + 2)

    def cyclic_orders(self) -> list[int]:
        n = self.p**self.k
        return [n] if self.kind == "A" else [n, n]

    def gram(self) -> list[list[Fraction]]:
        n = self.p**self.k
        if self.kind == "A":
            return [[Fraction(self.q, n)]]
        h = Fraction(1, n)
        d = Fraction(0) if self.kind == "E0" else Fraction(2, n)
        return [[d, h], [h, d]]

    def __str__(self) -> str:
        if self.kind == "A":
            return f"A_{self.p}^{self.k}({self.q})"
        return f"{self.kind[0]}_{self.kind[1]}^{self.k}"


def block_form(*blocks: FormBlock) -> LinkingForm:
    """Orthogonal sum of elementary blocks as a single form."""
    return block_sum_with_images(blocks)[0]


def block_sum_with_images(blocks: Sequence[FormBlock]) -> tuple[LinkingForm, list[list[GroupElement]]]:
    orders: list[int] = []
    grams: list[list[list[Fraction]]] = []
    for b in blocks:
        orders += b.cyclic_orders()
        grams.append(b.gram())
    form, images = from_orthogonal(orders, grams)
    out, pos = [], 0
    for b in blocks:
        r = len(b.cyclic_orders())
        out.append(images[pos : pos + r])
        pos += r
    return form, out


def from_orthogonal(orders, grams) -> tuple[LinkingForm, list[GroupElement]]:
    m = len(orders)
    full = [[Fraction(0)] * m for _ in range(m)]
    pos = 0
    for g in grams:
        for i, row in enumerate(g):
            for j, x in enumerate(row):
                full[pos + i][pos + j] = _frac(x)
        pos += len(g)
    return LinkingForm.from_cyclic_sum(orders, full)


def direct_sum(*forms: LinkingForm) -> LinkingForm:
    return direct_sum_with_maps(forms)[0]


def direct_sum_with_maps(forms: Sequence[LinkingForm]):
    """Orthogonal sum plus, for each summand, the images of its generators."""
    orders: list[int] = []
    grams = []
    for f in forms:
        orders += list(f.group.invariant_factors)
        grams.append([list(r) for r in f.gram])
    form, images = from_orthogonal(orders, grams)
    out, pos = [], 0
    for f in forms:
        out.append(images[pos : pos + f.group.rank])
        pos += f.group.rank
    return form, out


# ---------------------------------------------------------------------------
# decomposition


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def primes_of(f: LinkingForm) -> list[int]:
    return sorted(factorint(f.order)) if f.order > 1 else []


def p_part_generators(f: LinkingForm, p: int) -> list[GroupElement]:
    gens = []
    for g, d in zip(f.group.generators(), f.group.invariant_factors):
        v = _vp(d, p)
        if v:
            gens.append(g * (d // p**v))
    return gens


@dataclass(frozen=True)
class DecomposedBlock:
    block: FormBlock
    basis: tuple[GroupElement, ...]


def _level(f, x, y, n) -> int:
    """``n * lk(x, y)`` as an integer mod n."""
    v = f.eval(x, y) * n
    assert v.denominator == 1
    return int(v) % n


def _split(f: LinkingForm, gens: list[GroupElement], p: int) -> list[DecomposedBlock]:
    """Greedy orthogonal splitting of the subgroup spanned by ``gens``."""
    out: list[DecomposedBlock] = []
    gens = [g for g in gens if not g.is_zero()]
    while gens:
        k = max(_vp(g.order, p) for g in gens)
        n = p**k
        diag = [(_level(f, g, g, n) % p, i) for i, g in enumerate(gens)]
        pick = next((i for r, i in diag if r), None)
        x = None
        if pick is not None:
            x = gens[pick]
        else:
            pair = next(
                (
                    (i, j)
                    for i, j in itertools.combinations(range(len(gens)), 2)
                    if _level(f, gens[i], gens[j], n) % p
                ),
                None,
            )
            if pair is None:
                raise DegenerateForm("no nondegenerate pair at top level")
            if p != 2:
                x = gens[pair[0]] + gens[pair[1]]
            else:
                xe, ye = gens[pair[0]], gens[pair[1]]
        if x is not None:
            u = _level(f, x, x, n)
            uinv = pow(u, -1, n)
            out.append(DecomposedBlock(FormBlock("A", p, k, u), (x,)))
            gens = [g - x * (_level(f, x, g, n) * uinv % n) for g in gens]
        else:
            a, b, c = _level(f, xe, xe, n), _level(f, xe, ye, n), _level(f, ye, ye, n)
            det_inv = pow((a * c - b * b) % n, -1, n)
            inv = [[c * det_inv % n, -b * det_inv % n], [-b * det_inv % n, a * det_inv % n]]
            block, basis = _normalize_e(f, xe, ye, k)
            out.append(DecomposedBlock(block, basis))
            new = []
            for g in gens:
                v1, v2 = _level(f, xe, g, n), _level(f, ye, g, n)
                s = (inv[0][0] * v1 + inv[0][1] * v2) % n
                t = (inv[1][0] * v1 + inv[1][1] * v2) % n
                new.append(g - xe * s - ye * t)
            gens = new
        gens = [g for g in gens if not g.is_zero()]
    return out


def _normalize_e(f, x, y, k) -> tuple[FormBlock, tuple[GroupElement, GroupElement]]:
    """Find a basis of <x, y> realising E_0^k or E_1^k exactly."""
    n = 2**k
    a, b, c = _level(f, x, x, n), _level(f, x, y, n), _level(f, y, y, n)
    if k >= 2 and (a // 2) % 2 and (c // 2) % 2:
        kind, diag = "E1", 2 % n
    else:
        kind, diag = "E0", 0

    def q(i, j):
        return (i * i * a + 2 * i * j * b + j * j * c) % n

    for i, j in itertools.product(range(n), repeat=2):
        if (i % 2 or j % 2) and q(i, j) == diag:
            # pairing with (s, t): s*(i a + j b) + t*(i b + j c)
            ra, rb = (i * a + j * b) % n, (i * b + j * c) % n
            for s, t in itertools.product(range(n), repeat=2):
                if (s * ra + t * rb) % n == 1 and q(s, t) == diag:
                    return FormBlock(kind, 2, k), (x * i + y * j, x * s + y * t)
    raise DegenerateForm("could not normalise a 2x2 block")


def _merge_e_blocks(f: LinkingForm, blocks: list[DecomposedBlock]) -> list[DecomposedBlock]:
    """Trade ``A + E`` at a common level for three A blocks wherever possible."""
    blocks = list(blocks)
    while True:
        hit = None
        for i, e in enumerate(blocks):
            if e.block.kind == "A" or e.block.p != 2:
                continue
            j = next(
                (
                    j
                    for j, a in enumerate(blocks)
                    if a.block.kind == "A" and a.block.p == 2 and a.block.k == e.block.k
                ),
                None,
            )
            if j is not None:
                hit = (i, j)
                break
        if hit is None:
            return blocks
        i, j = hit
        (z,) = blocks[j].basis
        x, y = blocks[i].basis
        rest = [b for t, b in enumerate(blocks) if t not in hit]
        blocks = rest + _split(f, [z + x, z + y, z + x + y], 2)


def decompose_with_basis(f: LinkingForm) -> list[DecomposedBlock]:
    """Orthogonal block decomposition with an explicit basis for each block.

    Blocks are ordered by prime, then by exponent.
    """
    out: list[DecomposedBlock] = []
    for p in primes_of(f):
        blocks = _split(f, p_part_generators(f, p), p)
        if p == 2:
            blocks = _merge_e_blocks(f, blocks)
        blocks.sort(key=lambda b: (b.block.k, b.block.kind, b.block.q))
        out += blocks
    return out


def decompose(f: LinkingForm) -> list[FormBlock]:
    return [b.block for b in decompose_with_basis(f)]


def certify_decomposition(f: LinkingForm, blocks: Sequence[DecomposedBlock]) -> bool:
    """Check that the bases realise the block grams and fill the whole group.

    The pairing-preserving map from the block sum is injective because the
    block sum is nondegenerate, so equal orders make it an isomorphism.
    """
    if prod(b.block.order for b in blocks) != f.order:
        return False
    for b in blocks:
        for e, n in zip(b.basis, b.block.cyclic_orders()):
            if e.order != n:
                return False
    for b1 in blocks:
        g = b1.block.gram()
        for i, x in enumerate(b1.basis):
            for j, y in enumerate(b1.basis):
                if f.eval(x, y) != g[i][j] % 1:
                    return False
    for s, b1 in enumerate(blocks):
        for b2 in blocks[s + 1 :]:
            if any(f.eval(x, y) for x in b1.basis for y in b2.basis):
                return False
    return True


def complexity(f: LinkingForm) -> int:
    return prod(b.complexity for b in decompose(f))


# ---------------------------------------------------------------------------
# knot classes


@dataclass(frozen=True)
class KnotClassReport:
    order: int
    self_link: Fraction
    numerator: int
    m0: int
    kind: str  # "Good", "Bad" or "MildlyBad"
    complement_order: int

    @property
    def good(self) -> bool:
        return self.kind == "Good"


def block_coordinates(f: LinkingForm, c: GroupElement, blocks: Sequence[DecomposedBlock]) -> list[tuple[int, ...]]:
    """Coordinates of ``c`` with respect to an orthogonal block basis."""
    out = []
    for b in blocks:
        n = b.block.p**b.block.k
        if b.block.kind == "A":
            (x,) = b.basis
            u = _level(f, x, x, n)
            out.append((_level(f, x, c, n) * pow(u, -1, n) % n,))
        else:
            x, y = b.basis
            a, bb, cc = _level(f, x, x, n), _level(f, x, y, n), _level(f, y, y, n)
            det_inv = pow((a * cc - bb * bb) % n, -1, n)
            v1, v2 = _level(f, x, c, n), _level(f, y, c, n)
            out.append(((cc * v1 - bb * v2) * det_inv % n, (a * v2 - bb * v1) * det_inv % n))
    return out


def is_mildly_bad(f: LinkingForm, c: GroupElement, blocks: Sequence[DecomposedBlock]) -> bool:
    """Bad class living in two A-summands of one prime, generating the smaller one."""
    if f.self_link(c) != 0 or c.is_zero():
        return False
    coords = block_coordinates(f, c, blocks)
    support = [i for i, co in enumerate(coords) if any(co)]
    if len(support) != 2:
        return False
    b1, b2 = (blocks[i].block for i in support)
    if b1.kind != "A" or b2.kind != "A" or b1.p != b2.p:
        return False
    small = min(b1.k, b2.k)
    return any(
        blocks[i].block.k == small and coords[i][0] % blocks[i].block.p for i in support
    )


def classify_class(
    f: LinkingForm, c: GroupElement, context: Optional[Sequence[DecomposedBlock]] = None
) -> KnotClassReport:
    if c.group != f.group:
        raise GroupMismatch(f"{c.group} vs {f.group}")
    if c.is_zero():
        raise ZeroClass("the zero class carries no knot")
    r = c.order
    sl = f.self_link(c)
    num = int(sl * r)
    m0 = gcd(num, r)
    if sl:
        kind = "Good"
    else:
        if context is None:
            context = decompose_with_basis(f)
        kind = "MildlyBad" if is_mildly_bad(f, c, context) else "Bad"
    return KnotClassReport(r, sl, num, m0, kind, f.order // r)


# ---------------------------------------------------------------------------
# isomorphism testing


def _profile(f: LinkingForm) -> Counter:
    return Counter((h.order, f.self_link(h)) for h in f.group.elements())


def is_isomorphic(
    f1: LinkingForm, f2: LinkingForm, max_order: Optional[int] = None
) -> Optional[list[GroupElement]]:
    """Exhaustive search for a pairing-preserving isomorphism.

    Returns the images in ``f2`` of the generators of ``f1``, or None.
    """
    bound = max_order_bound() if max_order is None else max_order
    if f1.order > bound or f2.order > bound:
        raise TooLarge(f"order {max(f1.order, f2.order)} exceeds bound {bound}")
    if f1.group != f2.group:
        return None
    if _profile(f1) != _profile(f2):
        return None
    gens = f1.group.generators()
    buckets: dict[tuple[int, Fraction], list[GroupElement]] = {}
    for h in f2.group.elements():
        buckets.setdefault((h.order, f2.self_link(h)), []).append(h)
    targets = [(g.order, f1.self_link(g)) for g in gens]

    images: list[GroupElement] = []

    def extend(i: int) -> bool:
        if i == len(gens):
            return True
        for h in buckets.get(targets[i], ()):
            if all(f2.eval(h, images[j]) == f1.eval(gens[i], gens[j]) for j in range(i)):
                images.append(h)
                if extend(i + 1):
                    return True
                images.pop()
        return False

    return list(images) if extend(0) else None


def apply_isomorphism(images: Sequence[GroupElement], x: GroupElement) -> GroupElement:
    out = images[0].group.zero
    for c, h in zip(x.coords, images):
        out = out + h * c
    return out


# ---------------------------------------------------------------------------
# stabilisation


def two_part(f: LinkingForm) -> list[DecomposedBlock]:
    return [b for b in decompose_with_basis(f) if b.block.p == 2]


def stabilize(f: LinkingForm, max_blocks: int = 8) -> list[FormBlock]:
    """A-blocks ``S`` such that the 2-part of ``f`` plus ``S`` splits into A's only.

    Breadth-first over multisets of ``A_2^j(1)``, smallest first; a candidate
    is accepted when the greedy decomposition of the sum (which prefers A
    blocks and certifies itself) contains no E block.
    """
    blocks = [b.block for b in two_part(f)]
    if all(b.kind == "A" for b in blocks):
        return []
    levels = sorted({b.k for b in blocks})
    pool = [FormBlock("A", 2, j, 1) for j in range(1, max(levels) + 1)]
    for size in range(1, max_blocks + 1):
        for extra in itertools.combinations_with_replacement(pool, size):
            total = block_form(*blocks, *extra)
            dec = decompose_with_basis(total)
            if all(d.block.kind == "A" for d in dec):
                assert certify_decomposition(total, dec)
                return list(extra)
    raise SearchExhausted(f"no stabilisation with at most {max_blocks} blocks")


def blocks_of(forms: Iterable[FormBlock]) -> str:
    return " + ".join(str(b) for b in forms) or "0"
