"""Dedekind sums, Casson-Walker invariants, torsion tables and the surgery residual.

Conventions (see the ledger):

* ``CW(L(p, q)) = -p s(q, p) / 2``, the paper's surgery formula applied to the
  unknot in S^3.
* An :class:`InvariantTable` holds the Fourier transform of the modified
  torsion ``tau^0``. At the trivial character the value is exactly
  ``|H| CW / 2`` (the Lescop identity), stored as a Fraction. Elsewhere it
  is a complex double.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence, Union

from .abgroup import (
    Character,
    FiniteAbelianGroup,
    all_characters,
    direct_sum_groups,
    phase_to_complex,
)

Number = Union[Fraction, complex]

#: tolerance for the reality check of tables
REAL_TOL = 1e-10


class NotCoprime(ValueError):
    pass


class BadParams(ValueError):
    pass


class NoRealSymmetrization(ArithmeticError):
    pass


class BadContext(ValueError):
    pass


class IncompatibleTables(ValueError):
    pass


def _check_coprime(a: int, b: int):
    if math.gcd(a, b) != 1:
        raise NotCoprime(f"gcd({a}, {b}) != 1")


# ---------------------------------------------------------------------------
# scalars


def sawtooth(x: Fraction) -> Fraction:
    """``((x))``: ``x - floor(x) - 1/2`` off the integers, 0 on them."""
    x = Fraction(x)
    if x.denominator == 1:
        return Fraction(0)
    return x - math.floor(x) - Fraction(1, 2)


def dedekind_sum(q: int, p: int) -> Fraction:
    """``s(q, p) = sum_{k=1}^{p-1} ((k/p)) ((kq/p))``.

    For ``p < 0`` the sum runs over ``k mod |p|``; both sawtooth factors
    change sign, so ``s(q, -p) = s(q, p)``.
    """
    q, p = int(q), int(p)
    if p == 0:
        raise BadParams("s(q, 0) is undefined")
    _check_coprime(q, p)
    n = abs(p)
    # ((k/n)) = k/n - 1/2 for 0 < k < n; accumulate over a common denominator
    total = 0
    for k in range(1, n):
        r = (k * q) % n
        if r:
            total += (2 * k - n) * (2 * r - n)
    return Fraction(total, 4 * n * n)


def cw_surgery(p: int, q: int, m0: int, g_order: int, cw_base, alexander_dd1) -> Fraction:
    """The paper's CW surgery formula, taken literally.

    ``p CW_{1/0} + (q/2) Delta'' + |G| (q (m0^2 - 1) / (12 m0) - p m0 s(q, p) / 2)``.
    """
    p, q, m0, g_order = int(p), int(q), int(m0), int(g_order)
    if p == 0:
        raise BadParams("p = 0 is not a rational homology sphere surgery")
    if m0 < 1 or g_order < 1:
        raise BadParams("m0 and |G| must be positive")
    _check_coprime(p, q)
    return (
        p * Fraction(cw_base)
        + Fraction(q, 2) * Fraction(alexander_dd1)
        + g_order * (Fraction(q * (m0 * m0 - 1), 12 * m0) - Fraction(p * m0, 2) * dedekind_sum(q, p))
    )


def cw_lens(p: int, q: int) -> Fraction:
    """``CW(L(p, q)) = -p s(q, p) / 2``."""
    if int(p) < 1:
        raise BadParams("lens spaces need p >= 1")
    return -Fraction(int(p), 2) * dedekind_sum(q, p)


def cw_chain(terms: Sequence[int]) -> Fraction:
    """CW of the lens space presented by the integral chain ``terms``.

    The manifold is built one integral surgery at a time from the end of the
    chain. The last component is the unknot with framing ``a_m``, whose CW
    comes from :func:`cw_surgery`. Adding ``a_j`` in front turns
    ``L(q, q2)`` into ``L(p, q)`` with ``p = a_j q - q2``. Dedekind
    reciprocity and periodicity then give
    ``s(q, p) = s(q2, q) - 1/4 + (p/q + q/p + 1/(pq)) / 12``.

    The terms after the first must be ``>= 2`` (the shape produced by
    :func:`surgcalc.surgery.lens_chain` for ``0 < q < p``).
    """
    terms = [int(a) for a in terms]
    if not terms:
        raise BadParams("empty chain")
    if any(a < 2 for a in terms[1:]) or terms[0] < 1:
        raise BadParams("chain terms must be >= 2 after the first, first term >= 1")
    a_m = terms[-1]
    cw = cw_surgery(a_m, 1, 1, 1, 0, 0)
    p, q = a_m, 1
    s = -2 * cw / p
    for a in reversed(terms[:-1]):
        q2 = q
        q, p = p, a * p - q2
        # s(q, p) from s(q2, q): reciprocity, then s(p, q) = s(-q2, q) = -s(q2, q)
        s = s - Fraction(1, 4) + (Fraction(p, q) + Fraction(q, p) + Fraction(1, p * q)) / 12
        cw = -Fraction(p, 2) * s
    return cw


# ---------------------------------------------------------------------------
# torsion tables


@dataclass(frozen=True)
class InvariantTable:
    """Fourier values of ``tau^0_M`` on every character of ``H``."""

    group: FiniteAbelianGroup
    values: Mapping[Character, Number]
    cw: Fraction
    alexander_dd1: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "cw", Fraction(self.cw))
        vals = dict(self.values)
        chars = list(all_characters(self.group))
        if set(vals) != set(chars):
            raise BadParams("table must give a value at every character")
        trivial = self.group.trivial_character
        expected = self.group.order * self.cw / 2
        if Fraction(vals[trivial]) != expected:
            raise BadParams(f"trivial-character value {vals[trivial]} != |H| cw / 2 = {expected}")
        vals[trivial] = expected
        for chi in chars:
            if chi != trivial:
                vals[chi] = complex(vals[chi])
                if abs(vals[chi].imag) > REAL_TOL:
                    raise NoRealSymmetrization(f"value at {chi} is not real: {vals[chi]}")
        object.__setattr__(self, "values", vals)

    def __hash__(self):
        return hash((self.group, self.cw))

    @property
    def order(self) -> int:
        return self.group.order

    def __getitem__(self, chi: Character) -> Number:
        return self.values[chi]

    def to_json(self) -> dict:
        rows = []
        for chi in all_characters(self.group):
            v = complex(self.values[chi])
            rows.append({"chi": list(chi.coords), "re": v.real, "im": v.imag})
        out = {"factors": list(self.group.invariant_factors), "cw": str(self.cw), "values": rows}
        if self.alexander_dd1 is not None:
            out["dd1"] = str(self.alexander_dd1)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "InvariantTable":
        if isinstance(data, str):
            data = json.loads(data)
        group = FiniteAbelianGroup(tuple(data["factors"]))
        cw = Fraction(data["cw"])
        values: dict[Character, Number] = {}
        for row in data["values"]:
            chi = group.character(row["chi"])
            values[chi] = complex(row["re"], row["im"])
        values[group.trivial_character] = group.order * cw / 2
        dd1 = data.get("dd1")
        return cls(group, values, cw, None if dd1 is None else Fraction(dd1))


def s3_table() -> InvariantTable:
    g = FiniteAbelianGroup(())
    return InvariantTable(g, {g.trivial_character: Fraction(0)}, Fraction(0))


def torsion_lens(p: int, q: int) -> InvariantTable:
    """``tau^0`` of ``L(p, q)``: ``zeta^a / ((zeta - 1)(zeta^qbar - 1))`` off the trivial character.

    ``qbar`` is the inverse of ``q`` mod ``p`` in ``[1, p)`` and ``a`` is
    ``(1 + qbar) / 2`` computed on the even representative of ``1 + qbar``
    (``1 + qbar`` or ``1 + qbar + p``). Any solution of ``2a = 1 + qbar``
    makes the values real; this choice reproduces the spec's L(2,1) value.
    """
    p, q = int(p), int(q)
    if p < 2:
        raise BadParams("torsion_lens needs p >= 2")
    _check_coprime(p, q)
    qbar = pow(q, -1, p)
    num = 1 + qbar
    if num % 2:
        num += p
        if num % 2:
            raise NoRealSymmetrization(f"no a with 2a = 1 + {qbar} mod {p}")
    a = num // 2
    group = FiniteAbelianGroup((p,))
    cw = cw_lens(p, q)
    values: dict[Character, Number] = {}
    for chi in all_characters(group):
        j = chi.coords[0]
        if j == 0:
            values[chi] = p * cw / 2
            continue
        zeta = phase_to_complex(Fraction(j, p))
        zeta_a = phase_to_complex(Fraction(j * a % p, p))
        zeta_qbar = phase_to_complex(Fraction(j * qbar % p, p))
        v = zeta_a / ((zeta - 1) * (zeta_qbar - 1))
        if abs(v.imag) > REAL_TOL:
            raise NoRealSymmetrization(f"L({p},{q}) value at chi^{j} is {v}")
        values[chi] = complex(v.real, 0.0)
    return InvariantTable(group, values, cw)


@dataclass(frozen=True)
class ConnectedSum:
    """A connected-sum table together with its summand structure."""

    table: InvariantTable
    structure: object  # abgroup.DirectSum


def connected_sum_with_structure(tables: Sequence[InvariantTable]) -> ConnectedSum:
    """:func:`torsion_connected_sum` plus the direct-sum maps of ``H``.

    At a character nontrivial on at least two summands the value is 0, since
    the twisted chain complex of the sum is not acyclic. At a character
    nontrivial on exactly one summand ``i`` the complex is acyclic and the
    value is ``(prod_{j != i} |H_j|) * tau^0_i(chi_i)``. This is the value
    the torsion surgery theorem forces (see the ledger).
    """
    if not tables:
        raise BadParams("need at least one table")
    ds = direct_sum_groups([t.group for t in tables])
    cw = sum((t.cw for t in tables), Fraction(0))
    orders = [t.order for t in tables]
    values: dict[Character, Number] = {}
    for chi in all_characters(ds.group):
        if chi.is_trivial():
            values[chi] = ds.group.order * cw / 2
            continue
        parts = [ds.restrict(chi, i) for i in range(len(tables))]
        live = [i for i, c in enumerate(parts) if not c.is_trivial()]
        if len(live) == 1:
            i = live[0]
            scale = math.prod(o for j, o in enumerate(orders) if j != i)
            values[chi] = complex(scale * complex(tables[i][parts[i]]).real, 0.0)
        else:
            values[chi] = 0j
    return ConnectedSum(InvariantTable(ds.group, values, cw), ds)


def torsion_connected_sum(tables: Sequence[InvariantTable]) -> InvariantTable:
    """``tau^0`` of a connected sum; ``cw`` adds up."""
    return connected_sum_with_structure(tables).table


# ---------------------------------------------------------------------------
# surgery formula


@dataclass(frozen=True)
class CorrectionContext:
    """Arithmetic type of a surgery together with the power ``j`` of ``chi_0``."""

    p: int
    q: int
    m0: int
    g_order: int
    j: int = 0
    cw_base: Fraction = Fraction(0)
    alexander_dd1: Fraction = Fraction(0)

    def __post_init__(self):
        if self.p == 0 or math.gcd(self.p, self.q) != 1:
            raise BadContext(f"p={self.p}, q={self.q} not coprime with p != 0")
        if self.m0 < 1 or self.g_order < 1:
            raise BadContext("m0 and |G| must be positive")
        if not 0 <= self.j < self.m0:
            raise BadContext(f"j={self.j} outside Z/{self.m0}")
        object.__setattr__(self, "cw_base", Fraction(self.cw_base))
        object.__setattr__(self, "alexander_dd1", Fraction(self.alexander_dd1))


def surgery_defect(p: int, q: int, m0: int) -> Fraction:
    """``Y = q (m0^2 - 1) / (12 m0) - p m0 s(q, p) / 2``, the bracket of the CW formula."""
    return Fraction(q * (m0 * m0 - 1), 12 * m0) - Fraction(p * m0, 2) * dedekind_sum(q, p)


def trivial_character_ledger(ctx: CorrectionContext) -> Fraction:
    """``|G| G_{p,q,m0}(0)``, reconstructed as ``|H_{p/q}| Y / 2``.

    This is ``tau^0_{p/q}(1) - p tau^0_{1/0}(1) - q tau^0_{0/1}(1)`` once the
    Lescop identity ``tau^0(1) = |H| CW / 2`` is applied to fillings whose
    tables have additive ``cw``. The literal ``p CW_{1/0}`` recursion of
    :func:`cw_surgery` is not compatible with additive ``cw``; see the ledger.
    Requires ``p > 0``, the sign of the slope being carried by ``q``.
    """
    if ctx.p < 0:
        raise BadContext("normalize the slope so that p > 0")
    h_pq = ctx.p * ctx.m0 * ctx.g_order
    return Fraction(h_pq, 2) * surgery_defect(ctx.p, ctx.q, ctx.m0)


def correction_term(ctx: CorrectionContext) -> Number:
    """The ``|G| G_{p,q,m0}(j)`` term of eq. (surgtors).

    * ``j != 0``: ``(|G|/m0) rho^j / (1 - rho^j)^2`` with ``rho = exp(2 pi i/m0)``.
    * ``m0 = 1``: exactly 0 (the paper's ``kappa_{p,q,1} = 0``).
    * ``j = 0``, ``m0 > 1``: the trivial-character ledger, a Fraction.

    The residual at the trivial character always uses
    :func:`trivial_character_ledger` directly, so the ``m0 = 1`` convention
    here does not hide anything there.
    """
    if ctx.m0 == 1:
        return Fraction(0)
    if ctx.j == 0:
        return trivial_character_ledger(ctx)
    rho = phase_to_complex(Fraction(ctx.j, ctx.m0))
    return ctx.g_order / ctx.m0 * rho / (1 - rho) ** 2


@dataclass(frozen=True)
class SurgeryFamily:
    """Everything :func:`surgery_residual` needs beyond the two tables.

    ``g`` is the group ``G``. ``embed_pq`` and ``embed_10`` send a character
    of ``G`` to the corresponding character of ``H_{p/q}`` and ``H_{1/0}``
    (Lemma 3.1). ``j_of`` gives the power of ``chi_0`` on the distinguished
    class; it defaults to 0. ``values_01`` gives ``tau^0_{0/1}`` at nontrivial
    characters of ``G`` and defaults to 0.
    """

    g: FiniteAbelianGroup
    embed_pq: Callable[[Character], Character]
    embed_10: Callable[[Character], Character]
    j_of: Callable[[Character], int] = field(default=lambda chi: 0)
    values_01: Optional[Callable[[Character], complex]] = None


def surgery_residual(
    table_pq: InvariantTable,
    table_10: InvariantTable,
    table_01_dd1,
    ctx: CorrectionContext,
    family: SurgeryFamily,
) -> float:
    """Max over characters of ``G`` of the eq. (surgtors) residual modulus.

    At the trivial character the residual is an exact rational:
    ``tau^0_{p/q}(1) - p tau^0_{1/0}(1) - q Delta''/2 - |H_{p/q}| Y / 2``.
    The slope must be normalized with ``p > 0``.
    """
    dd1 = Fraction(table_01_dd1)
    if ctx.p < 0:
        raise BadContext("normalize the slope so that p > 0")
    if family.g.order != ctx.g_order:
        raise IncompatibleTables(f"|G| = {family.g.order} but ctx says {ctx.g_order}")
    if table_pq.order != abs(ctx.p) * ctx.m0 * ctx.g_order:
        raise IncompatibleTables(
            f"|H_p/q| = {table_pq.order} != |p| m0 |G| = {abs(ctx.p) * ctx.m0 * ctx.g_order}"
        )
    if table_10.order != ctx.m0 * ctx.g_order:
        raise IncompatibleTables(f"|H_1/0| = {table_10.order} != m0 |G| = {ctx.m0 * ctx.g_order}")
    worst = 0.0
    for chi in all_characters(family.g):
        if chi.is_trivial():
            r = (
                table_pq[table_pq.group.trivial_character]
                - ctx.p * table_10[table_10.group.trivial_character]
                - ctx.q * dd1 / 2
                - trivial_character_ledger(ctx)
            )
            worst = max(worst, abs(float(r)))
            continue
        j = family.j_of(chi) % ctx.m0
        sub = CorrectionContext(ctx.p, ctx.q, ctx.m0, ctx.g_order, j, table_10.cw, dd1)
        corr = complex(correction_term(sub)) if j else 0j
        v01 = complex(family.values_01(chi)) if family.values_01 else 0j
        r = (
            complex(table_pq[family.embed_pq(chi)])
            - ctx.p * complex(table_10[family.embed_10(chi)])
            - ctx.q * v01
            - corr
        )
        worst = max(worst, abs(r))
    return worst


def _normalize_slope(p: int, q: int) -> tuple[int, int]:
    return (p, q) if p > 0 else (-p, -q)


def unknot_family(p: int, q: int):
    """Surgery ``p/q`` on the unknot in S^3: returns (table_pq, table_10, dd1, ctx, family).

    ``M_{p/q} = L(|p|, sign(p) q)``.
    """
    p, q = _normalize_slope(p, q)
    g = FiniteAbelianGroup(())
    ctx = CorrectionContext(p, q, 1, 1)
    family = SurgeryFamily(g, lambda chi: table_pq.group.trivial_character, lambda chi: chi)
    table_pq = torsion_lens(p, q) if p >= 2 else s3_table()
    return table_pq, s3_table(), Fraction(0), ctx, family


def split_family(p: int, q: int, a: int = 3, b: int = 1):
    """Surgery ``p/q`` on an unknot split from ``L(a, b)``.

    Here ``N`` is ``L(a, b)`` minus a ball, boundary-summed with the unknot
    complement. Then ``G = Z/a``, ``m0 = 1``, ``M_{p/q} = L(a,b) # L(p,q)``,
    ``M_{1/0} = L(a,b)`` and ``Delta''`` of ``M_{0/1}`` is 0.
    """
    p, q = _normalize_slope(p, q)
    if p < 2:
        raise BadParams("split family needs |p| >= 2")
    base = torsion_lens(a, b)
    cs = connected_sum_with_structure([base, torsion_lens(p, q)])
    ds = cs.structure
    trivial_p = FiniteAbelianGroup((p,)).trivial_character
    ctx = CorrectionContext(p, q, 1, a)
    family = SurgeryFamily(
        base.group,
        lambda chi: ds.extend([chi, trivial_p]),
        lambda chi: chi,
    )
    return cs.table, base, Fraction(0), ctx, family


__all__ = [
    "NotCoprime",
    "BadParams",
    "NoRealSymmetrization",
    "BadContext",
    "IncompatibleTables",
    "sawtooth",
    "dedekind_sum",
    "cw_surgery",
    "cw_lens",
    "cw_chain",
    "InvariantTable",
    "s3_table",
    "torsion_lens",
    "ConnectedSum",
    "connected_sum_with_structure",
    "torsion_connected_sum",
    "CorrectionContext",
    "surgery_defect",
    "trivial_character_ledger",
    "correction_term",
    "SurgeryFamily",
    "surgery_residual",
    "unknot_family",
    "split_family",
]
