"""The rational group ring Q[H], the element Theta, and Fourier transforms.

Also holds the two pushforward evaluations used in the torsion surgery
formula: for finitely supported elements of Q[A], and for the single
``Theta_A / (1 - u)`` summand over a rank-one group ``A = Z + Tors``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

from .abgroup import (
    Character,
    FiniteAbelianGroup,
    GroupElement,
    GroupMismatch,
    evaluate,
    phase_to_complex,
    subgroup_order,
)

Number = Union[Fraction, complex]

#: equality tolerance for complex-valued Fourier data
TOL = 1e-9


class NotSurjective(ValueError):
    pass


@dataclass(frozen=True)
class GroupRingElement:
    group: FiniteAbelianGroup
    coeffs: Mapping[GroupElement, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for h, c in dict(self.coeffs).items():
            if h.group != self.group:
                raise GroupMismatch(f"{h.group} vs {self.group}")
            c = Fraction(c)
            if c:
                clean[h] = c
        object.__setattr__(self, "coeffs", clean)

    def __hash__(self):
        return hash((self.group, frozenset(self.coeffs.items())))

    def __eq__(self, other):
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self.group == other.group and self.coeffs == other.coeffs

    @classmethod
    def delta(cls, h: GroupElement, coeff=1) -> "GroupRingElement":
        return cls(h.group, {h: Fraction(coeff)})

    @classmethod
    def one(cls, group: FiniteAbelianGroup) -> "GroupRingElement":
        return cls.delta(group.zero)

    def coefficient(self, h: GroupElement) -> Fraction:
        return self.coeffs.get(h, Fraction(0))

    def __add__(self, other: "GroupRingElement") -> "GroupRingElement":
        if self.group != other.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")
        out = dict(self.coeffs)
        for h, c in other.coeffs.items():
            out[h] = out.get(h, 0) + c
        return GroupRingElement(self.group, out)

    def __neg__(self):
        return GroupRingElement(self.group, {h: -c for h, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "GroupRingElement":
        s = Fraction(s)
        return GroupRingElement(self.group, {h: s * c for h, c in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, GroupRingElement):
            return self.scale(other)
        if self.group != other.group:
            raise GroupMismatch(f"{self.group} vs {other.group}")
        out: dict[GroupElement, Fraction] = {}
        for a, x in self.coeffs.items():
            for b, y in other.coeffs.items():
                out[a + b] = out.get(a + b, 0) + x * y
        return GroupRingElement(self.group, out)

    __rmul__ = scale

    def augmentation(self) -> Fraction:
        return sum(self.coeffs.values(), Fraction(0))


def theta(group: FiniteAbelianGroup) -> GroupRingElement:
    """Sum of all group elements."""
    return GroupRingElement(group, {h: Fraction(1) for h in group.elements()})


def bar(p: GroupRingElement) -> GroupRingElement:
    """The involution h -> h^{-1}."""
    return GroupRingElement(p.group, {-h: c for h, c in p.coeffs.items()})


def fourier_terms(p: GroupRingElement, chi: Character) -> Counter:
    """``P^(chi)`` as an exact formal sum: phase -> accumulated coefficient."""
    if p.group != chi.group:
        raise GroupMismatch(f"{p.group} vs {chi.group}")
    terms: Counter = Counter()
    for h, c in p.coeffs.items():
        terms[evaluate(chi, h)] += c
    return terms


def terms_vanish(terms: Mapping[Fraction, Fraction]) -> bool:
    """Exact test that a formal sum of roots of unity is zero.

    Only recognises the case used for Theta: the nonzero phases form a full
    coset-free subgroup ``{0, 1/m, ..., (m-1)/m}`` (m > 1) with one common
    coefficient. Anything else returns False.
    """
    nonzero = {ph: c for ph, c in terms.items() if c}
    if not nonzero:
        return True
    m = max(ph.denominator for ph in nonzero)
    if m == 1 or len(nonzero) != m:
        return False
    if set(nonzero) != {Fraction(k, m) for k in range(m)}:
        return False
    return len(set(nonzero.values())) == 1


def fourier(p: GroupRingElement, chi: Character) -> Number:
    """``sum_h P_h chi(h)``; exact rational at the trivial character."""
    if chi.is_trivial():
        if p.group != chi.group:
            raise GroupMismatch(f"{p.group} vs {chi.group}")
        return p.augmentation()
    terms = fourier_terms(p, chi)
    vals = [float(c) * phase_to_complex(ph) for ph, c in terms.items()]
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


# ---------------------------------------------------------------------------
# pushforwards


@dataclass(frozen=True)
class Morphism:
    """A homomorphism into a finite group ``target``.

    The source is either finite (``source``) or rank one ``Z + source`` when
    ``free_image`` is given: then ``u = (1, 0)`` maps to ``free_image`` and
    the torsion generators map to ``images``.
    """

    source: FiniteAbelianGroup
    target: FiniteAbelianGroup
    images: tuple[GroupElement, ...]
    free_image: GroupElement | None = None

    def __post_init__(self):
        if len(self.images) != self.source.rank:
            raise ValueError("one image per source generator required")
        for g, d in zip(self.images, self.source.invariant_factors):
            if g.group != self.target:
                raise GroupMismatch("image outside target")
            if (g * d).coords != self.target.zero.coords:
                raise ValueError(f"image {g} has order not dividing {d}")

    @property
    def rank_one(self) -> bool:
        return self.free_image is not None

    def is_surjective(self) -> bool:
        gens = list(self.images)
        if self.free_image is not None:
            gens.append(self.free_image)
        return subgroup_order(gens, self.target) == self.target.order

    def __call__(self, a) -> GroupElement:
        if self.rank_one:
            n, t = a
            out = self.free_image * n
        else:
            t = a
            out = self.target.zero
        for c, g in zip(t.coords, self.images):
            out = out + g * c
        return out

    def pull_back(self, chi: Character) -> tuple[Fraction, Character]:
        """``phi^# chi``: phase on ``u`` (0 for finite sources) and the torsion character."""
        if chi.group != self.target:
            raise GroupMismatch(f"{chi.group} vs {self.target}")
        u_phase = evaluate(chi, self.free_image) if self.rank_one else Fraction(0)
        coords = [
            evaluate(chi, g) * d for g, d in zip(self.images, self.source.invariant_factors)
        ]
        return u_phase, Character(self.source, [int(c) for c in coords])


@dataclass(frozen=True)
class RankOnePlusElement:
    """``f + c * Theta_A / (1 - u)`` over ``A = Z + torsion_part``.

    ``finite_part`` maps ``(exponent of u, torsion element)`` to a rational.
    """

    torsion_part: FiniteAbelianGroup
    finite_part: Mapping[tuple[int, GroupElement], Fraction] = field(default_factory=dict)
    theta_frac_coeff: Fraction = Fraction(0)

    def __post_init__(self):
        clean = {}
        for (n, t), c in dict(self.finite_part).items():
            if t.group != self.torsion_part:
                raise GroupMismatch("torsion element outside torsion part")
            if c:
                clean[(int(n), t)] = Fraction(c)
        object.__setattr__(self, "finite_part", clean)
        object.__setattr__(self, "theta_frac_coeff", Fraction(self.theta_frac_coeff))

    def __hash__(self):
        return hash((self.torsion_part, frozenset(self.finite_part.items()), self.theta_frac_coeff))


def _check_surjective(phi: Morphism):
    if not phi.is_surjective():
        raise NotSurjective("morphism is not onto its target")


def pushforward_finite(phi: Morphism, f, chi: Character) -> complex:
    """Fourier value of ``phi_# f`` at ``chi`` for finitely supported ``f``.

    ``f`` is a :class:`GroupRingElement` on ``phi.source`` (finite source) or
    a :class:`RankOnePlusElement` whose Theta part is ignored (rank one).
    """
    _check_surjective(phi)
    if chi.is_trivial():
        return 0j
    u_phase, tors = phi.pull_back(chi)
    if phi.rank_one:
        items = [((n * u_phase + evaluate(tors, t)) % 1, c) for (n, t), c in f.finite_part.items()]
    else:
        items = [(evaluate(tors, h), c) for h, c in f.coeffs.items()]
    vals = [float(c) * phase_to_complex(ph) for ph, c in items]
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def pushforward_theta_frac(phi: Morphism, coeff, chi: Character) -> complex:
    """Fourier value of ``phi_#(coeff * Theta_A / (1 - u))`` at ``chi``."""
    if not phi.rank_one:
        raise ValueError("Theta/(1-u) needs a rank-one source")
    _check_surjective(phi)
    u_phase, tors = phi.pull_back(chi)
    if u_phase == 0:
        return 0j
    if not tors.is_trivial():
        return 0j
    return float(Fraction(coeff) * phi.source.order) / (1 - phase_to_complex(u_phase))


def pushforward(phi: Morphism, f, chi: Character) -> complex:
    """Both summands of an element of ``Z[[A]]_+`` (or a plain group ring element)."""
    if isinstance(f, RankOnePlusElement):
        return pushforward_finite(phi, f, chi) + pushforward_theta_frac(phi, f.theta_frac_coeff, chi)
    return pushforward_finite(phi, f, chi)

