"""The complexity-reduction induction of Section 4.2, run on linking forms.

A plan state is the sorted list of blocks of the current form. Every move
except ``Stabilize`` replaces some blocks by the blocks of a model: a surgery
diagram whose homology realizes the new piece. The certificate of the move is
that diagram together with its integer presentation matrix. :func:`verify_plan`
replays every certificate through the Smith normal form.

The models follow the Appendix:

* ``ApSurgery`` (Lemma c2): unknots ``p^s/q1'``, ``p^r/q2'`` and a knot ``K``
  with framing ``n = k + 1`` linking them ``l1`` and ``l2`` times. The
  presentation is ``B_n``. Unknot ``p^s/q'`` realizes ``A_p^s(-q')``, so the
  certificate parameters are ``q' = -q mod p^s``.
* ``TwoGroupReduce`` (Lemma reduce1): the slam-dunked two-component diagram
  ``-2^s/a``, ``n + b/2^r`` with linking number ``k``.
* ``GoodKnotDeflate`` (Cor. c1): the block unknots touched by the class, plus
  a knot with slope ``P/Q`` chosen so that the order drops by ``r/m0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, prod
from typing import Optional, Sequence

from .abgroup import Character, FiniteAbelianGroup, GroupElement, cokernel, evaluate
from .intlinalg import determinant, transpose
from .linkform import (
    DecomposedBlock,
    FormBlock,
    LinkingForm,
    TooLarge,
    block_form,
    certify_decomposition,
    classify_class,
    decompose,
    decompose_with_basis,
    max_order_bound,
    stabilize,
)
from .surgery import SurgeryDiagram, homology, presentation


class NoMoveFound(RuntimeError):
    def __init__(self, reason: str, msg: str = ""):
        super().__init__(f"{reason}: {msg}" if msg else reason)
        self.reason = reason


class StarConditionFails(ValueError):
    pass


class NotMildlyBad(ValueError):
    pass


class BadParity(ValueError):
    pass


class NoValidN(RuntimeError):
    pass


MOVE_KINDS = ("GoodKnotDeflate", "ApSurgery", "TwoGroupReduce", "Stabilize", "SavelievFinish")


# ---------------------------------------------------------------------------
# Appendix certificates


@dataclass(frozen=True)
class ApCertificate:
    n: int
    k: int
    matrix: list
    group: FiniteAbelianGroup


def star_k(p: int, s: int, r: int, q1: int, q2: int, l1: int, l2: int) -> Optional[int]:
    """``k = q1 l1^2 / p^s + q2 l2^2 / p^r`` when it is an integer, else None."""
    val = Fraction(q1 * l1 * l1, p**s) + Fraction(q2 * l2 * l2, p**r)
    return int(val) if val.denominator == 1 else None


def certify_ap_surgery(p: int, s: int, r: int, q1: int, q2: int, l1: int, l2: int) -> ApCertificate:
    """Build ``B_{k+1}`` and check that its cokernel is cyclic of order ``p^(s+r)``."""
    if not (s >= r >= 1):
        raise ValueError("need s >= r >= 1")
    if gcd(q1, p) != 1 or gcd(q2, p) != 1:
        raise ValueError("q1, q2 must be prime to p")
    if 2 * abs(l1) >= p**s or 2 * abs(l2) >= p**r:
        raise ValueError("need |l1| < p^s/2 and |l2| < p^r/2")
    if l2 % p == 0:
        raise NotMildlyBad(f"p = {p} divides l2 = {l2}")
    k = star_k(p, s, r, q1, q2, l1, l2)
    if k is None:
        raise StarConditionFails("q1 l1^2/p^s + q2 l2^2/p^r is not an integer")
    n = k + 1
    b = ap_matrix(p, s, r, q1, q2, l1, l2, n)
    group = cokernel(transpose(b)).group
    if group.invariant_factors != (p ** (s + r),):
        raise AssertionError(f"Appendix A violated: cokernel {group}")
    return ApCertificate(n, k, b, group)


def ap_matrix(p, s, r, q1, q2, l1, l2, n) -> list:
    return [[p**s, 0, q1 * l1], [0, p**r, q2 * l2], [l1, l2, n]]


def find_star_solution(p: int, s: int, r: int, q1: int, q2: int) -> Optional[tuple[int, int]]:
    """First ``(l1, l2)`` satisfying (*) with ``l2`` prime to ``p``.

    ``l2`` runs over residues prime to ``p`` in ``(-p^r/2, p^r/2)``, ordered
    ``1, -1, 2, -2, ...``. For each one the smallest ``|l1|`` solving
    ``q1 l1^2 = -p^(s-r) q2 l2^2 mod p^s`` is taken.
    """
    ps, pr = p**s, p**r

    def centred(bound):
        yield 0
        for x in range(1, (bound + 1) // 2):
            if 2 * x < bound:
                yield x
                yield -x

    for l2 in centred(pr):
        if l2 % p == 0:
            continue
        target = (-(p ** (s - r)) * q2 * l2 * l2) % ps
        for l1 in centred(ps):
            if (q1 * l1 * l1) % ps == target:
                return l1, l2
    return None


def two_group_matrix(s: int, r: int, a: int, b: int, k: int, n: int) -> list:
    return [[-(2**s), a * k], [2**r * k, 2**r * n + b]]


def two_group_order(s: int, r: int, a: int, b: int, k: int, n: int) -> int:
    return abs(2 ** (r + s) * n + 2**s * b + 2**r * a * k * k)


@dataclass(frozen=True)
class TwoGroupCertificate:
    n: int
    matrix: list
    order: int
    group: FiniteAbelianGroup
    two_exponent: int


def _v2(x: int) -> int:
    t = 0
    while x and x % 2 == 0:
        x //= 2
        t += 1
    return t


def certify_two_group_reduce(
    s: int, r: int, a: int, b: int, k: int, n: Optional[int] = None, bound: int = 8
) -> TwoGroupCertificate:
    """The Lemma reduce1 presentation; ``n`` is searched in ``|n| <= bound`` when omitted."""
    if not (s >= r >= 1):
        raise ValueError("need s >= r >= 1")
    if a % 2 == 0 or b % 2 == 0:
        raise BadParity(f"a = {a}, b = {b} must be odd")
    top = 2 ** (r + s + 1)
    if n is None:
        order_ok = lambda m: two_group_order(s, r, a, b, k, m) % top != 0  # noqa: E731
        n = next((m for m in sorted(range(-bound, bound + 1), key=abs) if order_ok(m)), None)
        if n is None:
            raise NoValidN(f"no |n| <= {bound} keeps 2^{r + s + 1} off the order")
    order = two_group_order(s, r, a, b, k, n)
    if order % top == 0:
        raise NoValidN(f"2^{r + s + 1} divides the order {order} for n = {n}")
    m = two_group_matrix(s, r, a, b, k, n)
    if abs(determinant(m)) != order:
        raise AssertionError("Appendix order formula violated")
    group = cokernel(transpose(m)).group
    t = _v2(order)
    two_parts = [d for d in group.invariant_factors if d % 2 == 0]
    if len(two_parts) > 1 or t > r + s:
        raise AssertionError(f"2-part of {group} is not cyclic of exponent <= 2^{r + s}")
    return TwoGroupCertificate(n, m, order, group, t)


# ---------------------------------------------------------------------------
# models


def _block_key(b: FormBlock):
    return (b.p, b.k, b.kind, b.q)


def canonical_blocks(f: LinkingForm) -> list[FormBlock]:
    return sorted(decompose(f), key=_block_key)


def state_kappa(blocks: Sequence[FormBlock]) -> int:
    return prod(b.complexity for b in blocks)


def state_is_cyclic(blocks: Sequence[FormBlock]) -> bool:
    if any(b.kind != "A" for b in blocks):
        return False
    primes = [b.p for b in blocks]
    return len(primes) == len(set(primes))


def unknot_coefficient(b: FormBlock) -> Fraction:
    """Slope of the unknot whose meridian generates ``b`` (self-link ``-q'/p^k``)."""
    d = b.p**b.k
    return Fraction(d, -b.q)


def deflate_slope(s_val: Fraction) -> Fraction:
    """A slope ``P/Q`` with ``|P den + Q num| = 1`` where ``s_val = num/den``."""
    num, den = s_val.numerator, s_val.denominator
    if den == 1:
        raise ValueError("the class is bad; no deflating slope")
    # extended Euclid: P den + Q num = 1
    old_r, r_ = den, num
    old_s, s_ = 1, 0
    old_t, t_ = 0, 1
    while r_:
        qq = old_r // r_
        old_r, r_ = r_, old_r - qq * r_
        old_s, s_ = s_, old_s - qq * s_
        old_t, t_ = t_, old_t - qq * t_
    g = old_r
    p_, q_ = old_s * g, old_t * g  # g = +-1
    if q_ == 0:
        raise ValueError("degenerate slope")
    return Fraction(p_, q_)


def knot_model(blocks: Sequence[FormBlock], ell: Sequence[int], slope) -> SurgeryDiagram:
    """Unknots for ``blocks`` plus one knot with slope ``slope`` linking block i ``ell[i]`` times."""
    m = len(blocks)
    coeffs = [unknot_coefficient(b) for b in blocks] + [Fraction(slope)]
    links = {(i, m): int(l) for i, l in enumerate(ell) if l}
    return SurgeryDiagram.build(coeffs, links)


def model_blocks(d: SurgeryDiagram) -> list[FormBlock]:
    h = homology(d)
    if h.group.order == 1:
        return []
    return canonical_blocks(h.form)


def _diagram_json(d: SurgeryDiagram) -> dict:
    return {
        "coeffs": [str(Fraction(p, q)) for p, q in d.coeffs],
        "lk": [list(r) for r in d.lk],
    }


def _diagram_from_json(data: dict) -> SurgeryDiagram:
    coeffs = [Fraction(c) for c in data["coeffs"]]
    n = len(coeffs)
    links = {(i, j): data["lk"][i][j] for i in range(n) for j in range(i + 1, n)}
    return SurgeryDiagram.build(coeffs, links)


# ---------------------------------------------------------------------------
# moves and plans


def _block_to_json(b: FormBlock) -> dict:
    return {"kind": b.kind, "p": b.p, "k": b.k, "q": b.q}


def _block_from_json(d: dict) -> FormBlock:
    return FormBlock(d["kind"], d["p"], d["k"], d["q"])


@dataclass(frozen=True)
class ReductionMove:
    kind: str
    before: tuple[FormBlock, ...]
    removed: tuple[int, ...]
    added: tuple[FormBlock, ...]
    after: tuple[FormBlock, ...]
    params: dict = field(default_factory=dict)
    knot_class: Optional[tuple[int, ...]] = None
    certificate: Optional[dict] = None

    @property
    def predicted_kappa(self) -> int:
        return state_kappa(self.after)

    @property
    def predicted_form(self) -> LinkingForm:
        return block_form(*self.after) if self.after else LinkingForm(FiniteAbelianGroup(()), [])

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "kappa": self.predicted_kappa,
            "before": [_block_to_json(b) for b in self.before],
            "removed": list(self.removed),
            "added": [_block_to_json(b) for b in self.added],
            "after": [_block_to_json(b) for b in self.after],
            "knot_class": None if self.knot_class is None else list(self.knot_class),
            "certificate": self.certificate,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ReductionMove":
        kc = d.get("knot_class")
        return cls(
            d["kind"],
            tuple(_block_from_json(b) for b in d["before"]),
            tuple(d["removed"]),
            tuple(_block_from_json(b) for b in d["added"]),
            tuple(_block_from_json(b) for b in d["after"]),
            d.get("params", {}),
            None if kc is None else tuple(kc),
            d.get("certificate"),
        )


def _replace(before: Sequence[FormBlock], removed: Sequence[int], added: Sequence[FormBlock]):
    keep = [b for i, b in enumerate(before) if i not in set(removed)]
    return tuple(sorted(keep + list(added), key=_block_key))


def _model_move(kind, before, removed, diagram, params, knot_class=None, extra_cert=None):
    added = tuple(model_blocks(diagram))
    cert = {"diagram": _diagram_json(diagram), "matrix": presentation(diagram)}
    if extra_cert:
        cert.update(extra_cert)
    return ReductionMove(
        kind,
        tuple(before),
        tuple(removed),
        added,
        _replace(before, removed, added),
        params,
        knot_class,
        cert,
    )


def ap_move(blocks: Sequence[FormBlock], i_s: int, i_r: int) -> Optional[ReductionMove]:
    """Lemma c2 on blocks ``i_s`` (exponent s) and ``i_r`` (exponent r <= s), if (*) is solvable."""
    bs, br = blocks[i_s], blocks[i_r]
    p, s, r = bs.p, bs.k, br.k
    q1, q2 = (-bs.q) % p**s, (-br.q) % p**r
    sol = find_star_solution(p, s, r, q1, q2)
    if sol is None:
        return None
    l1, l2 = sol
    cert = certify_ap_surgery(p, s, r, q1, q2, l1, l2)
    model = SurgeryDiagram.build(
        [Fraction(p**s, q1), Fraction(p**r, q2), cert.n], {(0, 2): l1, (1, 2): l2}
    )
    params = {"p": p, "s": s, "r": r, "q1": q1, "q2": q2, "l1": l1, "l2": l2, "n": cert.n, "k": cert.k}
    return _model_move(
        "ApSurgery", blocks, (i_s, i_r), model, params, (l1, l2), {"B": cert.matrix}
    )


def two_group_move(blocks: Sequence[FormBlock], i_s: int, i_r: int) -> Optional[ReductionMove]:
    """Lemma reduce1 on 2-blocks ``i_s``, ``i_r``; the best ``(k, n)`` by resulting kappa."""
    bs, br = blocks[i_s], blocks[i_r]
    s, r, a, b = bs.k, br.k, bs.q, br.q
    current = state_kappa(blocks)
    best = None
    for k in range(2**s):
        try:
            cert = certify_two_group_reduce(s, r, a, b, k)
        except NoValidN:
            continue
        model = SurgeryDiagram.build(
            [Fraction(-(2**s), a), Fraction(2**r * cert.n + b, 2**r)], {(0, 1): k}
        )
        params = {"s": s, "r": r, "a": a, "b": b, "k": k, "n": cert.n, "order": cert.order}
        mv = _model_move(
            "TwoGroupReduce", blocks, (i_s, i_r), model, params, (k, 1), {"B": cert.matrix}
        )
        key = (mv.predicted_kappa, k)
        if best is None or key < best[0]:
            best = (key, mv)
    if best is None or best[1].predicted_kappa >= current:
        return None
    return best[1]


def deflate_move(blocks: Sequence[FormBlock], coords: Sequence[int]) -> ReductionMove:
    """Cor. c1: surgery on the good class with block coordinates ``coords``."""
    idx = [i for i, c in enumerate(coords) if c % blocks[i].order]
    if not idx:
        raise ValueError("zero class")
    if any(blocks[i].kind != "A" for i in idx):
        raise NoMoveFound("NeedsStabilize", "deflation models need A blocks")
    sub = [blocks[i] for i in idx]
    ell = [coords[i] % blocks[i].order for i in idx]
    s_val = sum((Fraction(l * l * b.q, b.order) for l, b in zip(ell, sub)), Fraction(0))
    slope = deflate_slope(s_val)
    model = knot_model(sub, ell, slope)
    r = s_val.denominator
    params = {"slope": str(slope), "self_link": str(s_val % 1), "r_over_m0": r}
    return _model_move("GoodKnotDeflate", blocks, tuple(idx), model, params, tuple(coords))


@dataclass(frozen=True)
class ReductionPlan:
    start: tuple[FormBlock, ...]
    moves: tuple[ReductionMove, ...]

    @property
    def terminal(self) -> tuple[FormBlock, ...]:
        return self.moves[-1].after if self.moves else self.start

    @property
    def kappa_trace(self) -> list[int]:
        return [state_kappa(self.start)] + [m.predicted_kappa for m in self.moves]

    def to_json(self) -> dict:
        return {
            "start": block_form(*self.start).to_json(),
            "start_blocks": [_block_to_json(b) for b in self.start],
            "moves": [m.to_json() for m in self.moves],
            "terminal": block_form(*self.terminal).to_json(),
            "terminal_blocks": [_block_to_json(b) for b in self.terminal],
            "kappa_trace": self.kappa_trace,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "ReductionPlan":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            tuple(_block_from_json(b) for b in data["start_blocks"]),
            tuple(ReductionMove.from_json(m) for m in data["moves"]),
        )


def _lowest_pair(blocks: Sequence[FormBlock], p: int) -> tuple[int, int]:
    idx = sorted((i for i, b in enumerate(blocks) if b.p == p), key=lambda i: (blocks[i].k, i))
    return idx[1], idx[0]  # (exponent s, exponent r), s >= r


def _next_move(blocks: Sequence[FormBlock]) -> ReductionMove:
    primes = sorted({b.p for b in blocks})
    p = next(p for p in primes if sum(b.p == p for b in blocks) >= 2)
    i_s, i_r = _lowest_pair(blocks, p)
    mv = two_group_move(blocks, i_s, i_r) if p == 2 else ap_move(blocks, i_s, i_r)
    if mv is None:
        # the generator of the lowest block is good (self-link q/p^r != 0)
        coords = [int(i == i_r) for i in range(len(blocks))]
        mv = deflate_move(blocks, coords)
    return mv


def stabilize_move(blocks: Sequence[FormBlock]) -> ReductionMove:
    extra = stabilize(block_form(*blocks))
    total = block_form(*blocks, *extra)
    dec = decompose_with_basis(total)
    if not certify_decomposition(total, dec):
        raise AssertionError("stabilised decomposition failed its certificate")
    after = tuple(sorted((d.block for d in dec), key=_block_key))
    return ReductionMove(
        "Stabilize", tuple(blocks), (), tuple(extra), after, {"added": len(extra)}
    )


def reduction_plan(f: LinkingForm, max_moves: int = 256) -> ReductionPlan:
    """Steps 1-5: stabilize away E blocks, then reduce until the group is cyclic."""
    start = tuple(canonical_blocks(f)) if f.order > 1 else ()
    blocks = start
    moves: list[ReductionMove] = []
    if any(b.kind != "A" for b in blocks):
        mv = stabilize_move(blocks)
        moves.append(mv)
        blocks = mv.after
    while not state_is_cyclic(blocks):
        if len(moves) >= max_moves:
            raise RuntimeError("move budget exhausted")
        mv = _next_move(blocks)
        if mv.predicted_kappa >= state_kappa(blocks):
            raise AssertionError(f"{mv.kind} did not reduce kappa")
        moves.append(mv)
        blocks = mv.after
    return ReductionPlan(start, tuple(moves))


def diagnose_plan(plan: ReductionPlan, trace: Optional[Sequence[int]] = None) -> list[str]:
    """Replay every certificate; an empty list means the plan checks out.

    ``trace`` is an externally supplied kappa trace (e.g. read from JSON) to
    check against the replayed one.
    """
    problems: list[str] = []
    blocks = tuple(plan.start)
    kappas = [state_kappa(blocks)]
    for t, mv in enumerate(plan.moves):
        tag = f"move {t} ({mv.kind})"
        if tuple(mv.before) != blocks:
            problems.append(f"{tag}: starts from a different state")
        if mv.kind == "Stabilize":
            if any(b.kind != "A" or b.p != 2 for b in mv.added):
                problems.append(f"{tag}: stabilisation must add 2-primary A blocks")
            total = block_form(*mv.before, *mv.added)
            dec = decompose_with_basis(total)
            if not certify_decomposition(total, dec):
                problems.append(f"{tag}: decomposition certificate failed")
            after = tuple(sorted((d.block for d in dec), key=_block_key))
            if after != tuple(mv.after) or any(b.kind != "A" for b in after):
                problems.append(f"{tag}: stabilised form does not split into the claimed A blocks")
        else:
            cert = mv.certificate or {}
            try:
                diagram = _diagram_from_json(cert["diagram"])
            except (KeyError, ValueError, TypeError) as exc:
                problems.append(f"{tag}: unreadable certificate ({exc})")
                blocks = tuple(mv.after)
                kappas.append(state_kappa(blocks))
                continue
            matrix = presentation(diagram)
            if matrix != cert.get("matrix"):
                problems.append(f"{tag}: presentation matrix does not match the diagram")
            snf_group = cokernel(transpose(matrix)).group
            h = homology(diagram)
            if snf_group != h.group:
                problems.append(f"{tag}: SNF group {snf_group} != homology {h.group}")
            added = tuple(model_blocks(diagram))
            if added != tuple(mv.added):
                problems.append(f"{tag}: model blocks differ from the claimed ones")
            if _replace(mv.before, mv.removed, added) != tuple(mv.after):
                problems.append(f"{tag}: resulting state differs")
            problems += _check_kind(tag, mv, snf_group)
        blocks = tuple(mv.after)
        kappas.append(state_kappa(blocks))
        if mv.kind != "Stabilize" and kappas[-1] >= kappas[-2]:
            problems.append(f"{tag}: kappa {kappas[-2]} -> {kappas[-1]} does not decrease")
    if trace is not None and list(trace) != kappas:
        problems.append(f"kappa trace {list(trace)} != replayed {kappas}")
    if not state_is_cyclic(blocks):
        problems.append("terminal form is not cyclic")
    return problems


def _check_kind(tag: str, mv: ReductionMove, group: FiniteAbelianGroup) -> list[str]:
    out = []
    pr = mv.params
    if mv.kind == "ApSurgery":
        b = ap_matrix(pr["p"], pr["s"], pr["r"], pr["q1"], pr["q2"], pr["l1"], pr["l2"], pr["n"])
        if mv.certificate.get("B") != b or mv.certificate.get("matrix") != b:
            out.append(f"{tag}: B_n does not match the Appendix matrix")
        if determinant(b) != pr["p"] ** (pr["s"] + pr["r"]) * (pr["n"] - pr["k"]):
            out.append(f"{tag}: det(B_n) != p^(s+r) (n - k)")
        if group.invariant_factors != (pr["p"] ** (pr["s"] + pr["r"]),):
            out.append(f"{tag}: cokernel {group} is not cyclic of order p^(s+r)")
    elif mv.kind == "TwoGroupReduce":
        b = two_group_matrix(pr["s"], pr["r"], pr["a"], pr["b"], pr["k"], pr["n"])
        order = two_group_order(pr["s"], pr["r"], pr["a"], pr["b"], pr["k"], pr["n"])
        if mv.certificate.get("B") != b:
            out.append(f"{tag}: matrix does not match Lemma reduce1")
        if abs(determinant(b)) != order or order != group.order:
            out.append(f"{tag}: order formula fails")
        if order % 2 ** (pr["r"] + pr["s"] + 1) == 0:
            out.append(f"{tag}: 2^(r+s+1) divides the order")
    elif mv.kind == "GoodKnotDeflate":
        before = prod(mv.before[i].order for i in mv.removed)
        if group.order * pr["r_over_m0"] != before:
            out.append(f"{tag}: order did not drop by r/m0")
    else:
        out.append(f"{tag}: unknown move kind")
    return out


def verify_plan(plan: ReductionPlan, trace: Optional[Sequence[int]] = None) -> bool:
    return not diagnose_plan(plan, trace)


# ---------------------------------------------------------------------------
# character-driven search (Step 1, Cases 1 and 2)


def class_of_character(f: LinkingForm, chi: Character) -> GroupElement:
    """The class ``x`` with ``lk(x, h) = chi(h)`` for all ``h`` (by enumeration)."""
    if f.order > max_order_bound():
        raise TooLarge(f"order {f.order} exceeds bound {max_order_bound()}")
    gens = f.group.generators()
    target = [evaluate(chi, g) for g in gens]
    for x in f.group.elements():
        if all(f.eval(x, g) == t for g, t in zip(gens, target)):
            return x
    raise ValueError("form is degenerate")


def _coords_in(basis: Sequence[DecomposedBlock], f: LinkingForm, h: GroupElement) -> list[int]:
    """Coordinates of ``h`` along A-block generators, recovered through the form."""
    out = []
    for d in basis:
        g = d.basis[0]
        # lk(h, g) = c * q / p^k, so c = lk(h, g) * p^k / q mod p^k
        n = d.block.order
        val = f.eval(h, g) * n
        out.append(int(val) * pow(d.block.q, -1, n) % n)
    return out


def find_reduction_knot(f: LinkingForm, chi: Character) -> ReductionMove:
    """A complexity-reducing move on a class of ``chi^perp`` (Step 1)."""
    if chi.is_trivial():
        raise ValueError("chi must be nontrivial")
    if f.group.is_cyclic():
        raise NoMoveFound("AlreadyLens", "the form is cyclic")
    basis = sorted(decompose_with_basis(f), key=lambda d: _block_key(d.block))
    blocks = [d.block for d in basis]
    if any(b.kind != "A" for b in blocks):
        raise NoMoveFound("NeedsStabilize", "E blocks have no surgery model; stabilize first")
    x = class_of_character(f, chi)
    perp = [h for h in f.group.elements() if not h.is_zero() and f.eval(x, h) == 0]
    kappa = state_kappa(blocks)

    # Case 1: good classes, smallest resulting order then lexicographic coordinates
    good = []
    for h in perp:
        rep = classify_class(f, h)
        if rep.good:
            good.append((f.order * rep.m0 // rep.order, _coords_in(basis, f, h)))
    for _, coords in sorted(good):
        mv = deflate_move(blocks, coords)
        if mv.predicted_kappa < kappa:
            return mv

    # Case 2: a mildly bad class in the two lowest blocks of some p-part
    for p in sorted({b.p for b in blocks}):
        if sum(b.p == p for b in blocks) < 2:
            continue
        i_s, i_r = _lowest_pair(blocks, p)
        for h in perp:
            c = _coords_in(basis, f, h)
            if any(v for i, v in enumerate(c) if i not in (i_s, i_r)):
                continue
            if c[i_r] % p == 0:
                continue
            mv = _class_move(blocks, i_s, i_r, c[i_s], c[i_r])
            if mv is not None and mv.predicted_kappa < kappa:
                return mv
    raise NoMoveFound("NoReducingClass", f"no good or mildly bad class in chi^perp for {chi}")


def _centre(x: int, n: int) -> int:
    x %= n
    return x - n if 2 * x >= n else x


def _class_move(blocks, i_s, i_r, c_s, c_r) -> Optional[ReductionMove]:
    bs, br = blocks[i_s], blocks[i_r]
    p = bs.p
    if p == 2:
        # rescale the generator of the r-block so the class reads (k, 1)
        u = c_r % br.order
        return two_group_move_with_k(blocks, i_s, i_r, c_s % bs.order, (br.q * u * u) % br.order)
    l1, l2 = _centre(c_s, bs.order), _centre(c_r, br.order)
    q1, q2 = (-bs.q) % bs.order, (-br.q) % br.order
    if star_k(p, bs.k, br.k, q1, q2, l1, l2) is None:
        return None
    cert = certify_ap_surgery(p, bs.k, br.k, q1, q2, l1, l2)
    model = SurgeryDiagram.build(
        [Fraction(bs.order, q1), Fraction(br.order, q2), cert.n], {(0, 2): l1, (1, 2): l2}
    )
    params = {"p": p, "s": bs.k, "r": br.k, "q1": q1, "q2": q2, "l1": l1, "l2": l2, "n": cert.n, "k": cert.k}
    return _model_move("ApSurgery", blocks, (i_s, i_r), model, params, (l1, l2), {"B": cert.matrix})


def two_group_move_with_k(blocks, i_s, i_r, k, b=None) -> Optional[ReductionMove]:
    """Lemma reduce1 for the class ``(k, 1)``; ``b`` overrides the r-block's ``q``.

    Replacing the r-block generator ``g`` by ``u g`` turns ``A_2^r(q)`` into the
    isomorphic ``A_2^r(q u^2)`` and the class ``(k, u)`` into ``(k, 1)``.
    """
    bs, br = blocks[i_s], blocks[i_r]
    s, r, a = bs.k, br.k, bs.q
    b = br.q if b is None else b
    try:
        cert = certify_two_group_reduce(s, r, a, b, k)
    except NoValidN:
        return None
    model = SurgeryDiagram.build(
        [Fraction(-(2**s), a), Fraction(2**r * cert.n + b, 2**r)], {(0, 1): k}
    )
    params = {"s": s, "r": r, "a": a, "b": b, "k": k, "n": cert.n, "order": cert.order}
    return _model_move("TwoGroupReduce", blocks, (i_s, i_r), model, params, (k, 1), {"B": cert.matrix})


__all__ = [
    "NoMoveFound",
    "StarConditionFails",
    "NotMildlyBad",
    "BadParity",
    "NoValidN",
    "MOVE_KINDS",
    "ApCertificate",
    "TwoGroupCertificate",
    "star_k",
    "certify_ap_surgery",
    "ap_matrix",
    "find_star_solution",
    "two_group_matrix",
    "two_group_order",
    "certify_two_group_reduce",
    "canonical_blocks",
    "state_kappa",
    "state_is_cyclic",
    "deflate_slope",
    "knot_model",
    "ReductionMove",
    "ReductionPlan",
    "ap_move",
    "two_group_move",
    "deflate_move",
    "stabilize_move",
    "reduction_plan",
    "diagnose_plan",
    "verify_plan",
    "class_of_character",
    "find_reduction_knot",
]
