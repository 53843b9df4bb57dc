"""Shared random generators for the test suites."""

import random
from math import gcd

from surgcalc.abgroup import subgroup_order
from surgcalc.linkform import FormBlock, LinkingForm, block_form


def random_block(rng: random.Random, p: int, max_k: int) -> FormBlock:
    k = rng.randint(1, max_k)
    if p == 2 and rng.random() < 0.3:
        kind = "E1" if k >= 2 and rng.random() < 0.5 else "E0"
        return FormBlock(kind, 2, k)
    q = rng.choice([x for x in range(1, p**k) if gcd(x, p) == 1])
    return FormBlock("A", p, k, q)


def random_blocks(rng: random.Random, bounds: dict) -> list[FormBlock]:
    """Random block list whose p-part has order at most ``bounds[p]``."""
    blocks = []
    for p, bound in bounds.items():
        budget = bound
        for _ in range(rng.randint(0, 3)):
            max_k = 0
            while p ** (max_k + 1) <= budget:
                max_k += 1
            if max_k == 0:
                break
            b = random_block(rng, p, max_k)
            if b.order > budget:
                continue
            blocks.append(b)
            budget //= b.order
    return blocks


def random_automorphism(rng: random.Random, group):
    """Images of the generators under a random automorphism of ``group``."""
    d = group.invariant_factors
    while True:
        images = []
        for di in d:
            coords = []
            for dj in d:
                step = dj // gcd(dj, di)
                coords.append(step * rng.randrange(dj // step))
            images.append(group.element(coords))
        if subgroup_order(images, group) == group.order:
            return images


def random_base_change(rng: random.Random, f: LinkingForm) -> LinkingForm:
    """The same form written in a randomly chosen generating set."""
    if f.group.rank == 0:
        return f
    imgs = random_automorphism(rng, f.group)
    return LinkingForm(f.group, [[f.eval(a, b) for b in imgs] for a in imgs])


def random_form(rng: random.Random, bounds: dict) -> tuple[list[FormBlock], LinkingForm]:
    blocks = random_blocks(rng, bounds)
    return blocks, random_base_change(rng, block_form(*blocks))


def random_ap_params(rng: random.Random):
    """Valid Appendix A inputs: (*) solvable, l2 prime to p, |l_i| < p^e/2."""
    while True:
        p = rng.choice([3, 5, 7])
        r = rng.randint(1, 3)
        s = rng.randint(r, 3)
        ps, pr = p**s, p**r
        q1 = rng.choice([x for x in range(1, ps) if x % p])
        q2 = rng.choice([x for x in range(1, pr) if x % p])
        l2 = rng.choice([x for x in range(-(pr // 2), pr // 2 + 1) if x % p])
        sols = [
            l1
            for l1 in range(-(ps // 2), ps // 2 + 1)
            if (q1 * l1 * l1 * pr + q2 * l2 * l2 * ps) % (ps * pr) == 0
        ]
        if sols:
            return p, s, r, q1, q2, rng.choice(sols), l2


def random_two_group_params(rng: random.Random):
    r = rng.randint(1, 4)
    s = rng.randint(r, 5)
    a = rng.randrange(1, 2**s, 2)
    b = rng.randrange(1, 2**r, 2)
    k = rng.randrange(0, 2**s)
    n = rng.randint(-8, 8)
    return s, r, a, b, k, n
