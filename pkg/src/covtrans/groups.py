"""Finite groups as element-index oracles.

Elements of a group of order n are the indices 0..n-1 and the identity is
always index 0.  Groups expose only `mul` and `inv` oracles, never full
multiplication tables, so cyclic groups of order ~10^9 cost O(1) memory.
"""

from __future__ import annotations

import random
from typing import Callable

from .errors import SoundnessError

_AXIOM_EXHAUSTIVE_LIMIT = 64
_ELEMENTWISE_CHECK_LIMIT = 4096


class FiniteGroup:
    """Oracle-backed finite group on indices 0..order-1 (identity = 0)."""

    name: str
    order: int
    identity: int = 0
    # When set, right/left translation of index sets is bitmask rotation.
    additive_rotation: bool = False

    def mul(self, a: int, b: int) -> int:
        raise NotImplementedError

    def inv(self, a: int) -> int:
        raise NotImplementedError

    def elements(self) -> range:
        return range(self.order)

    def describe(self) -> str:
        return self.name

    def element_order(self, a: int) -> int:
        """Multiplicative order of the element at index a."""
        if not 0 <= a < self.order:
            raise ValueError(f"index {a} out of range for {self.name}")
        current = a
        k = 1
        while current != self.identity:
            current = self.mul(current, a)
            k += 1
            if k > self.order:
                raise SoundnessError(f"{self.name}: element {a} never reached identity")
        return k

    def random_element(self, rng: random.Random) -> int:
        return rng.randrange(self.order)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}, order={self.order})"


class CyclicGroup(FiniteGroup):
    """Additive group of integers mod n."""

    additive_rotation = True

    def __init__(self, n: int, name: str | None = None):
        if n < 1:
            raise ValueError(f"cyclic group order must be >= 1, got {n}")
        self.order = n
        self.name = name or f"C{n}"

    def mul(self, a: int, b: int) -> int:
        return (a + b) % self.order

    def inv(self, a: int) -> int:
        return (-a) % self.order


class DirectProductGroup(FiniteGroup):
    """Direct product with mixed-radix indices: index = i_left * |right| + i_right."""

    def __init__(self, left: FiniteGroup, right: FiniteGroup, name: str | None = None):
        self.left = left
        self.right = right
        self.order = left.order * right.order
        self.name = name or f"{left.name}x{right.name}"

    def _split(self, x: int) -> tuple[int, int]:
        return divmod(x, self.right.order)

    def _join(self, a: int, b: int) -> int:
        return a * self.right.order + b

    def mul(self, a: int, b: int) -> int:
        a1, a2 = self._split(a)
        b1, b2 = self._split(b)
        return self._join(self.left.mul(a1, b1), self.right.mul(a2, b2))

    def inv(self, a: int) -> int:
        a1, a2 = self._split(a)
        return self._join(self.left.inv(a1), self.right.inv(a2))


class DihedralGroup(FiniteGroup):
    """Dihedral group of order 2m: indices 0..m-1 are rotations a^i,
    indices m..2m-1 are reflections a^i s."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"dihedral parameter must be >= 1, got {m}")
        self.m = m
        self.order = 2 * m
        self.name = f"D{m}"

    def mul(self, a: int, b: int) -> int:
        m = self.m
        ai, afl = a % m, a >= m
        bi, bfl = b % m, b >= m
        # a^i s * a^j = a^(i-j) s ; a^i s * a^j s = a^(i-j)
        ci = (ai - bi) % m if afl else (ai + bi) % m
        return ci + m * (afl != bfl)

    def inv(self, a: int) -> int:
        m = self.m
        if a >= m:
            return a  # reflections are involutions
        return (-a) % m


_FACTORIALS = [1]
for _i in range(1, 13):
    _FACTORIALS.append(_FACTORIALS[-1] * _i)


class SymmetricGroup(FiniteGroup):
    """Symmetric group on m <= 8 points, permutations indexed by Lehmer code.

    Index 0 is the identity permutation; mul(a, b) composes "apply b, then a".
    """

    MAX_POINTS = 8

    def __init__(self, m: int):
        if m < 1:
            raise ValueError(f"symmetric parameter must be >= 1, got {m}")
        if m > self.MAX_POINTS:
            raise ValueError(
                f"symmetric groups limited to m <= {self.MAX_POINTS} "
                f"(order m! must stay dense-representable), got {m}"
            )
        self.m = m
        self.order = _FACTORIALS[m]
        self.name = f"S{m}"

    def perm_of(self, idx: int) -> list[int]:
        if not 0 <= idx < self.order:
            raise ValueError(f"index {idx} out of range for {self.name}")
        pool = list(range(self.m))
        out = []
        for pos in range(self.m):
            q, idx = divmod(idx, _FACTORIALS[self.m - 1 - pos])
            out.append(pool.pop(q))
        return out

    def index_of(self, perm: list[int]) -> int:
        pool = list(range(self.m))
        idx = 0
        for pos, v in enumerate(perm):
            j = pool.index(v)
            idx += j * _FACTORIALS[self.m - 1 - pos]
            pool.pop(j)
        return idx

    def mul(self, a: int, b: int) -> int:
        pa = self.perm_of(a)
        pb = self.perm_of(b)
        return self.index_of([pa[pb[i]] for i in range(self.m)])

    def inv(self, a: int) -> int:
        pa = self.perm_of(a)
        out = [0] * self.m
        for i, v in enumerate(pa):
            out[v] = i
        return self.index_of(out)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


class ElementaryAbelianGroup(FiniteGroup):
    """(Z/p)^d with base-p digit indices and componentwise addition."""

    def __init__(self, p: int, d: int):
        if not _is_prime(p):
            raise ValueError(f"elementary abelian base must be prime, got {p}")
        if d < 1:
            raise ValueError(f"elementary abelian rank must be >= 1, got {d}")
        self.p = p
        self.d = d
        self.order = p**d
        self.name = f"EA({p},{d})"

    def mul(self, a: int, b: int) -> int:
        p = self.p
        out = 0
        weight = 1
        for _ in range(self.d):
            out += ((a + b) % p) * weight
            a //= p
            b //= p
            weight *= p
        return out

    def inv(self, a: int) -> int:
        p = self.p
        out = 0
        weight = 1
        for _ in range(self.d):
            out += (-a % p) * weight
            a //= p
            weight *= p
        return out


def _parse_factor(token: str) -> FiniteGroup:
    token = token.strip()
    if token.startswith("EA(") and token.endswith(")"):
        inner = token[3:-1]
        parts = inner.split(",")
        if len(parts) != 2:
            raise ValueError(f"unrecognized group descriptor {token!r}")
        return ElementaryAbelianGroup(int(parts[0]), int(parts[1]))
    if len(token) >= 2 and token[0] in "CDS" and token[1:].isdigit():
        n = int(token[1:])
        if token[0] == "C":
            return CyclicGroup(n)
        if token[0] == "D":
            return DihedralGroup(n)
        return SymmetricGroup(n)
    raise ValueError(f"unrecognized group descriptor {token!r}")


def group_from_descriptor(descriptor: str) -> FiniteGroup:
    """Parse compact descriptors: "C4096", "D5", "S4", "EA(2,5)", "C20xC4"."""
    text = descriptor.strip()
    if not text:
        raise ValueError("empty group descriptor")
    # 'x' never occurs inside a single factor token, so a flat split is safe.
    factors = [_parse_factor(tok) for tok in text.split("x")]
    group = factors[0]
    for rhs in factors[1:]:
        group = DirectProductGroup(group, rhs)
    group.name = "x".join(f.name for f in factors)
    return group


def element_orders(group: FiniteGroup) -> list[int]:
    """Sorted multiset of element orders; an isomorphism diagnostic only."""
    if group.order > _ELEMENTWISE_CHECK_LIMIT:
        raise ValueError(f"element_orders limited to order <= {_ELEMENTWISE_CHECK_LIMIT}")
    return sorted(group.element_order(x) for x in group.elements())


def check_group_axioms(group: FiniteGroup, rng: random.Random | None = None, triples: int = 10_000) -> None:
    """Raise SoundnessError unless the group oracles satisfy the axioms.

    Identity, inverse and associativity are checked exhaustively for order
    <= 64; above that, identity/inverse run over all elements up to order
    4096 (sampled beyond) and associativity is spot-checked on random
    triples -- exhaustive cubic checking is pointless for arithmetic oracles.
    """
    rng = rng or random.Random(0)
    n = group.order
    e = group.identity
    if n <= _ELEMENTWISE_CHECK_LIMIT:
        probe = list(group.elements())
    else:
        probe = [group.random_element(rng) for _ in range(_ELEMENTWISE_CHECK_LIMIT)]
    for x in probe:
        if group.mul(e, x) != x or group.mul(x, e) != x:
            raise SoundnessError(f"{group.name}: identity law fails at {x}")
        if group.mul(x, group.inv(x)) != e:
            raise SoundnessError(f"{group.name}: inverse law fails at {x}")
    if n <= _AXIOM_EXHAUSTIVE_LIMIT:
        rng_elements = list(group.elements())
        for a in rng_elements:
            for b in rng_elements:
                ab = group.mul(a, b)
                for c in rng_elements:
                    if group.mul(ab, c) != group.mul(a, group.mul(b, c)):
                        raise SoundnessError(f"{group.name}: associativity fails at {(a, b, c)}")
    else:
        for _ in range(triples):
            a = group.random_element(rng)
            b = group.random_element(rng)
            c = group.random_element(rng)
            if group.mul(group.mul(a, b), c) != group.mul(a, group.mul(b, c)):
                raise SoundnessError(f"{group.name}: associativity fails at {(a, b, c)}")


class Epimorphism:
    """Surjective homomorphism with kernel access and a canonical section.

    The section picks one canonical preimage per target element (least
    nonnegative representative for cyclic reductions, componentwise for
    products), so factored membership tests are well-defined and O(1).
    """

    def __init__(
        self,
        source: FiniteGroup,
        target: FiniteGroup,
        kernel_group: FiniteGroup,
        map_fn: Callable[[int], int],
        section_fn: Callable[[int], int],
        embed_fn: Callable[[int], int],
        coords_fn: Callable[[int], int],
        name: str,
    ):
        if kernel_group.order * target.order != source.order:
            raise ValueError(
                f"kernel order {kernel_group.order} x target order {target.order}"
                f" != source order {source.order}"
            )
        self.source = source
        self.target = target
        self.kernel_group = kernel_group
        self._map = map_fn
        self._section = section_fn
        self._embed = embed_fn
        self._coords = coords_fn
        self.name = name
        self.is_cyclic_reduction = False

    @property
    def kernel_order(self) -> int:
        return self.kernel_group.order

    def map(self, x: int) -> int:
        return self._map(x)

    def section(self, h: int) -> int:
        return self._section(h)

    def embed_kernel(self, v: int) -> int:
        """Source index of the kernel-group element v."""
        return self._embed(v)

    def kernel_coords(self, x: int) -> int:
        """Kernel-group index of a source element lying in the kernel."""
        return self._coords(x)

    def __repr__(self) -> str:
        return f"Epimorphism({self.name})"


def cyclic_tower_map(modulus_small: int, modulus_large: int) -> Epimorphism:
    """Reduction mod modulus_small from C_large onto C_small.

    The kernel is the subgroup generated by modulus_small, presented as
    C_{large/small}; the section is the least nonnegative representative.
    """
    if modulus_small < 1 or modulus_large < 1:
        raise ValueError("moduli must be positive")
    if modulus_large % modulus_small != 0:
        raise ValueError(f"{modulus_small} does not divide {modulus_large}")
    source = CyclicGroup(modulus_large)
    target = CyclicGroup(modulus_small)
    kernel = CyclicGroup(modulus_large // modulus_small)

    def coords(x: int) -> int:
        q, r = divmod(x, modulus_small)
        if r:
            raise ValueError(f"{x} is not in the kernel of reduction mod {modulus_small}")
        return q

    phi = Epimorphism(
        source,
        target,
        kernel,
        map_fn=lambda x: x % modulus_small,
        section_fn=lambda h: h,
        embed_fn=lambda v: v * modulus_small,
        coords_fn=coords,
        name=f"C{modulus_large}->C{modulus_small}",
    )
    phi.is_cyclic_reduction = True
    return phi


def product_projection(group: DirectProductGroup, factor: str) -> Epimorphism:
    """Coordinate projection of a direct product; factor is "left" or "right"."""
    r = group.right.order
    if factor == "left":
        def coords_left(x: int) -> int:
            if x >= r:
                raise ValueError(f"{x} is not in the kernel of the left projection")
            return x

        return Epimorphism(
            group,
            group.left,
            group.right,
            map_fn=lambda x: x // r,
            section_fn=lambda h: h * r,
            embed_fn=lambda v: v,
            coords_fn=coords_left,
            name=f"{group.name}->{group.left.name}",
        )
    if factor == "right":
        def coords_right(x: int) -> int:
            q, rem = divmod(x, r)
            if rem:
                raise ValueError(f"{x} is not in the kernel of the right projection")
            return q

        return Epimorphism(
            group,
            group.right,
            group.left,
            map_fn=lambda x: x % r,
            section_fn=lambda h: h,
            embed_fn=lambda v: v * r,
            coords_fn=coords_right,
            name=f"{group.name}->{group.right.name}",
        )
    raise ValueError(f"factor must be 'left' or 'right', got {factor!r}")


def check_epimorphism(
    phi: Epimorphism,
    rng: random.Random | None = None,
    pairs: int = 4096,
    hom_exhaustive_limit: int = _ELEMENTWISE_CHECK_LIMIT,
) -> None:
    """Raise SoundnessError unless phi satisfies the quotient-map contract."""
    rng = rng or random.Random(0)
    src, tgt, ker = phi.source, phi.target, phi.kernel_group

    if tgt.order <= 10**6:
        for h in tgt.elements():
            if phi.map(phi.section(h)) != h:
                raise SoundnessError(f"{phi.name}: section fails at {h}")
    if src.order <= hom_exhaustive_limit:
        pair_iter = ((a, b) for a in src.elements() for b in src.elements())
    else:
        pair_iter = (
            (src.random_element(rng), src.random_element(rng)) for _ in range(pairs)
        )
    for a, b in pair_iter:
        if phi.map(src.mul(a, b)) != tgt.mul(phi.map(a), phi.map(b)):
            raise SoundnessError(f"{phi.name}: homomorphism law fails at {(a, b)}")

    if src.order <= 65536:
        fiber = {x for x in src.elements() if phi.map(x) == tgt.identity}
        embedded = {phi.embed_kernel(v) for v in ker.elements()}
        if embedded != fiber:
            raise SoundnessError(f"{phi.name}: kernel embedding misses the identity fiber")
    else:
        probe = (
            list(ker.elements())
            if ker.order <= _ELEMENTWISE_CHECK_LIMIT
            else [ker.random_element(rng) for _ in range(_ELEMENTWISE_CHECK_LIMIT)]
        )
        for v in probe:
            x = phi.embed_kernel(v)
            if phi.map(x) != tgt.identity:
                raise SoundnessError(f"{phi.name}: embed({v}) is outside the kernel")
            if phi.kernel_coords(x) != v:
                raise SoundnessError(f"{phi.name}: kernel coordinates disagree at {v}")
    for v1 in (0, ker.order - 1):
        v2 = ker.random_element(rng)
        lhs = phi.embed_kernel(ker.mul(v1, v2))
        rhs = src.mul(phi.embed_kernel(v1), phi.embed_kernel(v2))
        if lhs != rhs:
            raise SoundnessError(f"{phi.name}: kernel embedding is not a homomorphism")
