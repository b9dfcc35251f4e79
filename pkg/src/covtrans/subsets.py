"""Dense bit-vector subsets of oracle groups."""

from __future__ import annotations

import random
from typing import Iterable, Iterator

from .groups import FiniteGroup
from .util import iter_set_bits, lowest_set_bit


class GroupSubset:
    """Subset of a finite group stored as an integer bitmask over indices."""

    __slots__ = ("group", "bits", "_size", "_members")

    def __init__(self, group: FiniteGroup, bits: int, size: int | None = None):
        if bits < 0 or bits >> group.order:
            raise ValueError(f"bitmask has members outside 0..{group.order - 1}")
        self.group = group
        self.bits = bits
        self._size = size
        self._members: list[int] | None = None

    @classmethod
    def empty(cls, group: FiniteGroup) -> "GroupSubset":
        return cls(group, 0, 0)

    @classmethod
    def full(cls, group: FiniteGroup) -> "GroupSubset":
        return cls(group, (1 << group.order) - 1, group.order)

    @classmethod
    def from_indices(cls, group: FiniteGroup, indices: Iterable[int]) -> "GroupSubset":
        bits = 0
        for i in indices:
            if not 0 <= i < group.order:
                raise ValueError(f"index {i} out of range for {group.name}")
            bits |= 1 << i
        return cls(group, bits)

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = self.bits.bit_count()
        return self._size

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.group.order and (self.bits >> i) & 1 == 1

    def __iter__(self) -> Iterator[int]:
        return iter_set_bits(self.bits)

    def _member_list(self) -> list[int]:
        if self._members is None:
            self._members = list(iter_set_bits(self.bits))
        return self._members

    def indices(self) -> list[int]:
        """Member indices in ascending order."""
        return list(self._member_list())

    def random_member(self, rng: random.Random) -> int:
        if not self.bits:
            raise ValueError("cannot sample from an empty subset")
        members = self._member_list()
        return members[rng.randrange(len(members))]

    def lowest(self) -> int | None:
        return lowest_set_bit(self.bits)

    def _require_same_carrier(self, other: "GroupSubset") -> None:
        if self.group is not other.group and (
            self.group.order != other.group.order or self.group.name != other.group.name
        ):
            raise ValueError(f"carrier mismatch: {self.group.name} vs {other.group.name}")

    def __and__(self, other: "GroupSubset") -> "GroupSubset":
        self._require_same_carrier(other)
        return GroupSubset(self.group, self.bits & other.bits)

    def __or__(self, other: "GroupSubset") -> "GroupSubset":
        self._require_same_carrier(other)
        return GroupSubset(self.group, self.bits | other.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupSubset):
            return NotImplemented
        return (
            self.group.order == other.group.order
            and self.group.name == other.group.name
            and self.bits == other.bits
        )

    def __hash__(self):
        return hash((self.group.name, self.group.order, self.bits))

    def complement(self) -> "GroupSubset":
        n = self.group.order
        return GroupSubset(self.group, ~self.bits & ((1 << n) - 1), n - self.size)

    def right_translate(self, g: int) -> "GroupSubset":
        """The set {x * g : x in self}; same cardinality (translation is a bijection)."""
        return GroupSubset(self.group, _translate_bits(self.group, self.bits, g, left=False), self._size)

    def left_translate(self, g: int) -> "GroupSubset":
        """The set {g * x : x in self}."""
        return GroupSubset(self.group, _translate_bits(self.group, self.bits, g, left=True), self._size)

    def inverse_set(self) -> "GroupSubset":
        group = self.group
        bits = 0
        for x in iter_set_bits(self.bits):
            bits |= 1 << group.inv(x)
        return GroupSubset(group, bits, self._size)

    def __repr__(self) -> str:
        shown = self.indices()[:12]
        tail = ", ..." if self.size > 12 else ""
        return f"GroupSubset({self.group.name}, size={self.size}, {{{', '.join(map(str, shown))}{tail}}})"


def _translate_bits(group: FiniteGroup, bits: int, g: int, left: bool) -> int:
    if not 0 <= g < group.order:
        raise ValueError(f"index {g} out of range for {group.name}")
    n = group.order
    if group.additive_rotation:
        if g == 0:
            return bits
        return ((bits << g) | (bits >> (n - g))) & ((1 << n) - 1)
    out = 0
    if left:
        for x in iter_set_bits(bits):
            out |= 1 << group.mul(g, x)
    else:
        for x in iter_set_bits(bits):
            out |= 1 << group.mul(x, g)
    return out


def random_subset(group: FiniteGroup, p: float, rng: random.Random) -> GroupSubset:
    """Include each group element independently with probability p.

    Deterministic given the generator state: exactly order-many uniform
    draws are consumed, in index order.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"inclusion probability must be in [0, 1], got {p}")
    n = group.order
    buf = bytearray((n + 7) >> 3)
    rand = rng.random
    for i in range(n):
        if rand() < p:
            buf[i >> 3] |= 1 << (i & 7)
    return GroupSubset(group, int.from_bytes(buf, "little"))


def translate_into(group: FiniteGroup, y, x: GroupSubset) -> int | None:
    """Smallest-index g with g*Y contained in X, or None if no translate works.

    g*y in X for all y is equivalent to g in the intersection of the
    right translates X*y^{-1}, so the search is a bitmask intersection
    followed by a lowest-set-bit scan (ascending index order).
    """
    ys = list(y) if not isinstance(y, GroupSubset) else y.indices()
    if not ys:
        return group.identity
    acc = None
    for yi in ys:
        t = _translate_bits(group, x.bits, group.inv(yi), left=False)
        acc = t if acc is None else acc & t
        if not acc:
            return None
    return lowest_set_bit(acc)
