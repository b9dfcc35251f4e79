"""Shared naive oracles, deliberately independent of the library internals.

These use plain python sets and explicit loops so they exercise none of the
bitmask or difference-set machinery they are used to check.
"""

from itertools import combinations


def naive_is_k_covering(group, members, k) -> bool:
    """Every size-k subset Y has some g with {g*y} inside the member set."""
    ms = set(members)
    n = group.order
    for ys in combinations(range(n), k):
        if not any(all(group.mul(g, y) in ms for y in ys) for g in range(n)):
            return False
    return True


def naive_exact_cov(group, k) -> int:
    for s in range(group.order + 1):
        for members in combinations(range(group.order), s):
            if naive_is_k_covering(group, members, k):
                return s
    raise AssertionError("no covering subset at all")


def naive_is_intersecting(group, member_lists) -> bool:
    """Every tuple of right translates has a common element."""
    n = group.order
    sets = [set(m) for m in member_lists]
    tuples = [()]
    for _ in sets:
        tuples = [t + (g,) for t in tuples for g in range(n)]
    for tup in tuples:
        translated = [{group.mul(x, g) for x in s} for s, g in zip(sets, tup)]
        common = translated[0]
        for t in translated[1:]:
            common = common & t
        if not common:
            return False
    return True
