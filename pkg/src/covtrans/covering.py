"""Randomized intersecting families and k-covering subsets of finite groups.

The constructions draw Bernoulli(p) random subsets, reject draws whose
members exceed the 2pn size cap or fail verification, and emit certificates
recording the seed, the attempt count and the verification mode.  Exhaustive
verification never silently downgrades: above the step budget the caller
gets sampled mode and the certificate says so.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

from .errors import BudgetExceededError, ConstructionError, FeasibilityError, SoundnessError
from .groups import FiniteGroup
from .subsets import GroupSubset, _translate_bits, random_subset
from .util import derive_seed, iter_set_bits, lowest_set_bit, step_budget

DEFAULT_MAX_ATTEMPTS = 100
DEFAULT_SAMPLE_TRIALS = 100_000
_PAIRWISE_PRODUCT_LIMIT = 10**4  # n cap for O(n^2) difference-set style scans

_VERIFY_SALT = 0x76657269


def intersecting_family_feasible(n: int, k: int) -> bool:
    """True iff k < (n - log 2) / log n (natural log throughout)."""
    if n < 3:
        raise FeasibilityError(f"group order must be >= 3, got {n}")
    if k < 1:
        raise FeasibilityError(f"family size must be >= 1, got {k}")
    return k < (n - math.log(2)) / math.log(n)


def sample_probability(n: int, k: int) -> float:
    """Element inclusion probability p = ((k log n + log 2) / n)^(1/k)."""
    if not intersecting_family_feasible(n, k):
        raise FeasibilityError(
            f"(n={n}, k={k}) infeasible: needs k < (n - log 2)/log n "
            f"= {(n - math.log(2)) / math.log(n):.6g}"
        )
    p = ((k * math.log(n) + math.log(2)) / n) ** (1.0 / k)
    if not 0.0 < p < 1.0:
        raise SoundnessError(f"sample probability {p} out of (0,1) at (n={n}, k={k})")
    return p


def member_size_cap(n: int, k: int) -> float:
    """Size cap 2pn enforced on every accepted member (a real inequality)."""
    return 2.0 * sample_probability(n, k) * n


def covering_condition(n: int, k: int) -> bool:
    """True iff (4k)^k (k log n + log 2) < n, the k-covering hypothesis."""
    if n < 3:
        raise FeasibilityError(f"group order must be >= 3, got {n}")
    if k < 0:
        raise FeasibilityError(f"covering parameter must be >= 0, got {k}")
    return covering_condition_value(n, k) < n


def covering_condition_value(n: int, k: int) -> float:
    """The left-hand side (4k)^k (k log n + log 2); compare against n."""
    return (4 * k) ** k * (k * math.log(n) + math.log(2))


@dataclass(frozen=True)
class VerificationRecord:
    """Outcome of a verification pass; `witness` names the first failure."""

    mode: str  # "exhaustive" | "sampled" | "none"
    result: bool
    trials: int | None = None
    witness: tuple[int, ...] | None = None
    method: str = ""

    def document(self) -> dict:
        return {
            "mode": self.mode,
            "trials": self.trials,
            "result": self.result,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def _resolve_mode(mode: str, exhaustive_steps: int) -> str:
    if mode == "auto":
        return "exhaustive" if exhaustive_steps <= step_budget() else "sampled"
    if mode in ("exhaustive", "sampled"):
        return mode
    raise ValueError(f"unknown verification mode {mode!r}")


def _chunk_ranges(n: int, threads: int) -> list[tuple[int, int]]:
    pieces = max(1, min(n, threads * 4))
    step = (n + pieces - 1) // pieces
    return [(lo, min(n, lo + step)) for lo in range(0, n, step)]


def _first_failure_over_chunks(scan, n: int, threads: int):
    """Deterministic aggregation: lexicographically smallest failing witness."""
    if threads <= 1:
        return scan(0, n)
    found = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for result in pool.map(lambda r: scan(*r), _chunk_ranges(n, threads)):
            if result is not None:
                found.append(result)
    return min(found) if found else None


def verify_intersecting(
    group: FiniteGroup,
    subsets: list[GroupSubset],
    mode: str = "auto",
    *,
    trials: int = DEFAULT_SAMPLE_TRIALS,
    seed: int = 0,
    threads: int = 1,
) -> VerificationRecord:
    """Check that every tuple of right translates X_1 g_1, ..., X_k g_k meets.

    Exhaustive mode iterates all n^k translate tuples with bit-vector
    intersections and returns the lexicographically first empty tuple as
    witness; it requires n^k within the step budget.  Sampled mode checks
    `trials` uniform tuples drawn from the given seed.
    """
    k = len(subsets)
    if k < 1:
        raise ValueError("family must contain at least one subset")
    n = group.order
    for s in subsets:
        s._require_same_carrier(GroupSubset.empty(group))
    resolved = _resolve_mode(mode, n**k)
    if resolved == "exhaustive":
        if n**k > step_budget():
            raise BudgetExceededError(
                f"exhaustive verification needs n^k = {n**k} steps "
                f"(budget {step_budget()}); use sampled mode"
            )
        witness = _exhaustive_intersecting_witness(group, subsets, threads)
        return VerificationRecord(
            mode="exhaustive", result=witness is None, witness=witness, method="tuple-scan"
        )
    rng = random.Random(seed)
    bit_lists = [s.bits for s in subsets]
    for t in range(trials):
        tup = tuple(rng.randrange(n) for _ in range(k))
        acc = _translate_bits(group, bit_lists[0], tup[0], left=False)
        for i in range(1, k):
            acc &= _translate_bits(group, bit_lists[i], tup[i], left=False)
            if not acc:
                break
        if not acc:
            return VerificationRecord(
                mode="sampled", result=False, trials=t + 1, witness=tup, method="tuple-sample"
            )
    return VerificationRecord(mode="sampled", result=True, trials=trials, method="tuple-sample")


def _exhaustive_intersecting_witness(
    group: FiniteGroup, subsets: list[GroupSubset], threads: int
) -> tuple[int, ...] | None:
    n = group.order
    k = len(subsets)
    if k == 1:
        # Right translation is a bijection, so every X_1 g is empty or none is.
        return None if subsets[0].bits else (0,)
    tables = [
        [_translate_bits(group, s.bits, g, left=False) for g in range(n)] for s in subsets
    ]

    if k == 2:
        t2 = tables[1]

        def scan2(lo: int, hi: int):
            for g1 in range(lo, hi):
                a = tables[0][g1]
                g2 = 0
                for b in t2:
                    if not a & b:
                        return (g1, g2)
                    g2 += 1
            return None

        return _first_failure_over_chunks(scan2, n, threads)

    def descend(level: int, acc: int, prefix: tuple[int, ...]):
        table = tables[level]
        last = level == k - 1
        for g in range(n):
            cur = acc & table[g]
            if not cur:
                # every completion of this prefix fails; the lexicographic
                # first one pads with identity indices
                return prefix + (g,) + (0,) * (k - 1 - level)
            if not last:
                hit = descend(level + 1, cur, prefix + (g,))
                if hit is not None:
                    return hit
        return None

    def scank(lo: int, hi: int):
        for g1 in range(lo, hi):
            hit = descend(1, tables[0][g1], (g1,))
            if hit is not None:
                return hit
        return None

    return _first_failure_over_chunks(scank, n, threads)


@dataclass
class IntersectingFamily:
    """The k random subsets plus their construction and verification evidence."""

    group: FiniteGroup
    k: int
    subsets: list[GroupSubset]
    probability: float
    size_cap: float
    seed: int
    attempts_used: int
    verification: VerificationRecord
    target_size: int | None = None

    @property
    def sizes(self) -> list[int]:
        return [s.size for s in self.subsets]

    def union(self) -> GroupSubset:
        out = GroupSubset.empty(self.group)
        for s in self.subsets:
            out = out | s
        return out

    def document(self) -> dict:
        return {
            "kind": "intersecting-family",
            "group": self.group.describe(),
            "k": self.k,
            "p": self.probability,
            "seed": self.seed,
            "attempts": self.attempts_used,
            "sizes": self.sizes,
            "target_size": self.target_size,
            "subsets": [s.indices() for s in self.subsets],
            "verification": self.verification.document(),
        }


def _enlarge_to(subset: GroupSubset, l: int) -> GroupSubset:
    """Add smallest-index non-members until the set has exactly l elements."""
    bits = subset.bits
    comp = ~bits & ((1 << subset.group.order) - 1)
    need = l - subset.size
    if need < 0:
        raise SoundnessError("accepted member exceeds the requested target size")
    for _ in range(need):
        low = comp & -comp
        bits |= low
        comp ^= low
    return GroupSubset(subset.group, bits, l)


def construct_intersecting_family(
    group: FiniteGroup,
    k: int,
    *,
    seed: int,
    target_size: int | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    mode: str = "auto",
    trials: int = DEFAULT_SAMPLE_TRIALS,
    threads: int = 1,
) -> IntersectingFamily:
    """Draw k independent p-random subsets until a draw verifies.

    A draw is rejected when any member exceeds the 2pn size cap or when
    verification finds an empty translate intersection.  On success the
    members are optionally enlarged to exactly `target_size` by adding
    smallest-index non-members, which keeps the intersection property
    (adding elements can only grow every intersection).
    """
    n = group.order
    p = sample_probability(n, k)
    cap = 2.0 * p * n
    if target_size is not None:
        if not cap < target_size <= n:
            raise FeasibilityError(
                f"target size {target_size} outside the admissible range "
                f"({cap:.6g}, {n}]"
            )
    if max_attempts < 1:
        raise ValueError(f"max_attempts must be >= 1, got {max_attempts}")
    history: list[dict] = []
    for attempt in range(max_attempts):
        rng = random.Random(derive_seed(seed, attempt))
        subsets = [random_subset(group, p, rng) for _ in range(k)]
        sizes = [s.size for s in subsets]
        if any(s > cap for s in sizes):
            history.append({"attempt": attempt, "sizes": sizes, "reason": "size-cap"})
            continue
        record = verify_intersecting(
            group,
            subsets,
            mode,
            trials=trials,
            seed=derive_seed(seed, attempt, _VERIFY_SALT),
            threads=threads,
        )
        if not record.result:
            history.append(
                {
                    "attempt": attempt,
                    "sizes": sizes,
                    "reason": "empty-intersection",
                    "witness": record.witness,
                }
            )
            continue
        if target_size is not None:
            subsets = [_enlarge_to(s, target_size) for s in subsets]
        return IntersectingFamily(
            group=group,
            k=k,
            subsets=subsets,
            probability=p,
            size_cap=cap,
            seed=seed,
            attempts_used=attempt + 1,
            verification=record,
            target_size=target_size,
        )
    raise ConstructionError(
        f"no accepted draw for {group.describe()} (k={k}) in {max_attempts} attempts",
        attempts=max_attempts,
        history=history,
    )


@dataclass
class CoveringCertificate:
    """A k-covering subset as the union of a verified intersecting family."""

    group: FiniteGroup
    k: int
    covering_set: GroupSubset
    family: IntersectingFamily
    seed: int

    @property
    def size_bound(self) -> float:
        return self.group.order / 2.0

    def document(self) -> dict:
        return {
            "kind": "k-covering",
            "group": self.group.describe(),
            "k": self.k,
            "p": self.family.probability,
            "seed": self.seed,
            "attempts": self.family.attempts_used,
            "sizes": self.family.sizes,
            "size": self.covering_set.size,
            "size_bound": self.size_bound,
            "elements": self.covering_set.indices(),
            "verification": self.family.verification.document(),
        }


def construct_k_covering(
    group: FiniteGroup,
    k: int,
    *,
    seed: int,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    mode: str = "auto",
    trials: int = DEFAULT_SAMPLE_TRIALS,
    threads: int = 1,
) -> CoveringCertificate:
    """Build a k-covering subset of size at most n/2 as a family union.

    Requires (4k)^k (k log n + log 2) < n; under that hypothesis the 2pn
    member cap is strictly below n/(2k), so the union of the k accepted
    members stays within n/2.
    """
    n = group.order
    if k < 1:
        raise FeasibilityError(f"covering parameter must be >= 1, got {k}")
    lhs = covering_condition_value(n, k)
    if not lhs < n:
        raise FeasibilityError(
            f"covering condition fails for {group.describe()} at k={k}: "
            f"(4k)^k (k log n + log 2) = {lhs:.6g} >= n = {n}"
        )
    family = construct_intersecting_family(
        group,
        k,
        seed=seed,
        max_attempts=max_attempts,
        mode=mode,
        trials=trials,
        threads=threads,
    )
    union = family.union()
    per_member_cap = n / (2.0 * k)
    if any(s > per_member_cap for s in family.sizes) or union.size > n / 2.0:
        raise SoundnessError(
            f"accepted member sizes {family.sizes} break the n/2k cap at n={n}, k={k}"
        )
    return CoveringCertificate(group=group, k=k, covering_set=union, family=family, seed=seed)


def _exhaustive_covering_witness(
    group: FiniteGroup, x: GroupSubset, k: int, threads: int
) -> tuple[int, ...] | None:
    n = group.order
    inv_translates = [
        _translate_bits(group, x.bits, group.inv(y), left=False) for y in range(n)
    ]

    def scan(lo: int, hi: int):
        for y1 in range(lo, hi):
            base = inv_translates[y1]
            if k == 1:
                if not base:
                    return (y1,)
                continue
            for rest in combinations(range(y1 + 1, n), k - 1):
                acc = base
                for y in rest:
                    acc &= inv_translates[y]
                    if not acc:
                        break
                if not acc:
                    return (y1,) + rest
        return None

    return _first_failure_over_chunks(scan, n, threads)


def difference_product_full(group: FiniteGroup, x: GroupSubset) -> bool:
    """True iff the quotient set {a^{-1} b : a, b in X} is the whole group.

    For an abelian carrier this is the literal difference-set criterion
    X - X = G; left translation gY <= X for all pairs Y is equivalent to it.
    """
    n = group.order
    if n > _PAIRWISE_PRODUCT_LIMIT:
        raise BudgetExceededError(
            f"difference-product scan limited to order <= {_PAIRWISE_PRODUCT_LIMIT}, got {n}"
        )
    full = (1 << n) - 1
    bits = 0
    if group.additive_rotation:
        for a in iter_set_bits(x.bits):
            bits |= _translate_bits(group, x.bits, group.inv(a), left=False)
            if bits == full:
                return True
        return bits == full
    members = x.indices()
    for a in members:
        ia = group.inv(a)
        for b in members:
            bits |= 1 << group.mul(ia, b)
    return bits == full


def _missing_difference_witness(group: FiniteGroup, x: GroupSubset) -> tuple[int, int] | None:
    """Smallest untranslatable pair {0, d}: d is the least missing quotient."""
    n = group.order
    full = (1 << n) - 1
    bits = 0
    if group.additive_rotation:
        for a in iter_set_bits(x.bits):
            bits |= _translate_bits(group, x.bits, group.inv(a), left=False)
    else:
        members = x.indices()
        for a in members:
            ia = group.inv(a)
            for b in members:
                bits |= 1 << group.mul(ia, b)
    # the identity quotient is irrelevant: pairs have distinct entries
    missing = ~bits & full & ~1
    if missing == 0:
        return None
    return (0, lowest_set_bit(missing))


def verify_k_covering(
    group: FiniteGroup,
    x: GroupSubset,
    k: int,
    mode: str = "auto",
    *,
    trials: int = DEFAULT_SAMPLE_TRIALS,
    seed: int = 0,
    threads: int = 1,
) -> VerificationRecord:
    """Check that every size-k subset Y admits g with g*Y inside X.

    Exhaustive mode scans all C(n,k) subsets (budget C(n,k)*n); when that
    exceeds the budget at k = 2 the complete O(n^2) quotient-set criterion
    is used instead.  Failure reports the lexicographically first
    untranslatable Y.
    """
    n = group.order
    if k < 1:
        raise ValueError(f"covering parameter must be >= 1, got {k}")
    if k > n:
        # no size-k subsets exist, so any X (even empty) covers vacuously
        return VerificationRecord(mode="exhaustive", result=True, method="vacuous")
    exhaustive_steps = n * math.comb(n, k)
    scan_in_budget = exhaustive_steps <= step_budget()
    pairwise_available = k == 2 and n <= _PAIRWISE_PRODUCT_LIMIT
    if mode == "auto":
        resolved = "exhaustive" if scan_in_budget or pairwise_available else "sampled"
    elif mode in ("exhaustive", "sampled"):
        resolved = mode
    else:
        raise ValueError(f"unknown verification mode {mode!r}")
    if resolved == "exhaustive":
        if scan_in_budget:
            witness = _exhaustive_covering_witness(group, x, k, threads)
            return VerificationRecord(
                mode="exhaustive", result=witness is None, witness=witness, method="subset-scan"
            )
        if pairwise_available:
            witness = _missing_difference_witness(group, x)
            return VerificationRecord(
                mode="exhaustive",
                result=witness is None,
                witness=witness,
                method="difference-set",
            )
        raise BudgetExceededError(
            f"exhaustive covering check needs C(n,k)*n = {exhaustive_steps} steps "
            f"(budget {step_budget()}); use sampled mode"
        )
    rng = random.Random(seed)
    for t in range(trials):
        ys = sorted(rng.sample(range(n), k))
        acc = None
        for y in ys:
            tbits = _translate_bits(group, x.bits, group.inv(y), left=False)
            acc = tbits if acc is None else acc & tbits
            if not acc:
                return VerificationRecord(
                    mode="sampled",
                    result=False,
                    trials=t + 1,
                    witness=tuple(ys),
                    method="subset-sample",
                )
    return VerificationRecord(mode="sampled", result=True, trials=trials, method="subset-sample")


def two_covering_difference_criterion(group: FiniteGroup, x: GroupSubset) -> tuple[bool, bool]:
    """(is 2-covering, quotient set equals G); the booleans always agree."""
    n = group.order
    if n > _PAIRWISE_PRODUCT_LIMIT:
        raise BudgetExceededError(
            f"pairwise criterion limited to order <= {_PAIRWISE_PRODUCT_LIMIT}, got {n}"
        )
    is_covering = verify_k_covering(group, x, 2, mode="exhaustive").result
    return is_covering, difference_product_full(group, x)


EXACT_COVERING_ORDER_LIMIT = 16


def exact_covering_number(group: FiniteGroup, k: int) -> int:
    """Minimum size of a k-covering subset, by size-incremental search.

    Candidate sizes grow from 0 and subsets of a given size are tried in
    lexicographic order; no isomorphism reduction (pointless at n <= 16).
    """
    n = group.order
    if n > EXACT_COVERING_ORDER_LIMIT:
        raise BudgetExceededError(
            f"exact covering search limited to order <= {EXACT_COVERING_ORDER_LIMIT}, got {n}"
        )
    if k < 1:
        raise ValueError(f"covering parameter must be >= 1, got {k}")
    for s in range(n + 1):
        for comb in combinations(range(n), s):
            candidate = GroupSubset.from_indices(group, comb)
            if verify_k_covering(group, candidate, k, mode="exhaustive").result:
                return s
    raise SoundnessError(f"no covering subset found in {group.describe()} at k={k}")


def covering_number_bounds(n: int, k: int) -> tuple[float, float]:
    """(n^(1-1/k), min(n, 2k (k log n + log 2)^(1/k) n^(1-1/k))).

    The upper bound is clamped at n because the whole group always covers.
    """
    if n < 3:
        raise FeasibilityError(f"group order must be >= 3, got {n}")
    if k < 1:
        raise FeasibilityError(f"covering parameter must be >= 1, got {k}")
    lower = n ** (1.0 - 1.0 / k)
    upper = 2.0 * k * (k * math.log(n) + math.log(2)) ** (1.0 / k) * n ** (1.0 - 1.0 / k)
    return lower, min(float(n), upper)


@dataclass
class GreedyShrinkResult:
    """Trajectory of the translate-intersection shrinking walk."""

    elements: tuple[int, ...]
    sizes: list[int]  # sizes[0] = |X|, sizes[j] after intersecting with X g_{j+1}

    @property
    def final_size(self) -> int:
        return self.sizes[-1]


def greedy_shrink_intersection(group: FiniteGroup, x: GroupSubset, k: int) -> GreedyShrinkResult:
    """Pick g_1 = e, then each g_j minimizing the running intersection.

    Averaging over g gives |current| * |X| / n, so the greedy minimum obeys
    |next| <= floor(|current| * |X| / n) at every step; with |X| < n^(1-1/k)
    the final intersection is empty.  Ties break to the smallest index.
    """
    n = group.order
    if n > _PAIRWISE_PRODUCT_LIMIT:
        raise BudgetExceededError(
            f"greedy shrink limited to order <= {_PAIRWISE_PRODUCT_LIMIT}, got {n}"
        )
    if k < 1:
        raise ValueError(f"intersection length must be >= 1, got {k}")
    chosen = [group.identity]
    current = x.bits
    sizes = [x.size]
    for _ in range(k - 1):
        best_g = 0
        best_bits = current & x.bits  # g = 0 keeps X in place
        best_count = best_bits.bit_count()
        for g in range(1, n):
            cand = current & _translate_bits(group, x.bits, g, left=False)
            c = cand.bit_count()
            if c < best_count:
                best_g, best_bits, best_count = g, cand, c
                if c == 0:
                    break
        chosen.append(best_g)
        current = best_bits
        sizes.append(best_count)
    return GreedyShrinkResult(elements=tuple(chosen), sizes=sizes)
