"""Staged covering sets in chains of finite cyclic quotients.

A tower over kernel orders (n_0, ..., n_{d-1}) is the chain of cyclic
groups G_0 = C1, G_1 = C_{n_0}, G_2 = C_{n_0 n_1}, ... with reduction maps
between consecutive stages.  Each stage carries a subset X_i with
pi(X_{i+1}) = X_i and |X_i| <= |G_i| / 2^i, built by extending the previous
stage's set through the quotient map with a covering subset of the kernel.
Stage sets are stored in factored form (kernel covers plus sections), so
membership costs O(depth) oracle calls even when |G_d| is in the billions.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .covering import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_SAMPLE_TRIALS,
    CoveringCertificate,
    VerificationRecord,
    construct_k_covering,
    covering_condition_value,
)
from .errors import FeasibilityError, IntegrityError, SoundnessError
from .groups import CyclicGroup, Epimorphism, cyclic_tower_map
from .subsets import GroupSubset, translate_into
from .util import derive_seed

DENSE_STAGE_LIMIT = 1 << 27  # dense enumeration allowed up to this group order
WITNESS_STAGE_LIMIT = 1 << 20  # per-level translator sets materialized up to this
_DENSE_SET_LIMIT = 1 << 21  # practical cap on enumerated stage-set length

_CLAIM1_SALT = 0x636C31
_CLAIM3_SALT = 0x636C33


def thin_bound(i: int) -> int:
    """The thinness budget at level i: 1 at level 0, i above."""
    if i < 0:
        raise ValueError(f"level must be >= 0, got {i}")
    return 1 if i == 0 else i


def extension_admissible(kernel_order: int, k: int, strengthened: bool = True) -> bool:
    """Check the kernel-size hypothesis for extending through a quotient.

    The literal form tests (4k)^k (k log n + log 2) < n at the extension
    parameter k itself; the strengthened form tests it at k+1, which is
    what the kernel's (k+1)-covering construction actually requires.
    """
    j = k + 1 if strengthened else k
    return covering_condition_value(kernel_order, j) < kernel_order


@dataclass(frozen=True)
class StageAdmissibility:
    """Both admissibility readings for one stage, for honest error reports."""

    stage: int
    kernel_order: int
    parameter: int  # extension parameter k = stage - 1
    literal_value: float
    literal_ok: bool
    strengthened_value: float
    strengthened_ok: bool
    exempt: bool  # stage 1 always builds with the singleton kernel cover

    def document(self) -> dict:
        return {
            "stage": self.stage,
            "kernel_order": self.kernel_order,
            "parameter": self.parameter,
            "literal_value": self.literal_value,
            "literal_ok": self.literal_ok,
            "strengthened_value": self.strengthened_value,
            "strengthened_ok": self.strengthened_ok,
            "exempt": self.exempt,
        }


class TowerSpec:
    """Kernel orders plus the derived cyclic quotient chain."""

    def __init__(self, kernel_orders):
        orders = tuple(int(n) for n in kernel_orders)
        for n in orders:
            if n < 2:
                raise ValueError(f"kernel orders must be >= 2 (strictly descending chain), got {n}")
        self.kernel_orders = orders
        self._groups: dict[int, CyclicGroup] = {}
        self._maps: dict[int, Epimorphism] = {}

    @property
    def depth(self) -> int:
        return len(self.kernel_orders)

    def group_order(self, i: int) -> int:
        if not 0 <= i <= self.depth:
            raise ValueError(f"stage {i} out of range for depth {self.depth}")
        out = 1
        for n in self.kernel_orders[:i]:
            out *= n
        return out

    def group(self, i: int) -> CyclicGroup:
        if i not in self._groups:
            self._groups[i] = CyclicGroup(self.group_order(i))
        return self._groups[i]

    def quotient_map(self, s: int) -> Epimorphism:
        """The reduction G_s -> G_{s-1}, for 1 <= s <= depth."""
        if not 1 <= s <= self.depth:
            raise ValueError(f"stage {s} out of range for depth {self.depth}")
        if s not in self._maps:
            self._maps[s] = cyclic_tower_map(self.group_order(s - 1), self.group_order(s))
        return self._maps[s]

    def project(self, d: int, i: int, x: int) -> int:
        """Composed projection G_d -> G_i (i <= d), folding the stage maps."""
        if not 0 <= i <= d <= self.depth:
            raise ValueError(f"invalid projection {d} -> {i} at depth {self.depth}")
        for s in range(d, i, -1):
            x = self.quotient_map(s).map(x)
        return x

    def admissibility(self, s: int) -> StageAdmissibility:
        if not 1 <= s <= self.depth:
            raise ValueError(f"stage {s} out of range for depth {self.depth}")
        n = self.kernel_orders[s - 1]
        k = s - 1
        return StageAdmissibility(
            stage=s,
            kernel_order=n,
            parameter=k,
            literal_value=covering_condition_value(n, k),
            literal_ok=covering_condition_value(n, k) < n,
            strengthened_value=covering_condition_value(n, k + 1),
            strengthened_ok=covering_condition_value(n, k + 1) < n,
            exempt=(s == 1),
        )

    def describe(self) -> str:
        return "tower:" + ",".join(str(n) for n in self.kernel_orders)

    def __repr__(self) -> str:
        return f"TowerSpec({self.describe()})"


def parse_tower_descriptor(descriptor: str) -> TowerSpec:
    text = descriptor.strip()
    if not text.startswith("tower:"):
        raise ValueError(f"unrecognized tower descriptor {text!r}")
    body = text[len("tower:") :]
    if not body:
        raise ValueError(f"tower descriptor lists no kernel orders: {text!r}")
    try:
        orders = [int(tok) for tok in body.split(",")]
    except ValueError as exc:
        raise ValueError(f"bad kernel order in tower descriptor {text!r}") from exc
    return TowerSpec(orders)


class FactoredSubset:
    """X' = L * section(X) through a quotient map, stored without expansion.

    Membership: x belongs iff pi(x) lies in the base set and the kernel
    offset x * section(pi(x))^{-1} lies in the kernel cover.  The factored
    cardinality |L| * |base| is exact: section representatives inhabit
    distinct kernel cosets.
    """

    def __init__(self, phi: Epimorphism, base, kernel_cover: GroupSubset):
        if kernel_cover.group.order != phi.kernel_group.order:
            raise ValueError("kernel cover must live in the map's kernel group")
        if base_size(base) == 0:
            raise ValueError("base set must be nonempty")
        if kernel_cover.size == 0:
            raise ValueError("kernel cover must be nonempty")
        self.phi = phi
        self.base = base
        self.kernel_cover = kernel_cover
        self.group = phi.source
        self.size = base_size(base) * kernel_cover.size

    def __contains__(self, x: int) -> bool:
        if not 0 <= x < self.group.order:
            return False
        phi = self.phi
        h = phi.map(x)
        if h not in self.base:
            return False
        src = phi.source
        offset = src.mul(x, src.inv(phi.section(h)))
        return phi.kernel_coords(offset) in self.kernel_cover

    def sample(self, rng: random.Random) -> int:
        """Uniform random member (uniform base element, uniform cover shift)."""
        b = sample_member(self.base, rng)
        v = self.kernel_cover.random_member(rng)
        src = self.phi.source
        return src.mul(self.phi.embed_kernel(v), self.phi.section(b))

    def enumerate_elements(self) -> list[int]:
        if self.size > _DENSE_SET_LIMIT:
            raise MemoryError(f"refusing to enumerate {self.size} elements")
        src = self.phi.source
        base_elems = enumerate_elements(self.base)
        shifts = [self.phi.embed_kernel(v) for v in self.kernel_cover.indices()]
        out = [src.mul(shift, self.phi.section(b)) for b in base_elems for shift in shifts]
        if len(set(out)) != self.size:
            raise SoundnessError("factored product failed to be injective")
        return sorted(out)

    def __repr__(self) -> str:
        return f"FactoredSubset({self.group.name}, size={self.size})"


StageSet = Union[GroupSubset, FactoredSubset]


def base_size(subset: StageSet) -> int:
    return subset.size


def enumerate_elements(subset: StageSet) -> list[int]:
    if isinstance(subset, GroupSubset):
        return subset.indices()
    return subset.enumerate_elements()


def sample_member(subset: StageSet, rng: random.Random) -> int:
    if isinstance(subset, GroupSubset):
        return subset.random_member(rng)
    return subset.sample(rng)


@dataclass
class ExtensionResult:
    """Output of one quotient extension: the new set and the cover used."""

    subset: FactoredSubset
    kernel_cover: GroupSubset
    certificate: CoveringCertificate | None  # None for the trivial 1-covering {e}


def extend_covering(
    phi: Epimorphism,
    base: StageSet,
    k: int,
    *,
    seed: int,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    mode: str = "auto",
    trials: int = DEFAULT_SAMPLE_TRIALS,
    threads: int = 1,
) -> ExtensionResult:
    """Extend a covering set through phi using a (k+1)-covering of the kernel.

    The result X' = L * section(X) satisfies: pi(X') = X exactly,
    |X'| = |L| |X| <= n |X| / 2, and every subset of the source of size at
    most k+1 whose image translates into X translates into X'.  At k = 0 a
    1-covering is any nonempty subset, so L is the singleton identity and
    no randomness is consumed.
    """
    if k < 0:
        raise FeasibilityError(f"extension parameter must be >= 0, got {k}")
    if base_size(base) == 0:
        raise FeasibilityError("cannot extend an empty covering set")
    kernel = phi.kernel_group
    if kernel.order < 2:
        raise FeasibilityError(
            "extension needs a nontrivial kernel: the halving bound is vacuously "
            "false through an isomorphism"
        )
    if k == 0:
        cover = GroupSubset.from_indices(kernel, [kernel.identity])
        certificate = None
    else:
        if not extension_admissible(kernel.order, k, strengthened=True):
            raise FeasibilityError(
                f"kernel order {kernel.order} too small for extension parameter {k}: "
                f"literal (4k)^k(k log n + log 2) = "
                f"{covering_condition_value(kernel.order, k):.6g}, strengthened "
                f"{covering_condition_value(kernel.order, k + 1):.6g}, both must be < n"
            )
        certificate = construct_k_covering(
            kernel,
            k + 1,
            seed=seed,
            max_attempts=max_attempts,
            mode=mode,
            trials=trials,
            threads=threads,
        )
        cover = certificate.covering_set
    subset = FactoredSubset(phi, base, cover)
    if 2 * subset.size > kernel.order * base_size(base):
        raise SoundnessError(
            f"extension size {subset.size} exceeds n|X|/2 = "
            f"{kernel.order * base_size(base) / 2}"
        )
    return ExtensionResult(subset=subset, kernel_cover=cover, certificate=certificate)


@dataclass
class TowerStage:
    index: int
    phi: Epimorphism
    subset: FactoredSubset
    kernel_cover: GroupSubset
    certificate: CoveringCertificate | None
    admissibility: StageAdmissibility
    measure: Fraction
    stage_seed: int | None = None
    loaded_verification: VerificationRecord | None = None

    @property
    def covering_parameter(self) -> int:
        """The cover is a (index)-covering of the stage kernel."""
        return self.index

    def verification_record(self) -> VerificationRecord | None:
        if self.certificate is not None:
            return self.certificate.family.verification
        return self.loaded_verification

    def document(self) -> dict:
        record = self.verification_record()
        return {
            "stage": self.index,
            "group_order": self.subset.group.order,
            "kernel_order": self.phi.kernel_order,
            "covering_k": self.covering_parameter,
            "seed": self.stage_seed,
            "attempts": self.certificate.family.attempts_used if self.certificate else 0,
            "cover_size": self.kernel_cover.size,
            "set_size": self.subset.size,
            "measure": f"{self.measure.numerator}/{self.measure.denominator}",
            "cover": self.kernel_cover.indices(),
            "verification": record.document() if record else None,
        }


class Tower:
    """A built tower: spec, seed, and the per-stage sets and covers."""

    def __init__(self, spec: TowerSpec, seed: int, stages: list[TowerStage]):
        self.spec = spec
        self.seed = seed
        self.stages = stages
        self._dense_masks: dict[int, int] = {}
        self._base = GroupSubset.from_indices(spec.group(0), [0])

    @property
    def depth(self) -> int:
        return len(self.stages)

    def stage_set(self, i: int) -> StageSet:
        """X_i; stage 0 is the identity singleton in the trivial group."""
        if i == 0:
            return self._base
        return self.stages[i - 1].subset

    def member(self, i: int, x: int) -> bool:
        """Factored membership test for X_i, O(i) oracle calls."""
        if not 0 <= i <= self.depth:
            raise ValueError(f"stage {i} out of range for depth {self.depth}")
        if not 0 <= x < self.spec.group_order(i):
            raise ValueError(f"index {x} out of range for stage {i}")
        return x in self.stage_set(i)

    def set_size(self, i: int) -> int:
        return base_size(self.stage_set(i))

    def dense_mask(self, i: int) -> int:
        """Bitmask of X_i over G_i; only for dense-representable stages."""
        if i not in self._dense_masks:
            if self.spec.group_order(i) > DENSE_STAGE_LIMIT:
                raise MemoryError(f"stage {i} group order exceeds the dense limit")
            bits = 0
            for x in enumerate_elements(self.stage_set(i)):
                bits |= 1 << x
            self._dense_masks[i] = bits
        return self._dense_masks[i]

    def measures(self) -> list[Fraction]:
        return [stage.measure for stage in self.stages]

    def warnings(self) -> list[str]:
        out = []
        for stage in self.stages:
            adm = stage.admissibility
            if adm.literal_ok and not adm.strengthened_ok:
                out.append(
                    f"stage {adm.stage}: admissible under the literal hypothesis "
                    f"({adm.literal_value:.6g} < {adm.kernel_order}) but not the "
                    f"strengthened one ({adm.strengthened_value:.6g})"
                )
        return out

    def document(self) -> dict:
        return {
            "kind": "tower",
            "spec": self.spec.describe(),
            "kernel_orders": list(self.spec.kernel_orders),
            "depth": self.depth,
            "seed": self.seed,
            "section": "least-nonnegative-representative",
            "admissibility": [stage.admissibility.document() for stage in self.stages],
            "stages": [stage.document() for stage in self.stages],
            "warnings": self.warnings(),
        }


def build_tower(
    spec: TowerSpec,
    seed: int,
    *,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    mode: str = "auto",
    trials: int = DEFAULT_SAMPLE_TRIALS,
    threads: int = 1,
    verify_claims: bool = True,
    claim1_samples: int = 100_000,
    claim3_samples: int = 100,
) -> Tower:
    """Build every stage, then check the nesting/size/translation claims.

    Stage s needs the strengthened admissibility of its kernel at parameter
    k = s-1; stage 1 is exempt because the singleton identity is already a
    1-covering.  Claim checks: projection containment exactly on dense
    stages (sampled above the dense limit), the 2^{-i} measure bound as an
    exact integer comparison, and sampled thin-set translations.
    """
    for s in range(2, spec.depth + 1):
        adm = spec.admissibility(s)
        if not adm.strengthened_ok:
            raise FeasibilityError(
                f"stage {s} inadmissible: kernel order {adm.kernel_order} at parameter "
                f"k={adm.parameter} needs the strengthened value "
                f"{adm.strengthened_value:.6g} < {adm.kernel_order} "
                f"(literal form gives {adm.literal_value:.6g}, "
                f"{'ok' if adm.literal_ok else 'also failing'})"
            )
    stages: list[TowerStage] = []
    current: StageSet = GroupSubset.from_indices(spec.group(0), [0])
    for s in range(1, spec.depth + 1):
        phi = spec.quotient_map(s)
        stage_seed = derive_seed(seed, s)
        ext = extend_covering(
            phi,
            current,
            s - 1,
            seed=stage_seed,
            max_attempts=max_attempts,
            mode=mode,
            trials=trials,
            threads=threads,
        )
        order = spec.group_order(s)
        if ext.subset.size * (2**s) > order:
            raise SoundnessError(
                f"stage {s} breaks the measure bound: |X_{s}| = {ext.subset.size} "
                f"> |G_{s}| / 2^{s} = {order / 2 ** s}"
            )
        stages.append(
            TowerStage(
                index=s,
                phi=phi,
                subset=ext.subset,
                kernel_cover=ext.kernel_cover,
                certificate=ext.certificate,
                admissibility=spec.admissibility(s),
                measure=Fraction(ext.subset.size, order),
                stage_seed=stage_seed,
            )
        )
        current = ext.subset
    tower = Tower(spec, seed, stages)
    if verify_claims:
        check_projection_claim(tower, samples=claim1_samples)
        check_translation_claim(tower, samples=claim3_samples)
    return tower


def check_projection_claim(tower: Tower, samples: int = 100_000) -> None:
    """Every member of X_s projects into X_{s-1}; dense stages exactly."""
    for s in range(1, tower.depth + 1):
        subset = tower.stages[s - 1].subset
        phi = tower.stages[s - 1].phi
        dense = (
            tower.spec.group_order(s) <= DENSE_STAGE_LIMIT
            and subset.size <= _DENSE_SET_LIMIT
        )
        if dense:
            members = enumerate_elements(subset)
        else:
            rng = random.Random(derive_seed(tower.seed, s, _CLAIM1_SALT))
            members = (subset.sample(rng) for _ in range(samples))
        prev = tower.stage_set(s - 1)
        for x in members:
            if phi.map(x) not in prev:
                raise SoundnessError(f"stage {s}: member {x} projects outside X_{s - 1}")


def check_translation_claim(tower: Tower, samples: int = 100) -> None:
    """Sampled thin sets all translate into the top stage set."""
    if tower.depth == 0:
        return
    rng = random.Random(derive_seed(tower.seed, _CLAIM3_SALT))
    for _ in range(samples):
        thin = sample_thin_set(tower.spec, tower.depth, rng)
        translate_thin(tower, thin, collect_witness_sets=False)


@dataclass(frozen=True)
class ThinSet:
    """Elements of G_d whose level-i images stay within the thinness budget."""

    depth: int
    elements: tuple[int, ...]
    projections: tuple[tuple[int, ...], ...]  # index i = image in G_i, i = 0..depth

    @property
    def size(self) -> int:
        return len(self.elements)


def make_thin_set(spec: TowerSpec, depth: int, elements) -> ThinSet:
    """Sort, project and validate an element list into a ThinSet."""
    if not 0 <= depth <= spec.depth:
        raise ValueError(f"depth {depth} out of range for {spec.describe()}")
    elems = tuple(sorted(set(int(x) for x in elements)))
    order = spec.group_order(depth)
    for x in elems:
        if not 0 <= x < order:
            raise ValueError(f"element {x} out of range for stage {depth}")
    projections = []
    for i in range(depth + 1):
        image = tuple(sorted({spec.project(depth, i, x) for x in elems}))
        if len(image) > thin_bound(i):
            raise FeasibilityError(
                f"set is not thin: level {i} image has {len(image)} elements "
                f"(budget {thin_bound(i)})"
            )
        projections.append(image)
    return ThinSet(depth=depth, elements=elems, projections=tuple(projections))


def thin_set_valid(spec: TowerSpec, thin: ThinSet) -> bool:
    """Recompute projections from scratch and recheck the thinness budget."""
    try:
        rebuilt = make_thin_set(spec, thin.depth, thin.elements)
    except (FeasibilityError, ValueError):
        return False
    return rebuilt.projections == thin.projections


def sample_thin_set(
    spec: TowerSpec, depth: int, rng: random.Random, fullness: float = 1.0
) -> ThinSet:
    """Sample a random maximal fiber chain, then keep elements with prob. fullness.

    Level 1 fixes a single fiber; level i draws at most i coset
    representatives inside the previously chosen fibers, so the thinness
    invariant holds by construction.
    """
    if not 0 <= depth <= spec.depth:
        raise ValueError(f"depth {depth} out of range for {spec.describe()}")
    if not 0.0 < fullness <= 1.0:
        raise ValueError(f"fullness must be in (0, 1], got {fullness}")
    levels: list[list[int]] = [[0]]
    for i in range(1, depth + 1):
        phi = spec.quotient_map(i)
        src = phi.source
        prev = levels[i - 1]
        chosen: list[int] = []
        for _ in range(thin_bound(i)):
            h = prev[rng.randrange(len(prev))]
            v = rng.randrange(phi.kernel_order)
            x = src.mul(phi.embed_kernel(v), phi.section(h))
            if x not in chosen:
                chosen.append(x)
        levels.append(chosen)
    candidates = levels[depth]
    if fullness >= 1.0:
        kept = candidates
    else:
        kept = [x for x in candidates if rng.random() < fullness]
    return make_thin_set(spec, depth, kept)


@dataclass(frozen=True)
class Slalom:
    """Per-level subsets S_0, ..., S_d with |S_i| within the thinness budget."""

    levels: tuple[tuple[int, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1


def make_slalom(spec: TowerSpec, levels) -> Slalom:
    packed = tuple(tuple(sorted(set(int(x) for x in level))) for level in levels)
    if len(packed) - 1 > spec.depth:
        raise ValueError(f"slalom depth {len(packed) - 1} exceeds {spec.describe()}")
    for i, level in enumerate(packed):
        if len(level) > thin_bound(i):
            raise FeasibilityError(
                f"slalom level {i} has {len(level)} elements (budget {thin_bound(i)})"
            )
        order = spec.group_order(i)
        for x in level:
            if not 0 <= x < order:
                raise ValueError(f"slalom level {i} element {x} out of range")
    return Slalom(levels=packed)


def slalom_pullback(spec: TowerSpec, slalom: Slalom) -> ThinSet:
    """Elements of G_d whose every level-i image lies in S_i, as a ThinSet.

    The level-i image of the result sits inside S_i, so the result is thin;
    this realizes the finite-depth pullback of a slalom through the
    diagonal embedding into the product of the quotients.
    """
    d = slalom.depth
    if d > spec.depth:
        raise ValueError(f"slalom depth {d} exceeds {spec.describe()}")
    level_sets = [set(level) for level in slalom.levels]
    kept = [
        x
        for x in slalom.levels[d]
        if all(spec.project(d, i, x) in level_sets[i] for i in range(d))
    ]
    return make_thin_set(spec, d, kept)


@dataclass
class ThinTranslation:
    """A translator g with g*Y inside X_d, plus its stagewise lifting chain."""

    depth: int
    translator: int
    stage_translators: tuple[int, ...]  # g_0, ..., g_d with pi(g_{i+1}) = g_i
    kernel_shifts: tuple[int, ...]  # u_1, ..., u_d in kernel coordinates
    witness_levels: list[Optional[GroupSubset]]  # T_i at level i, when materialized


def translate_thin(
    tower: Tower,
    thin: ThinSet,
    *,
    collect_witness_sets: bool = True,
    witness_limit: int = WITNESS_STAGE_LIMIT,
) -> ThinTranslation:
    """Constructive stagewise translation of a thin set into the top stage.

    Given g_i with g_i * Y_i inside X_i, the lift takes the canonical
    preimage of g_i, reads off the kernel offsets of the shifted fiber
    elements, and translates that offset set into the stage's kernel cover
    (smallest kernel element first); the shifted preimage is g_{i+1}.  A
    failed lift contradicts the per-stage covering guarantee and raises
    SoundnessError with the offending state.
    """
    d = thin.depth
    if d > tower.depth:
        raise ValueError(f"thin set depth {d} exceeds tower depth {tower.depth}")
    g = 0
    chain = [0]
    shifts: list[int] = []
    for s in range(1, d + 1):
        stage = tower.stages[s - 1]
        phi = stage.phi
        src = phi.source
        g_tilde = phi.section(g)
        offsets = set()
        for y in thin.projections[s]:
            w = src.mul(g_tilde, y)
            h = phi.map(w)
            if not tower.member(s - 1, h):
                raise SoundnessError(
                    f"stage {s}: shifted image {h} escaped X_{s - 1}; "
                    f"translator chain {chain} is unsound"
                )
            offsets.add(phi.kernel_coords(src.mul(w, src.inv(phi.section(h)))))
        u = translate_into(phi.kernel_group, sorted(offsets), stage.kernel_cover)
        if u is None:
            raise SoundnessError(
                f"stage {s}: offsets {sorted(offsets)} have no translate into the "
                f"{stage.covering_parameter}-cover of size {stage.kernel_cover.size}; "
                f"the cover's verification was "
                f"{stage.verification_record().mode if stage.verification_record() else 'trivial'}"
            )
        g = src.mul(phi.embed_kernel(u), g_tilde)
        for y in thin.projections[s]:
            if not tower.member(s, src.mul(g, y)):
                raise SoundnessError(f"stage {s}: lifted translator {g} fails membership")
        chain.append(g)
        shifts.append(u)
    top = tower.spec.group(d)
    for y in thin.elements:
        if not tower.member(d, top.mul(g, y)):
            raise SoundnessError(f"final translator {g} fails membership at depth {d}")
    witness_levels: list[Optional[GroupSubset]] = []
    if collect_witness_sets:
        for i in range(d + 1):
            witness_levels.append(_witness_level(tower, thin, i, witness_limit))
    return ThinTranslation(
        depth=d,
        translator=g,
        stage_translators=tuple(chain),
        kernel_shifts=tuple(shifts),
        witness_levels=witness_levels,
    )


def _witness_level(tower: Tower, thin: ThinSet, i: int, limit: int) -> GroupSubset | None:
    """T_i at level i: all h in G_i with h * Y_i inside X_i (exact bitmask)."""
    group = tower.spec.group(i)
    if group.order > limit:
        return None
    mask = tower.dense_mask(i)
    acc = (1 << group.order) - 1
    x_subset = GroupSubset(group, mask)
    for y in thin.projections[i]:
        acc &= x_subset.right_translate(group.inv(y)).bits
    return GroupSubset(group, acc)


def pullback_dense(phi: Epimorphism, target_bits: int) -> int:
    """Bitmask over the source of the preimage of a target bitmask."""
    m = phi.target.order
    big = phi.source.order
    if getattr(phi, "is_cyclic_reduction", False):
        repunit = ((1 << big) - 1) // ((1 << m) - 1)
        return target_bits * repunit
    out = 0
    for x in range(big):
        if (target_bits >> phi.map(x)) & 1:
            out |= 1 << x
    return out


def witness_sets_nested(tower: Tower, witness_levels: list[Optional[GroupSubset]]) -> bool:
    """Check T_{i+1} within the pullback of T_i wherever both materialized."""
    for i in range(len(witness_levels) - 1):
        low, high = witness_levels[i], witness_levels[i + 1]
        if low is None or high is None:
            continue
        lifted = pullback_dense(tower.stages[i].phi, low.bits)
        if high.bits & ~lifted:
            return False
    return True


def dimension_estimate(spec: TowerSpec, elements, depth: int | None = None) -> float:
    """Finite-depth lower envelope of log|image_i| / log|G_i| over 1 <= i <= d."""
    d = spec.depth if depth is None else depth
    if d < 1:
        raise ValueError("dimension estimate needs depth >= 1")
    elems = sorted(set(int(x) for x in elements))
    if not elems:
        raise ValueError("dimension estimate needs a nonempty set")
    order = spec.group_order(d)
    if elems[0] < 0 or elems[-1] >= order:
        raise ValueError(f"elements out of range for stage {d} (order {order})")
    best = None
    for i in range(1, d + 1):
        image = {spec.project(d, i, x) for x in elems}
        ratio = math.log(len(image)) / math.log(spec.group_order(i))
        best = ratio if best is None else min(best, ratio)
    return best


def tower_from_document(doc: dict) -> Tower:
    """Rebuild a tower from its serialized document, membership bit-exact."""
    if doc.get("kind") != "tower":
        raise IntegrityError(f"not a tower document: kind={doc.get('kind')!r}")
    spec = TowerSpec(doc["kernel_orders"])
    seed = int(doc["seed"])
    stages: list[TowerStage] = []
    current: StageSet = GroupSubset.from_indices(spec.group(0), [0])
    stage_docs = doc["stages"]
    if len(stage_docs) != spec.depth:
        raise IntegrityError(
            f"tower document lists {len(stage_docs)} stages for depth {spec.depth}"
        )
    for s, stage_doc in enumerate(stage_docs, start=1):
        phi = spec.quotient_map(s)
        cover = GroupSubset.from_indices(phi.kernel_group, stage_doc["cover"])
        if cover.size != stage_doc["cover_size"]:
            raise IntegrityError(
                f"stage {s}: cover_size {stage_doc['cover_size']} disagrees with "
                f"{cover.size} listed elements"
            )
        subset = FactoredSubset(phi, current, cover)
        if subset.size != stage_doc["set_size"]:
            raise IntegrityError(
                f"stage {s}: set_size {stage_doc['set_size']} disagrees with the "
                f"factored product {subset.size}"
            )
        stage = TowerStage(
            index=s,
            phi=phi,
            subset=subset,
            kernel_cover=cover,
            certificate=None,
            admissibility=spec.admissibility(s),
            measure=Fraction(subset.size, spec.group_order(s)),
            stage_seed=stage_doc.get("seed"),
        )
        raw = stage_doc.get("verification")
        if raw is not None:
            stage.loaded_verification = VerificationRecord(
                mode=raw["mode"],
                result=raw["result"],
                trials=raw["trials"],
                witness=tuple(raw["witness"]) if raw.get("witness") is not None else None,
            )
        stages.append(stage)
        current = subset
    return Tower(spec, seed, stages)
