import math
import random
from fractions import Fraction

import pytest

from covtrans import (
    CyclicGroup,
    GroupSubset,
    build_tower,
    check_epimorphism,
    cyclic_tower_map,
    dimension_estimate,
    extend_covering,
    extension_admissible,
    make_slalom,
    make_thin_set,
    parse_tower_descriptor,
    sample_thin_set,
    slalom_pullback,
    thin_bound,
    thin_set_valid,
    tower_from_document,
    translate_thin,
    witness_sets_nested,
    TowerSpec,
)
from covtrans.errors import FeasibilityError, IntegrityError
from covtrans.tower import enumerate_elements, pullback_dense
from covtrans.util import canonical_json


def test_thin_bound_is_fixed():
    assert thin_bound(0) == 1
    assert [thin_bound(i) for i in range(1, 6)] == [1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        thin_bound(-1)


def test_extension_admissible_frozen_values():
    assert extension_admissible(1024, 1, strengthened=True)
    assert extension_admissible(20, 0, strengthened=True)
    assert not extension_admissible(64, 1, strengthened=True)
    assert extension_admissible(64, 1, strengthened=False)  # 19.4 < 64


def test_tower_spec_basics():
    spec = TowerSpec([20, 1024, 131072])
    assert spec.depth == 3
    assert [spec.group_order(i) for i in range(4)] == [1, 20, 20480, 2684354560]
    assert spec.describe() == "tower:20,1024,131072"
    assert parse_tower_descriptor("tower:20,1024,131072").kernel_orders == (20, 1024, 131072)
    for s in (1, 2, 3):
        check_epimorphism(spec.quotient_map(s), random.Random(0))
    assert spec.project(3, 1, 20480 * 3 + 27) == 7
    with pytest.raises(ValueError):
        TowerSpec([20, 1])
    with pytest.raises(ValueError):
        parse_tower_descriptor("tower:")
    with pytest.raises(ValueError):
        parse_tower_descriptor("spiral:20")


def test_admissibility_report_both_readings():
    spec = TowerSpec([20, 64])
    stage2 = spec.admissibility(2)
    assert stage2.literal_ok and not stage2.strengthened_ok
    assert stage2.literal_value == pytest.approx(4 * (math.log(64) + math.log(2)), rel=1e-12)
    assert stage2.strengthened_value == pytest.approx(
        64 * (2 * math.log(64) + math.log(2)), rel=1e-12
    )
    stage1 = spec.admissibility(1)
    assert stage1.exempt and stage1.literal_ok


def test_extend_trivial_parameter_uses_identity_cover():
    phi = cyclic_tower_map(20, 400)
    base = GroupSubset.from_indices(CyclicGroup(20), [0, 3, 7])
    ext = extend_covering(phi, base, 0, seed=1)
    assert ext.kernel_cover.indices() == [0]
    assert ext.certificate is None
    assert ext.subset.size == 3
    # the canonical section of a cyclic reduction keeps representatives small
    assert enumerate_elements(ext.subset) == [0, 3, 7]


def test_extend_projects_back_exactly():
    phi = cyclic_tower_map(4, 4096)
    base = GroupSubset.from_indices(CyclicGroup(4), [0, 2])
    ext = extend_covering(phi, base, 1, seed=5)
    members = enumerate_elements(ext.subset)
    assert {phi.map(x) for x in members} == {0, 2}
    assert ext.subset.size == ext.kernel_cover.size * 2
    assert 2 * ext.subset.size <= phi.kernel_order * 2  # |X'| <= n |X| / 2
    # factored membership agrees with the enumeration
    member_set = set(members)
    rng = random.Random(8)
    for _ in range(500):
        x = rng.randrange(4096)
        assert (x in ext.subset) == (x in member_set)


def test_extend_preserves_translatability():
    phi = cyclic_tower_map(20, 20480)
    target = CyclicGroup(20)
    base = GroupSubset.from_indices(target, range(10))
    ext = extend_covering(phi, base, 1, seed=2)
    assert ext.subset.size <= 1024 * 10 // 2
    dense = GroupSubset.from_indices(phi.source, enumerate_elements(ext.subset))
    from covtrans import translate_into

    rng = random.Random(4)
    found = 0
    while found < 20:
        hs = [rng.randrange(20) for _ in range(2)]
        if translate_into(target, hs, base) is None:
            continue  # image must be translatable for the guarantee to apply
        found += 1
        ys = [phi.embed_kernel(rng.randrange(1024)) + h for h in hs]
        assert translate_into(phi.source, ys, dense) is not None


def test_extend_whole_group_collapse():
    # trivial target: the extension is exactly the kernel cover
    phi = cyclic_tower_map(1, 1024)
    base = GroupSubset.from_indices(CyclicGroup(1), [0])
    ext = extend_covering(phi, base, 1, seed=9)
    assert ext.subset.size == ext.kernel_cover.size <= 512
    dense = GroupSubset.from_indices(phi.source, enumerate_elements(ext.subset))
    from covtrans import translate_into

    rng = random.Random(10)
    for _ in range(20):
        ys = rng.sample(range(1024), 2)
        assert translate_into(phi.source, ys, dense) is not None


def test_extend_error_cases():
    phi = cyclic_tower_map(4, 256)  # kernel order 64
    base = GroupSubset.from_indices(CyclicGroup(4), [0])
    with pytest.raises(FeasibilityError, match="576"):
        extend_covering(phi, base, 1, seed=1)
    with pytest.raises(FeasibilityError):
        extend_covering(phi, GroupSubset.empty(CyclicGroup(4)), 0, seed=1)
    # an isomorphism has no room for the halving bound
    iso = cyclic_tower_map(4, 4)
    with pytest.raises(FeasibilityError, match="kernel"):
        extend_covering(iso, base, 0, seed=1)


def test_build_depth_two_tower():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 3)
    assert tower.set_size(0) == 1
    assert tower.set_size(1) == 1  # stage 1 cover is the identity singleton
    assert tower.set_size(2) <= 5120
    assert tower.measures()[0] <= Fraction(1, 2)
    assert tower.measures()[1] <= Fraction(1, 4)
    assert tower.measures()[1] == Fraction(tower.set_size(2), 20480)
    # stage covers: 1-covering then 2-covering
    assert tower.stages[0].kernel_cover.indices() == [0]
    assert tower.stages[1].certificate is not None
    assert tower.stages[1].certificate.family.verification.mode == "exhaustive"


def test_build_depth_zero():
    tower = build_tower(TowerSpec([]), 1)
    assert tower.depth == 0
    assert tower.member(0, 0)
    assert tower.measures() == []


def test_build_rejects_inadmissible_stage():
    with pytest.raises(FeasibilityError) as exc:
        build_tower(TowerSpec([20, 64]), 1)
    # the report carries both the literal and the strengthened values
    assert "576.698" in str(exc.value) and "19.4" in str(exc.value)


def test_stage_one_exempt_with_warning():
    # kernel 8 fails the strengthened reading at stage 1 but builds regardless
    spec = TowerSpec([8, 1024])
    assert not spec.admissibility(1).strengthened_ok
    tower = build_tower(spec, 5)
    assert tower.set_size(1) == 1
    assert any("stage 1" in w for w in tower.warnings())


def test_membership_factored_dense_agreement():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 3)
    dense = set(enumerate_elements(tower.stage_set(2)))
    assert len(dense) == tower.set_size(2)
    for x in range(20480):
        assert tower.member(2, x) == (x in dense)


def test_membership_requires_projection():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 7)
    # X_1 = {0}: anything whose level-1 image is nonzero is outside X_2
    for x in (1, 21, 12345):
        if spec.project(2, 1, x) != 0:
            assert not tower.member(2, x)


def test_sample_thin_set_shapes():
    spec = TowerSpec([20, 1024, 131072])
    rng = random.Random(6)
    t1 = sample_thin_set(spec, 1, rng)
    assert len(t1.elements) <= 1
    t2 = sample_thin_set(spec, 2, rng)
    assert len(t2.elements) <= 2
    assert len(t2.projections[1]) <= 1  # single level-1 fiber
    for _ in range(1000):
        t3 = sample_thin_set(spec, 3, rng)
        assert thin_set_valid(spec, t3)
        assert len(t3.elements) <= 3
    sparse = sample_thin_set(spec, 3, rng, fullness=0.4)
    assert thin_set_valid(spec, sparse)
    with pytest.raises(ValueError):
        sample_thin_set(spec, 4, rng)
    with pytest.raises(ValueError):
        sample_thin_set(spec, 2, rng, fullness=0.0)


def test_make_thin_set_rejects_wide_sets():
    spec = TowerSpec([20, 1024])
    with pytest.raises(FeasibilityError):
        make_thin_set(spec, 2, [0, 1])  # two distinct level-1 fibers
    with pytest.raises(ValueError):
        make_thin_set(spec, 2, [20480])
    ok = make_thin_set(spec, 2, [5, 20 * 512 + 5])
    assert ok.projections[1] == (5,)


def test_slalom_validation_and_pullback():
    spec = TowerSpec([20, 1024])
    with pytest.raises(FeasibilityError):
        make_slalom(spec, [[0], [1, 2], [3, 4]])  # level 1 over budget
    slalom = make_slalom(spec, [[0], [3], [3, 1043]])
    thin = slalom_pullback(spec, slalom)
    assert thin.elements == (3, 1043)  # both sit in the level-1 fiber of 3
    assert thin_set_valid(spec, thin)

    excluded = make_slalom(spec, [[0], [3], [3, 7]])
    assert slalom_pullback(spec, excluded).elements == (3,)  # 7 is in fiber 7

    x = 1043
    pointwise = make_slalom(spec, [[0], [spec.project(2, 1, x)], [x, 5]])
    assert x in slalom_pullback(spec, pointwise).elements

    empty_level = make_slalom(spec, [[0], [], [3, 1043]])
    assert slalom_pullback(spec, empty_level).elements == ()


def test_translate_thin_basic_and_empty():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 3)
    empty = make_thin_set(spec, 2, [])
    res = translate_thin(tower, empty)
    assert res.translator == 0

    singleton = make_thin_set(spec, 2, [777])
    res = translate_thin(tower, singleton)
    assert tower.member(2, tower.spec.group(2).mul(res.translator, 777))


def test_translate_thin_chain_consistency():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 9)
    rng = random.Random(12)
    for _ in range(200):
        thin = sample_thin_set(spec, 2, rng)
        res = translate_thin(tower, thin)
        g = res.translator
        group = spec.group(2)
        for y in thin.elements:
            assert tower.member(2, group.mul(g, y))
        # the lifting chain is exactly the projection chain of the result
        assert res.stage_translators[1] == spec.project(2, 1, g)
        assert res.stage_translators[2] == g
        assert witness_sets_nested(tower, res.witness_levels)
        # the returned translator lives in every materialized level set
        for i, level in enumerate(res.witness_levels):
            if level is not None:
                assert spec.project(2, i, g) in level


def test_translator_sets_match_direct_definition():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 21)
    rng = random.Random(13)
    group = spec.group(2)
    for _ in range(3):
        thin = sample_thin_set(spec, 2, rng)
        res = translate_thin(tower, thin)
        for i in (1, 2):
            level = res.witness_levels[i]
            direct_bits = 0
            for g in range(20480):
                if all(
                    tower.member(i, spec.project(2, i, group.mul(g, y)))
                    for y in thin.elements
                ):
                    direct_bits |= 1 << g
            lifted = level.bits
            for s in range(i + 1, 3):
                lifted = pullback_dense(tower.stages[s - 1].phi, lifted)
            # unions of full fibers: the directly computed set IS the pullback
            assert direct_bits == lifted


def test_dimension_estimates():
    spec = TowerSpec([20, 1024])
    assert dimension_estimate(spec, range(20480)) == pytest.approx(1.0)
    assert dimension_estimate(spec, [77]) == 0.0
    rng = random.Random(14)
    thin = sample_thin_set(spec, 2, rng)
    est = dimension_estimate(spec, thin.elements)
    bound = max(math.log(thin_bound(i)) / math.log(spec.group_order(i)) for i in (1, 2))
    assert est <= bound + 1e-12
    wide = dimension_estimate(spec, range(100))
    assert wide == pytest.approx(math.log(100) / math.log(20480), rel=1e-12)
    with pytest.raises(ValueError):
        dimension_estimate(spec, [])


def test_tower_document_roundtrip_and_integrity():
    spec = TowerSpec([20, 1024])
    tower = build_tower(spec, 3)
    doc = tower.document()
    again = build_tower(spec, 3).document()
    assert canonical_json(doc) == canonical_json(again)

    rebuilt = tower_from_document(doc)
    rng = random.Random(15)
    for _ in range(500):
        x = rng.randrange(20480)
        assert rebuilt.member(2, x) == tower.member(2, x)
    assert rebuilt.stages[1].verification_record().mode == "exhaustive"

    tampered = tower.document()
    tampered["stages"][1]["cover_size"] += 1
    with pytest.raises(IntegrityError):
        tower_from_document(tampered)
    tampered2 = tower.document()
    tampered2["stages"][1]["set_size"] += 1
    with pytest.raises(IntegrityError):
        tower_from_document(tampered2)
