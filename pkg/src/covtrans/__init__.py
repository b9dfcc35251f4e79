"""Randomized covering-set constructions over finite groups and quotient towers."""

from .covering import (
    CoveringCertificate,
    GreedyShrinkResult,
    IntersectingFamily,
    VerificationRecord,
    construct_intersecting_family,
    construct_k_covering,
    covering_condition,
    covering_condition_value,
    covering_number_bounds,
    difference_product_full,
    exact_covering_number,
    greedy_shrink_intersection,
    intersecting_family_feasible,
    member_size_cap,
    sample_probability,
    two_covering_difference_criterion,
    verify_intersecting,
    verify_k_covering,
)
from .errors import (
    BudgetExceededError,
    ConstructionError,
    CovtransError,
    FeasibilityError,
    IntegrityError,
    SoundnessError,
)
from .groups import (
    CyclicGroup,
    DihedralGroup,
    DirectProductGroup,
    ElementaryAbelianGroup,
    Epimorphism,
    FiniteGroup,
    SymmetricGroup,
    check_epimorphism,
    check_group_axioms,
    cyclic_tower_map,
    element_orders,
    group_from_descriptor,
    product_projection,
)
from .subsets import GroupSubset, random_subset, translate_into
from .tower import (
    FactoredSubset,
    Slalom,
    StageAdmissibility,
    ThinSet,
    ThinTranslation,
    Tower,
    TowerSpec,
    TowerStage,
    build_tower,
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
)

__version__ = "0.1.0"
