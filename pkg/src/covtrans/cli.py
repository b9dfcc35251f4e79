"""Command-line front end: reproducible experiments and certificate emission.

Every randomized command requires an explicit --seed; a document's embedded
config re-executes to byte-identical output.  Exit codes: 0 verified
success, 1 verification failure or soundness violation, 2 usage/parse
error, 3 infeasible parameters, 4 attempts exhausted, 5 budget exceeded,
6 certificate integrity error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from .covering import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_SAMPLE_TRIALS,
    construct_intersecting_family,
    construct_k_covering,
    covering_condition,
    covering_number_bounds,
    exact_covering_number,
    EXACT_COVERING_ORDER_LIMIT,
    greedy_shrink_intersection,
    verify_intersecting,
    verify_k_covering,
)
from .errors import (
    BudgetExceededError,
    ConstructionError,
    FeasibilityError,
    IntegrityError,
    SoundnessError,
)
from .groups import group_from_descriptor
from .subsets import GroupSubset
from .tower import (
    build_tower,
    dimension_estimate,
    make_thin_set,
    parse_tower_descriptor,
    sample_thin_set,
    tower_from_document,
    translate_thin,
)
from .util import canonical_json, derive_seed, format_real

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_ATTEMPTS_EXHAUSTED = 4
EXIT_BUDGET_EXCEEDED = 5
EXIT_INTEGRITY = 6

_TRANSLATE_SALT = 0x7472616E
_DIM_SALT = 0x64696D
_SHRINK_SALT = 0x736872


def _parse_mode(token: str) -> tuple[str, int]:
    """Split a mode token into (mode, trials): auto, exhaustive, sampled:<m>."""
    if token in ("auto", "exhaustive"):
        return token, DEFAULT_SAMPLE_TRIALS
    if token == "sampled":
        return "sampled", DEFAULT_SAMPLE_TRIALS
    if token.startswith("sampled:"):
        raw = token[len("sampled:") :]
        try:
            trials = int(raw)
        except ValueError as exc:
            raise ValueError(f"bad sampled trial count {raw!r} in mode {token!r}") from exc
        if trials < 1:
            raise ValueError(f"sampled trial count must be >= 1, got {trials}")
        return "sampled", trials
    raise ValueError(f"unknown verification mode {token!r}")


def _emit(doc: dict) -> str:
    return canonical_json(doc) + "\n"


def _cmd_covering_construct(config: dict) -> tuple[str, int]:
    group = group_from_descriptor(config["group"])
    mode, trials = _parse_mode(config["mode"])
    common = dict(
        seed=config["seed"],
        max_attempts=config["max_attempts"],
        mode=mode,
        trials=trials,
        threads=config["threads"],
    )
    if config["l"] is not None:
        family = construct_intersecting_family(group, config["k"], target_size=config["l"], **common)
        doc = family.document()
    else:
        certificate = construct_k_covering(group, config["k"], **common)
        doc = certificate.document()
    doc["config"] = config
    return _emit(doc), EXIT_OK


def _load_subset(group, listed: list, what: str) -> GroupSubset:
    if len(set(listed)) != len(listed):
        raise IntegrityError(f"{what} lists duplicate elements")
    try:
        return GroupSubset.from_indices(group, listed)
    except ValueError as exc:
        raise IntegrityError(f"{what}: {exc}") from exc


def _cmd_covering_verify(config: dict) -> tuple[str, int]:
    with open(config["in"], "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind not in ("intersecting-family", "k-covering"):
        raise IntegrityError(f"cannot verify documents of kind {kind!r}")
    group = group_from_descriptor(doc["group"])
    k = int(doc["k"])
    mode, trials = _parse_mode(config["mode"])
    if kind == "intersecting-family":
        listed = doc["subsets"]
        if len(listed) != k or len(doc["sizes"]) != k:
            raise IntegrityError(
                f"family lists {len(listed)} subsets and {len(doc['sizes'])} sizes but k = {k}"
            )
        subsets = [_load_subset(group, lst, f"subset {i + 1}") for i, lst in enumerate(listed)]
        for i, (subset, declared) in enumerate(zip(subsets, doc["sizes"])):
            if subset.size != declared:
                raise IntegrityError(
                    f"subset {i + 1} declares size {declared} but lists {subset.size} elements"
                )
        record = verify_intersecting(
            group, subsets, mode, trials=trials, seed=config["seed"], threads=config["threads"]
        )
    else:
        x = _load_subset(group, doc["elements"], "covering set")
        if x.size != doc["size"]:
            raise IntegrityError(
                f"covering set declares size {doc['size']} but lists {x.size} elements"
            )
        record = verify_k_covering(
            group, x, k, mode, trials=trials, seed=config["seed"], threads=config["threads"]
        )
    verdict = {
        "kind": "verification-verdict",
        "input_kind": kind,
        "group": doc["group"],
        "k": k,
        "verification": record.document(),
        "config": config,
    }
    return _emit(verdict), EXIT_OK if record.result else EXIT_VERIFY_FAILED


def _cmd_covering_exact(config: dict) -> tuple[str, int]:
    group = group_from_descriptor(config["group"])
    value = exact_covering_number(group, config["k"])
    n = group.order
    lower, upper = (covering_number_bounds(n, config["k"]) if n >= 3 else (None, None))
    doc = {
        "kind": "exact-covering",
        "group": group.describe(),
        "n": n,
        "k": config["k"],
        "value": value,
        "lower_bound": lower,
        "upper_bound": upper,
        "config": config,
    }
    return _emit(doc), EXIT_OK


def _cmd_covering_bounds(config: dict) -> tuple[str, int]:
    group = group_from_descriptor(config["group"])
    lower, upper = covering_number_bounds(group.order, config["k"])
    doc = {
        "kind": "covering-bounds",
        "group": group.describe(),
        "n": group.order,
        "k": config["k"],
        "lower_bound": lower,
        "upper_bound": upper,
        "config": config,
    }
    return _emit(doc), EXIT_OK


def _cmd_covering_shrink(config: dict) -> tuple[str, int]:
    group = group_from_descriptor(config["group"])
    n = group.order
    size = config["l"]
    if size is None:
        raise ValueError("shrink needs --l, the size of the random subset")
    if not 0 <= size <= n:
        raise ValueError(f"subset size {size} out of range for order {n}")
    rng = random.Random(derive_seed(config["seed"], _SHRINK_SALT))
    members = sorted(rng.sample(range(n), size))
    x = GroupSubset.from_indices(group, members)
    result = greedy_shrink_intersection(group, x, config["k"])
    k = config["k"]
    bound = (size**k) // (n ** (k - 1)) if k >= 1 else None
    doc = {
        "kind": "greedy-shrink",
        "group": group.describe(),
        "n": n,
        "k": k,
        "seed": config["seed"],
        "size": size,
        "subset": members,
        "translators": list(result.elements),
        "sizes": result.sizes,
        "final_size": result.final_size,
        "final_bound": bound,
        "config": config,
    }
    return _emit(doc), EXIT_OK


def _cmd_cov_table(config: dict) -> tuple[str, int]:
    groups = [group_from_descriptor(tok) for tok in config["groups"].split(",")]
    try:
        ks = [int(tok) for tok in config["k"].split(",")]
    except ValueError as exc:
        raise ValueError(f"bad k list {config['k']!r}") from exc
    rows = []
    index = 0
    for group in groups:
        n = group.order
        for k in ks:
            lower, upper = covering_number_bounds(n, k)
            exact = (
                exact_covering_number(group, k) if n <= EXACT_COVERING_ORDER_LIMIT else None
            )
            achieved = None
            if covering_condition(n, k):
                certificate = construct_k_covering(
                    group, k, seed=derive_seed(config["seed"], index)
                )
                achieved = certificate.covering_set.size
            rows.append(
                {
                    "group": group.describe(),
                    "n": n,
                    "k": k,
                    "lower": lower,
                    "exact": exact,
                    "achieved": achieved,
                    "upper": upper,
                }
            )
            index += 1
    if config["format"] == "json":
        doc = {"kind": "covering-table", "seed": config["seed"], "rows": rows, "config": config}
        return _emit(doc), EXIT_OK
    lines = ["group,n,k,lower,exact,achieved,upper"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row["group"],
                    str(row["n"]),
                    str(row["k"]),
                    format_real(row["lower"]),
                    "" if row["exact"] is None else str(row["exact"]),
                    "" if row["achieved"] is None else str(row["achieved"]),
                    format_real(row["upper"]),
                ]
            )
        )
    return "\n".join(lines) + "\n", EXIT_OK


def _cmd_tower_build(config: dict) -> tuple[str, int]:
    spec = parse_tower_descriptor(config["spec"])
    mode, trials = _parse_mode(config["mode"])
    tower = build_tower(
        spec,
        config["seed"],
        max_attempts=config["max_attempts"],
        mode=mode,
        trials=trials,
        threads=config["threads"],
        claim3_samples=config["claim3_samples"],
    )
    doc = tower.document()
    doc["config"] = config
    return _emit(doc), EXIT_OK


def _load_or_build_tower(config: dict):
    if config.get("in"):
        with open(config["in"], "r", encoding="utf-8") as fh:
            return tower_from_document(json.load(fh))
    spec = parse_tower_descriptor(config["spec"])
    return build_tower(spec, config["seed"], verify_claims=False)


def _cmd_tower_translate(config: dict) -> tuple[str, int]:
    tower = _load_or_build_tower(config)
    spec = tower.spec
    depth = config["depth"] if config["depth"] is not None else tower.depth
    results = []
    if config.get("thin"):
        with open(config["thin"], "r", encoding="utf-8") as fh:
            listed = json.load(fh)["thin_sets"]
        thin_sets = [make_thin_set(spec, depth, elems) for elems in listed]
    else:
        rng = random.Random(derive_seed(config["seed"], _TRANSLATE_SALT))
        thin_sets = [
            sample_thin_set(spec, depth, rng, config["fullness"])
            for _ in range(config["samples"])
        ]
    for thin in thin_sets:
        translation = translate_thin(tower, thin, collect_witness_sets=False)
        results.append(
            {
                "elements": list(thin.elements),
                "translator": translation.translator,
                "verified": True,
            }
        )
    doc = {
        "kind": "tower-translation",
        "spec": spec.describe(),
        "seed": config["seed"],
        "depth": depth,
        "samples": len(results),
        "success": len(results),
        "results": results,
        "config": config,
    }
    return _emit(doc), EXIT_OK


def _cmd_tower_dim(config: dict) -> tuple[str, int]:
    tower = _load_or_build_tower(config)
    spec = tower.spec
    depth = config["depth"] if config["depth"] is not None else tower.depth
    if config.get("elements"):
        elements = [int(tok) for tok in config["elements"].split(",")]
        samples = [{"elements": elements, "estimate": dimension_estimate(spec, elements, depth)}]
    else:
        rng = random.Random(derive_seed(config["seed"], _DIM_SALT))
        samples = []
        for _ in range(config["samples"]):
            thin = sample_thin_set(spec, depth, rng)
            samples.append(
                {
                    "elements": list(thin.elements),
                    "estimate": dimension_estimate(spec, thin.elements, depth),
                }
            )
    doc = {
        "kind": "dimension-report",
        "spec": spec.describe(),
        "seed": config["seed"],
        "depth": depth,
        "estimates": samples,
        "config": config,
    }
    return _emit(doc), EXIT_OK


_DISPATCH = {
    "covering construct": _cmd_covering_construct,
    "covering verify": _cmd_covering_verify,
    "covering exact-cov": _cmd_covering_exact,
    "covering bounds": _cmd_covering_bounds,
    "covering shrink": _cmd_covering_shrink,
    "cov-table": _cmd_cov_table,
    "tower build": _cmd_tower_build,
    "tower translate": _cmd_tower_translate,
    "tower dim": _cmd_tower_dim,
}


def run_config(config: dict) -> tuple[str, int]:
    """Execute a run configuration; returns (payload text, exit code)."""
    command = config.get("command")
    if command not in _DISPATCH:
        raise ValueError(f"unknown command {command!r}")
    return _DISPATCH[command](config)


def rerun_document(doc: dict) -> str:
    """Re-execute a document's embedded config; must reproduce it byte-for-byte."""
    if "config" not in doc:
        raise IntegrityError("document carries no run configuration")
    return run_config(doc["config"])[0]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covtrans",
        description="randomized covering-set constructions over finite groups, with certificates",
    )
    top = parser.add_subparsers(dest="section", required=True)

    covering = top.add_parser("covering", help="intersecting families and k-covering sets")
    cov_actions = covering.add_subparsers(dest="action", required=True)

    c = cov_actions.add_parser("construct", help="construct and verify a certificate")
    c.add_argument("--group", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--l", type=int, default=None, help="family target size (emits the family)")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--max-attempts", type=int, default=DEFAULT_MAX_ATTEMPTS)
    c.add_argument("--mode", default="auto")
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--out", default=None)

    v = cov_actions.add_parser("verify", help="independently re-verify a certificate")
    v.add_argument("--in", dest="infile", required=True)
    v.add_argument("--mode", default="auto")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--out", default=None)

    e = cov_actions.add_parser("exact-cov", help="exact minimal covering size (order <= 16)")
    e.add_argument("--group", required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--out", default=None)

    b = cov_actions.add_parser("bounds", help="lower/upper covering-size bounds")
    b.add_argument("--group", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--out", default=None)

    s = cov_actions.add_parser("shrink", help="greedy translate-intersection shrinking")
    s.add_argument("--group", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--l", type=int, required=True, help="size of the random subset")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", default=None)

    t = top.add_parser("cov-table", help="bounds/exact/achieved table over groups and k")
    t.add_argument("--groups", required=True, help="comma-separated group descriptors")
    t.add_argument("--k", required=True, help="comma-separated k values")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--format", choices=("csv", "json"), default="csv")
    t.add_argument("--out", default=None)

    tower = top.add_parser("tower", help="staged quotient towers")
    tower_actions = tower.add_subparsers(dest="action", required=True)

    tb = tower_actions.add_parser("build", help="build a tower and emit its document")
    tb.add_argument("--spec", required=True, help='e.g. "tower:20,1024"')
    tb.add_argument("--seed", type=int, required=True)
    tb.add_argument("--max-attempts", type=int, default=DEFAULT_MAX_ATTEMPTS)
    tb.add_argument("--mode", default="auto")
    tb.add_argument("--threads", type=int, default=1)
    tb.add_argument("--claim3-samples", type=int, default=100)
    tb.add_argument("--out", default=None)

    tt = tower_actions.add_parser("translate", help="translate sampled or listed thin sets")
    tt.add_argument("--spec", default=None)
    tt.add_argument("--seed", type=int, required=True)
    tt.add_argument("--samples", type=int, default=100)
    tt.add_argument("--depth", type=int, default=None)
    tt.add_argument("--fullness", type=float, default=1.0)
    tt.add_argument("--in", dest="infile", default=None, help="tower document to load")
    tt.add_argument("--thin", default=None, help="JSON file with explicit thin sets")
    tt.add_argument("--out", default=None)

    td = tower_actions.add_parser("dim", help="finite-depth dimension estimates")
    td.add_argument("--spec", default=None)
    td.add_argument("--seed", type=int, required=True)
    td.add_argument("--samples", type=int, default=10)
    td.add_argument("--depth", type=int, default=None)
    td.add_argument("--elements", default=None, help="comma-separated element indices")
    td.add_argument("--in", dest="infile", default=None)
    td.add_argument("--out", default=None)
    return parser


def _config_from_args(args: argparse.Namespace) -> dict:
    if args.section == "covering":
        command = f"covering {args.action}"
    elif args.section == "tower":
        command = f"tower {args.action}"
    else:
        command = args.section
    config: dict = {"command": command}
    if command == "covering construct":
        config.update(
            group=args.group,
            k=args.k,
            l=args.l,
            seed=args.seed,
            max_attempts=args.max_attempts,
            mode=args.mode,
            threads=args.threads,
        )
    elif command == "covering verify":
        config.update(**{"in": args.infile}, mode=args.mode, seed=args.seed, threads=args.threads)
    elif command in ("covering exact-cov", "covering bounds"):
        config.update(group=args.group, k=args.k)
    elif command == "covering shrink":
        config.update(group=args.group, k=args.k, l=args.l, seed=args.seed)
    elif command == "cov-table":
        config.update(groups=args.groups, k=args.k, seed=args.seed, format=args.format)
    elif command == "tower build":
        config.update(
            spec=args.spec,
            seed=args.seed,
            max_attempts=args.max_attempts,
            mode=args.mode,
            threads=args.threads,
            claim3_samples=args.claim3_samples,
        )
    elif command == "tower translate":
        if args.spec is None and args.infile is None:
            raise ValueError("tower translate needs --spec or --in")
        config.update(
            spec=args.spec,
            seed=args.seed,
            samples=args.samples,
            depth=args.depth,
            fullness=args.fullness,
        )
        config["in"] = args.infile
        config["thin"] = args.thin
    elif command == "tower dim":
        if args.spec is None and args.infile is None:
            raise ValueError("tower dim needs --spec or --in")
        config.update(
            spec=args.spec,
            seed=args.seed,
            samples=args.samples,
            depth=args.depth,
            elements=args.elements,
        )
        config["in"] = args.infile
    config["out"] = args.out
    return config


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        payload, code = run_config(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FeasibilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConstructionError as exc:
        print(f"attempts exhausted: {exc}", file=sys.stderr)
        return EXIT_ATTEMPTS_EXHAUSTED
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET_EXCEEDED
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except SoundnessError as exc:
        print(f"soundness violation: {exc}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config.get("out"):
        with open(config["out"], "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
