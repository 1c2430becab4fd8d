"""Command-line interface: synth, preprocess, metrics, verify, attack, serve."""

from __future__ import annotations

import argparse
import json
import sys

from . import attack as attack_mod
from . import metrics as metrics_mod
from . import preprocess as pre
from . import synth as synth_mod
from . import verify as verify_mod
from .httpapi import load_service_config, make_server
from .model import (
    Dataset,
    entry_from_json,
    load_schema,
    read_jsonl,
    save_schema,
    write_jsonl,
)
from .service import AuthService


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_synth(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = synth_mod.GeneratorConfig.from_json(json.load(fh))
    ds = synth_mod.generate(config)
    write_jsonl(ds, args.out)
    if args.schema_out:
        save_schema(ds.schema, args.schema_out)
    print(f"generated {len(ds.entries)} entries for {len(ds.browsers())} browsers")
    return 0


def _cmd_preprocess(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    dataset = read_jsonl(args.infile, schema)
    keywords = list(pre.DEFAULT_ROBOT_KEYWORDS)
    exact = list(pre.DEFAULT_ROBOT_EXACT_VALUES)
    if args.robots:
        keywords, exact = pre.load_robot_file(args.robots)
    cleaned, report = pre.clean(
        dataset, (args.window_start, args.window_end), keywords, exact
    )
    resynced = pre.resynchronize_uids(cleaned)
    deduped = pre.deduplicate(resynced)
    if args.rules:
        with open(args.rules, "r", encoding="utf-8") as fh:
            rules = [pre.ExtractionRule.from_json(r) for r in json.load(fh)]
        deduped = pre.derive_extracted(deduped, rules)
        save_schema(deduped.schema, args.schema_out or args.schema + ".extended.json")
    write_jsonl(deduped, args.out)
    if args.report:
        _write_json(
            args.report,
            {
                "cleaning": report.to_json(),
                "entries_in": len(dataset.entries),
                "entries_out": len(deduped.entries),
                "browsers_out": len(deduped.browsers()),
                "provenance": list(deduped.provenance),
            },
        )
    print(f"preprocessed {len(dataset.entries)} -> {len(deduped.entries)} entries")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    ds = read_jsonl(args.infile, schema)
    if args.kind == "anonymity":
        days = args.partition_days
        if days is None:
            span = max(e.ts_ms for e in ds.entries) - min(e.ts_ms for e in ds.entries)
            days = span // metrics_mod.DAY_MS + 1
        per_day = []
        for tau in range(int(days)):
            snap = metrics_mod.snapshot(ds, tau)
            histogram = metrics_mod.anonymity_sets(snap)
            per_day.append(
                {
                    "day": tau,
                    "browsers": len(snap.latest),
                    "unicity": metrics_mod.unicity_rate(snap),
                    "anonymity_sets": {str(k): v for k, v in sorted(histogram.items())},
                }
            )
        payload = {"per_day": per_day, "dataset_unicity": metrics_mod.unicity_rate(ds)}
    elif args.kind == "stability":
        curve = metrics_mod.stability_curve(ds, min_pairs=args.min_pairs)
        payload = curve.to_json()
    elif args.kind == "entropy":
        stats = metrics_mod.attribute_entropy(ds)
        payload = {name: s.to_json() for name, s in stats.items()}
    elif args.kind == "nce":
        result = metrics_mod.conditional_entropy_matrix(ds)
        payload = {
            "h_max_bits": result.h_max_bits,
            "attributes": list(result.attributes),
            "matrix": [[float(x) for x in row] for row in result.matrix],
            "summary": result.summary(),
        }
    elif args.kind == "practicality":
        attr_stats = metrics_mod.attribute_practicality(ds, outlier_cap_s=args.outlier_cap_s)
        fp_stats = metrics_mod.fingerprint_practicality(ds, outlier_cap_s=args.outlier_cap_s)
        payload = {
            "attributes": {name: s.to_json() for name, s in attr_stats.items()},
            "fingerprints": fp_stats.to_json(),
        }
        if args.csv:
            _write_attribute_csv(args.csv, ds, attr_stats)
    else:
        raise ValueError(f"unknown metrics kind {args.kind!r}")
    _write_json(args.out, payload)
    print(f"wrote {args.kind} report to {args.out}")
    return 0


def _write_attribute_csv(path: str, ds: Dataset, practicality) -> None:
    """One row per attribute: distinct values, normalized entropy, sameness,
    median size, median collection time."""
    entropy = metrics_mod.attribute_entropy(ds)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("attribute,values,normalized_entropy,sameness_rate,size,time\n")
        for d in ds.schema:
            e = entropy[d.name]
            p = practicality[d.name]
            fh.write(
                f"{d.name},{e.distinct_values},"
                f"{'' if e.normalized_entropy is None else round(e.normalized_entropy, 4)},"
                f"{'' if p.sameness_rate is None else round(p.sameness_rate, 4)},"
                f"{'' if p.median_size_bytes is None else p.median_size_bytes},"
                f"{'' if p.median_collection_time_ms is None else p.median_collection_time_ms}\n"
            )


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.action == "check":
        config = verify_mod.MatchingConfig.load(args.config)
        if args.theta is not None:
            config.global_theta = args.theta
        with open(args.stored, "r", encoding="utf-8") as fh:
            stored = {k: v for k, v in json.load(fh).items()}
        with open(args.presented, "r", encoding="utf-8") as fh:
            presented = {k: v for k, v in json.load(fh).items()}
        from .model import json_to_value

        stored = {k: json_to_value(v) for k, v in stored.items()}
        presented = {k: json_to_value(v) for k, v in presented.items()}
        result = verify_mod.verdict(stored, presented, config, args.mode)
        count = verify_mod.verification_count(stored, presented, config, args.mode)
        print(json.dumps({"verdict": result, "count": count, "theta": config.global_theta}))
        return 0 if result == verify_mod.ACCEPT else 1

    schema = load_schema(args.schema)
    ds = read_jsonl(args.infile, schema)
    sets = verify_mod.build_comparison_sets(ds, months=args.months, seed=args.seed)
    if args.action == "learn":
        config = verify_mod.learn_thresholds(sets, schema)
        curve = verify_mod.error_curve(sets, "matching", config)
        rate, theta = verify_mod.equal_error_rate(curve)
        config.global_theta = theta
        config.save(args.out)
        print(f"learned thresholds; EER {rate:.4f} at theta {theta}")
        return 0
    # eval
    config = verify_mod.MatchingConfig.identical_only(schema)
    counter = "identical" if args.mode == "simple" else "matching"
    if args.mode == "advanced":
        config = verify_mod.learn_thresholds(sets, schema)
    curve = verify_mod.error_curve(sets, counter, config)
    rate, theta = verify_mod.equal_error_rate(curve)
    payload = curve.to_json()
    payload["eer"] = rate
    payload["theta_star"] = theta
    _write_json(args.out, payload)
    print(f"EER {rate:.4f} at theta {theta}")
    return 0


def _cmd_attack(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    ds = read_jsonl(args.targets, schema)
    config = verify_mod.MatchingConfig.load(args.verifier) if args.verifier else \
        verify_mod.MatchingConfig.identical_only(schema)
    if args.theta is not None:
        config.global_theta = args.theta
    # One stored fingerprint per browser: its latest entry.
    latest = {}
    for entry in ds.entries:
        latest[entry.uid] = entry.fingerprint
    targets = list(latest.values())
    if args.strategy == "brute":
        domain: dict[str, list] = {}
        for d in schema:
            values = sorted({e.fingerprint[d.name] for e in ds.entries}, key=repr)
            domain[d.name] = values
        policy = attack_mod.AttackPolicy(
            strategy="brute-force",
            attempts_per_account=args.attempts,
            seed=args.seed,
            domain_spec=domain,
        )
        report = attack_mod.brute_force(targets, policy, config, args.mode)
    else:
        from collections import Counter

        counts = Counter()
        fingerprints = {}
        hashes = ds.entry_hashes()
        for i, entry in enumerate(ds.entries):
            key = hashes[i].digest
            counts[key] += 1
            fingerprints[key] = entry.fingerprint
        total = sum(counts.values())
        distribution = [
            (fingerprints[key], c / total) for key, c in counts.items()
        ]
        policy = attack_mod.AttackPolicy(
            strategy="dictionary",
            attempts_per_account=args.attempts,
            seed=args.seed,
            attacker_distribution=distribution,
        )
        report = attack_mod.dictionary(targets, policy, config, args.mode, schema)
    _write_json(args.out, report.to_json())
    print(f"impersonation rate {report.rate:.4f} over {report.target_count} targets")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    config, bind, port, static = load_service_config(args.config)
    if args.bind:
        bind = args.bind
    if args.port is not None:
        port = args.port
    service = AuthService(config)
    server = make_server(service, bind, port, static)
    host, actual_port = server.server_address[:2]
    print(f"serving on http://{host}:{actual_port} (theta={config.theta}, mode={config.mode})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpkit",
        description="Browser-fingerprint analytics and authentication toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic raw dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema-out", dest="schema_out")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("preprocess", help="clean, resynchronize, deduplicate, extract")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--window-start", type=int, required=True)
    p.add_argument("--window-end", type=int, required=True)
    p.add_argument("--robots")
    p.add_argument("--rules")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--schema-out", dest="schema_out")
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("metrics", help="compute dataset and attribute properties")
    p.add_argument("kind", choices=["anonymity", "stability", "entropy", "nce", "practicality"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--partition-days", dest="partition_days", type=int)
    p.add_argument("--min-pairs", dest="min_pairs", type=int, default=10)
    p.add_argument("--outlier-cap-s", dest="outlier_cap_s", type=float, default=30.0)
    p.add_argument("--csv")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("verify", help="evaluate or apply verification mechanisms")
    p.add_argument("action", choices=["eval", "learn", "check"])
    p.add_argument("--in", dest="infile")
    p.add_argument("--schema")
    p.add_argument("--mode", choices=["simple", "advanced"], default="simple")
    p.add_argument("--months", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--stored")
    p.add_argument("--presented")
    p.add_argument("--config")
    p.add_argument("--theta", type=int)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("attack", help="simulate guessing attacks against a verifier")
    p.add_argument("--strategy", choices=["brute", "dict"], required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--verifier")
    p.add_argument("--theta", type=int)
    p.add_argument("--mode", choices=["simple", "advanced"], default="simple")
    p.add_argument("--attempts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("serve", help="run the authentication service")
    p.add_argument("--config", required=True)
    p.add_argument("--bind")
    p.add_argument("--port", type=int)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
