#!/usr/bin/env python3
"""Guessing-attack study: impersonation rates of brute-force and dictionary
attackers against the exact-match and the count-threshold verifiers, as a
function of the attempt budget.

Usage: python scripts/run_attack_study.py [--browsers N] [--out DIR]
"""

from __future__ import annotations

import argparse
import json
from collections import Counter
from pathlib import Path

from fpkit.attack import AttackPolicy, brute_force, dictionary
from fpkit.preprocess import deduplicate
from fpkit.synth import AttributeSpec, GeneratorConfig, generate
from fpkit.verify import MatchingConfig


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--browsers", type=int, default=2000)
    parser.add_argument("--out", default="out/attack_study")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # A deliberately small population schema so dictionary mass is visible.
    attributes = tuple(
        AttributeSpec(name=f"x{i}", pool_size=p, skew=s)
        for i, (p, s) in enumerate(
            [(4, 0.4), (6, 0.5), (8, 0.6), (3, 0.3), (12, 0.7), (5, 0.5)]
        )
    )
    config = GeneratorConfig(
        browser_count=args.browsers, days=30, attributes=attributes, seed=8,
        visits_mean=1.5,
    )
    ds = deduplicate(generate(config))
    latest = {}
    for entry in ds.entries:
        latest[entry.uid] = entry.fingerprint
    targets = list(latest.values())

    domain = {
        d.name: sorted({e.fingerprint[d.name] for e in ds.entries}, key=repr)
        for d in ds.schema
    }
    counts = Counter()
    examples = {}
    hashes = ds.entry_hashes()
    for i, entry in enumerate(ds.entries):
        counts[hashes[i].digest] += 1
        examples[hashes[i].digest] = entry.fingerprint
    total = sum(counts.values())
    distribution = [(examples[h], c / total) for h, c in counts.items()]

    verifier = MatchingConfig.identical_only(ds.schema, global_theta=len(ds.schema))
    rows = []
    for attempts in (1, 4, 16, 64):
        bf = brute_force(
            targets,
            AttackPolicy(strategy="brute-force", attempts_per_account=attempts,
                         seed=1, domain_spec=domain),
            verifier,
        )
        dc = dictionary(
            targets,
            AttackPolicy(strategy="dictionary", attempts_per_account=attempts,
                         attacker_distribution=distribution),
            verifier,
            schema=ds.schema,
        )
        rows.append({"attempts": attempts, "brute_force": bf.rate, "dictionary": dc.rate})
        print(f"k={attempts:3d}: brute-force {bf.rate:.4f}  dictionary {dc.rate:.4f}")

    (out / "attack_rates.json").write_text(json.dumps(rows, indent=2))
    print(f"reports written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
