#!/usr/bin/env python3
"""Property study on a synthetic population.

Generates a raw dataset, runs the full preprocessing pipeline, and reports
distinctiveness (anonymity sets, unicity through time), stability (average
similarity per elapsed-days bucket), and per-attribute statistics.

Usage: python scripts/run_property_study.py [--browsers N] [--out DIR]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from fpkit.metrics import (
    DAY_MS,
    anonymity_sets,
    attribute_entropy,
    attribute_practicality,
    conditional_entropy_matrix,
    fingerprint_practicality,
    snapshot,
    stability_curve,
    unicity_rate,
)
from fpkit.preprocess import clean, deduplicate, resynchronize_uids
from fpkit.synth import AttributeSpec, CorrelationGroup, GeneratorConfig, generate


def build_config(browsers: int) -> GeneratorConfig:
    attributes = [
        AttributeSpec(name="canvasPng", kind="categorical", dynamic=True,
                      pool_size=2000, change_probability=0.08),
        AttributeSpec(name="canvasJpeg", kind="categorical", dynamic=True,
                      pool_size=1200, change_probability=0.06),
        AttributeSpec(name="audioSimple", kind="categorical", dynamic=True,
                      pool_size=300, change_probability=0.04),
        AttributeSpec(name="screenWidth", kind="numeric",
                      numeric_range=(320, 3840), change_probability=0.02),
        AttributeSpec(name="innerHeight", kind="numeric",
                      numeric_range=(400, 2000), change_probability=0.09),
        AttributeSpec(name="timezone", kind="numeric", numeric_range=(-11, 12),
                      change_probability=0.002),
        AttributeSpec(name="language", kind="textual", pool_size=30, skew=0.5,
                      change_probability=0.001),
        AttributeSpec(name="fonts", kind="set", pool_size=800,
                      change_probability=0.03),
        AttributeSpec(name="plugins", kind="textual", pool_size=600, skew=0.9,
                      change_probability=0.05),
        AttributeSpec(name="platform", kind="categorical", pool_size=8, skew=0.5,
                      group="env"),
        AttributeSpec(name="vendor", kind="categorical", pool_size=8, skew=0.5,
                      group="env"),
        AttributeSpec(name="hardwareConcurrency", kind="numeric", pool_size=8,
                      numeric_range=(1, 32), change_probability=0.005),
        AttributeSpec(name="doNotTrack", kind="categorical", pool_size=3,
                      skew=0.2, change_probability=0.01),
    ]
    return GeneratorConfig(
        browser_count=browsers,
        days=180,
        attributes=tuple(attributes),
        groups=(CorrelationGroup(name="env", members=("platform", "vendor"),
                                 profile_count=8),),
        seed=42,
        visits_mean=4.0,
        revisit_gap_days=8.0,
        robot_fraction=0.03,
        cookie_churn_probability=0.04,
        arrival_spikes=((38, 4.0), (43, 3.0)),
        emit_times=True,
        time_outlier_fraction=0.005,
    )


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--browsers", type=int, default=3000)
    parser.add_argument("--out", default="out/property_study")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    config = build_config(args.browsers)
    raw = generate(config)
    window = (config.t0_ms, config.t0_ms + config.days * DAY_MS - 1)
    cleaned, report = clean(raw, window)
    ds = deduplicate(resynchronize_uids(cleaned))
    print(f"raw entries:        {len(raw.entries)}")
    print(f"after cleaning:     {len(cleaned.entries)}  {report.to_json()}")
    print(f"working dataset:    {len(ds.entries)} fingerprints, "
          f"{len(ds.browsers())} browsers")

    days = config.days
    per_day = []
    for tau in range(0, days, 7):
        snap = snapshot(ds, tau)
        per_day.append({
            "day": tau,
            "browsers": len(snap.latest),
            "unicity": unicity_rate(snap),
            "anonymity_sets": {str(k): v for k, v in sorted(anonymity_sets(snap).items())},
        })
    final = per_day[-1]
    print(f"unicity day {final['day']}: {final['unicity']:.3f} "
          f"over {final['browsers']} browsers")

    curve = stability_curve(ds, min_pairs=10)
    included = curve.included_buckets()
    if included:
        print(f"stability: {included[0].average_similarity:.3f} at day "
              f"{included[0].day} -> {included[-1].average_similarity:.3f} "
              f"at day {included[-1].day}")

    entropy = attribute_entropy(ds)
    practicality = attribute_practicality(ds)
    nce = conditional_entropy_matrix(ds)
    fp_stats = fingerprint_practicality(ds)
    ranked = sorted(
        entropy.values(), key=lambda s: -(s.normalized_entropy or 0.0)
    )
    print("top attributes by normalized entropy:")
    for stat in ranked[:5]:
        same = practicality[stat.name].sameness_rate
        same_text = f"{same:.3f}" if same is not None else "n/a"
        print(f"  {stat.name:22s} Hn={stat.normalized_entropy:.3f} "
              f"sameness={same_text}")

    (out / "per_day.json").write_text(json.dumps(per_day, indent=2))
    (out / "stability.json").write_text(json.dumps(curve.to_json(), indent=2))
    (out / "attributes.json").write_text(json.dumps(
        {
            name: {
                **entropy[name].to_json(),
                "sameness_rate": practicality[name].sameness_rate,
                "median_size_bytes": practicality[name].median_size_bytes,
                "median_collection_time_ms": practicality[name].median_collection_time_ms,
            }
            for name in entropy
        },
        indent=2,
    ))
    (out / "nce_summary.json").write_text(json.dumps(nce.summary(), indent=2))
    (out / "fingerprints.json").write_text(json.dumps(fp_stats.to_json(), indent=2))
    print(f"reports written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
