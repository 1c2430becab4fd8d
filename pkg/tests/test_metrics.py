"""Metrics tests: snapshots, anonymity sets, unicity, similarity, stability,
entropy, conditional entropy, and practicality statistics."""

from __future__ import annotations

import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpkit.metrics import (
    DAY_MS,
    DistributionSummary,
    anonymity_sets,
    attribute_entropy,
    attribute_practicality,
    conditional_entropy_matrix,
    consecutive_pairs,
    day_origin,
    fingerprint_practicality,
    fingerprint_size_bytes,
    max_entropy_bits,
    similarity,
    snapshot,
    stability_curve,
    unicity_rate,
)
from fpkit.model import AttributeDescriptor, Dataset, Entry

SCHEMA = [
    AttributeDescriptor("a", kind="categorical"),
    AttributeDescriptor("b", kind="categorical"),
]


def entry(uid, ts, a="x", b="y", times=None):
    return Entry(
        fingerprint={"a": a, "b": b},
        uid=uid,
        ts_ms=ts,
        ip_hash="00" * 32,
        per_attribute_time_ms=times,
    )


def dataset(entries, schema=None):
    return Dataset.build(schema or SCHEMA, entries)


class TestSnapshot:
    def test_latest_at_or_before_cutoff(self):
        ds = dataset([entry("u1", 2 * DAY_MS, a="day2"), entry("u1", 5 * DAY_MS, a="day5")])
        snap = snapshot(ds, 3, t0=0)
        ref = dataset([entry("u1", 0, a="day2")])
        assert snap.latest["u1"] == ref.entry_hashes()[0].digest

    def test_browser_first_seen_later_absent(self):
        ds = dataset([entry("u1", 7 * DAY_MS)])
        assert "u1" not in snapshot(ds, 3, t0=0).latest

    def test_negative_day_rejected(self):
        with pytest.raises(ValueError):
            snapshot(dataset([]), -1, t0=0)

    def test_matches_bruteforce_argmax(self):
        rng = random.Random(5)
        entries = []
        for b in range(3):
            for _ in range(6):
                entries.append(
                    entry(f"u{b}", rng.randrange(10 * DAY_MS), a=f"v{rng.randrange(4)}")
                )
        ds = dataset(entries)
        for tau in range(10):
            cutoff = (tau + 1) * DAY_MS - 1
            expected = {}
            for e in sorted(ds.entries, key=lambda e: e.ts_ms):
                if e.ts_ms <= cutoff:
                    expected[e.uid] = e  # later entries overwrite
            snap = snapshot(ds, tau, t0=0)
            assert set(snap.latest) == set(expected)
            hashes = ds.entry_hashes()
            index_of = {id(e): i for i, e in enumerate(ds.entries)}
            for uid, e in expected.items():
                assert snap.latest[uid] == hashes[index_of[id(e)]].digest

    def test_default_origin_is_midnight_of_earliest(self):
        ds = dataset([entry("u1", 3 * DAY_MS + 123)])
        assert day_origin(ds) == 3 * DAY_MS


class TestAnonymitySets:
    def test_shared_and_unique(self):
        ds = dataset(
            [entry("b1", 0, a="f1"), entry("b2", 0, a="f1"), entry("b3", 0, a="f2")]
        )
        histogram = anonymity_sets(snapshot(ds, 0, t0=0))
        assert histogram == {1: 1, 2: 1}

    def test_all_distinct(self):
        ds = dataset([entry(f"b{i}", 0, a=f"f{i}") for i in range(5)])
        assert anonymity_sets(snapshot(ds, 0, t0=0)) == {1: 5}

    def test_empty(self):
        ds = dataset([entry("b1", 5 * DAY_MS)])
        assert anonymity_sets(snapshot(ds, 0, t0=0)) == {}

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=30))
    def test_histogram_mass_equals_browser_count(self, choices):
        ds = dataset([entry(f"u{i}", 0, a=f"f{c}") for i, c in enumerate(choices)])
        snap = snapshot(ds, 0, t0=0)
        histogram = anonymity_sets(snap)
        assert sum(eps * count for eps, count in histogram.items()) == len(snap.latest)


class TestUnicity:
    def test_dataset_rate_per_definition(self):
        # f1 seen for b1 and b2, f2 for b3: one unique fingerprint over three
        # (fingerprint, browser) pairs.
        ds = dataset(
            [entry("b1", 0, a="f1"), entry("b2", 1, a="f1"), entry("b3", 2, a="f2")]
        )
        assert unicity_rate(ds) == pytest.approx(1 / 3)

    def test_snapshot_rate(self):
        ds = dataset(
            [entry("b1", 0, a="f1"), entry("b2", 0, a="f1"), entry("b3", 0, a="f2")]
        )
        assert unicity_rate(snapshot(ds, 0, t0=0)) == pytest.approx(1 / 3)

    def test_all_unique(self):
        ds = dataset([entry(f"b{i}", 0, a=f"f{i}") for i in range(4)])
        assert unicity_rate(snapshot(ds, 0, t0=0)) == 1.0

    def test_empty_returns_none(self):
        assert unicity_rate(dataset([])) is None
        assert unicity_rate(snapshot(dataset([entry("u", DAY_MS * 3)]), 0, t0=0)) is None

    def test_repeat_observations_counted_once(self):
        # The same (fingerprint, browser) pair at two timestamps is one pair.
        ds = dataset([entry("b1", 0, a="f1"), entry("b1", 5, a="f1"), entry("b2", 1, a="f2")])
        assert unicity_rate(ds) == 1.0

    def test_in_unit_interval(self):
        rng = random.Random(1)
        ds = dataset(
            [entry(f"b{i}", 0, a=f"f{rng.randrange(3)}") for i in range(20)]
        )
        assert 0.0 <= unicity_rate(ds) <= 1.0


class TestSimilarity:
    def test_reflexive_maximal(self):
        f = {"a": "x", "b": "y"}
        assert similarity(f, f, SCHEMA) == 1.0

    def test_definitional_arithmetic(self):
        # 262 attributes, 26 differ: 236/262.
        schema = [AttributeDescriptor(f"w{i}", kind="categorical") for i in range(262)]
        f = {d.name: "same" for d in schema}
        g = dict(f)
        for i in range(26):
            g[f"w{i}"] = "different"
        assert similarity(f, g, schema) == pytest.approx(236 / 262)

    def test_matches_loop_oracle(self):
        rng = random.Random(9)
        schema = [AttributeDescriptor(f"w{i}", kind="categorical") for i in range(40)]
        f = {d.name: str(rng.randrange(3)) for d in schema}
        g = {d.name: str(rng.randrange(3)) for d in schema}
        expected = sum(1 for d in schema if f[d.name] == g[d.name]) / len(schema)
        assert similarity(f, g, schema) == pytest.approx(expected)

    def test_symmetric(self):
        f = {"a": "1", "b": "2"}
        g = {"a": "1", "b": "3"}
        assert similarity(f, g, SCHEMA) == similarity(g, f, SCHEMA)

    def test_values_on_k_over_n_grid(self):
        f = {"a": "1", "b": "2"}
        g = {"a": "1", "b": "3"}
        sim = similarity(f, g, SCHEMA)
        assert sim in {0.0, 0.5, 1.0}


class TestConsecutivePairs:
    def test_adjacent_pairs_only(self):
        ds = dataset(
            [entry("b", 0, a="f1"), entry("b", 10, a="f2"), entry("b", 20, a="f1")]
        )
        pairs = consecutive_pairs(ds)
        assert [(p[0].fingerprint["a"], p[1].fingerprint["a"]) for p in pairs] == [
            ("f1", "f2"),
            ("f2", "f1"),
        ]

    def test_single_entry_no_pairs(self):
        assert consecutive_pairs(dataset([entry("b", 0)])) == []

    def test_gap_filter_matches_bruteforce(self):
        rng = random.Random(3)
        entries = []
        for b in range(4):
            ts = 0
            for _ in range(8):
                ts += rng.randrange(1, 3 * DAY_MS)
                entries.append(entry(f"u{b}", ts, a=f"v{rng.randrange(5)}"))
        ds = dataset(entries)
        lo, hi = 1.0, 2.0
        got = {
            (p[0].uid, p[0].ts_ms, p[1].ts_ms)
            for p in consecutive_pairs(ds, delta_days=(lo, hi), max_gap_days=float("inf"))
        }
        expected = set()
        by_uid: dict[str, list[Entry]] = {}
        for e in sorted(ds.entries, key=lambda e: (e.uid, e.ts_ms)):
            by_uid.setdefault(e.uid, []).append(e)
        for uid, history in by_uid.items():
            for x, y in zip(history, history[1:]):
                if lo * DAY_MS <= y.ts_ms - x.ts_ms < hi * DAY_MS:
                    expected.add((uid, x.ts_ms, y.ts_ms))
        assert got == expected

    def test_bogus_gap_beyond_limit_excluded(self):
        ds = dataset([entry("b", 0), entry("b", 10 * DAY_MS, a="q")])
        assert consecutive_pairs(ds, max_gap_days=5) == []


class TestStabilityCurve:
    def test_bucket_mean(self):
        schema = [AttributeDescriptor(f"w{i}", kind="categorical") for i in range(10)]
        # Pair 1: 9/10 identical (sim 0.9); pair 2: 8/10 (sim 0.8).
        def make(uid, ts, diffs):
            fp = {d.name: "same" for d in schema}
            for i in range(diffs):
                fp[f"w{i}"] = f"x-{uid}-{ts}-{i}"
            return Entry(fingerprint=fp, uid=uid, ts_ms=ts, ip_hash="00" * 32)

        entries = [
            make("b1", 0, 0),
            make("b1", DAY_MS // 2, 1),
            make("b2", 0, 0),
            make("b2", DAY_MS // 2, 2),
        ]
        curve = stability_curve(Dataset.build(schema, entries), min_pairs=1)
        assert len(curve.buckets) == 1
        assert curve.buckets[0].average_similarity == pytest.approx(0.85)

    def test_under_min_pairs_excluded_not_zeroed(self):
        entries = []
        for i in range(9):
            entries.append(entry(f"b{i}", 0, a="f1"))
            entries.append(entry(f"b{i}", DAY_MS // 3, a="f2"))
        curve = stability_curve(dataset(entries), min_pairs=10)
        assert len(curve.buckets) == 1
        bucket = curve.buckets[0]
        assert not bucket.included
        assert bucket.pair_count == 9
        assert bucket.average_similarity is not None
        assert curve.included_buckets() == []

    def test_matches_bruteforce_recomputation(self):
        rng = random.Random(11)
        entries = []
        for b in range(6):
            ts = 0
            for _ in range(6):
                ts += rng.randrange(1, 4 * DAY_MS)
                entries.append(
                    entry(f"u{b}", ts, a=f"v{rng.randrange(3)}", b=f"w{rng.randrange(3)}")
                )
        ds = dataset(entries)
        curve = stability_curve(ds, min_pairs=1)
        sums: dict[int, list[float]] = {}
        for x, y in consecutive_pairs(ds):
            day = (y.ts_ms - x.ts_ms) // DAY_MS
            sums.setdefault(day, []).append(similarity(x.fingerprint, y.fingerprint, SCHEMA))
        assert {b.day for b in curve.buckets} == set(sums)
        for bucket in curve.buckets:
            assert bucket.average_similarity == pytest.approx(
                sum(sums[bucket.day]) / len(sums[bucket.day])
            )


def test_consecutive_pairs_after_dedup_are_strictly_dissimilar():
    from fpkit.preprocess import deduplicate
    from fpkit.synth import AttributeSpec, GeneratorConfig, generate

    config = GeneratorConfig(
        browser_count=60,
        days=40,
        attributes=tuple(
            AttributeSpec(name=f"s{i}", pool_size=3, change_probability=0.3)
            for i in range(5)
        ),
        seed=14,
        visits_mean=5.0,
    )
    ds = deduplicate(generate(config))
    pairs = consecutive_pairs(ds, max_gap_days=float("inf"))
    assert pairs
    for a, b in pairs:
        assert similarity(a.fingerprint, b.fingerprint, ds.schema) < 1.0


class TestAttributeEntropy:
    def test_max_entropy_at_reference_population_size(self):
        assert max_entropy_bits(4_145_408) == pytest.approx(21.983, abs=1e-3)

    def test_constant_attribute_zero(self):
        ds = dataset([entry(f"u{i}", i, a="same", b=f"v{i}") for i in range(8)])
        stats = attribute_entropy(ds)
        assert stats["a"].entropy_bits == 0.0
        assert stats["a"].normalized_entropy == 0.0

    def test_two_balanced_values_over_four(self):
        ds = dataset(
            [
                entry("u0", 0, a="x", b="p"),
                entry("u1", 1, a="x", b="q"),
                entry("u2", 2, a="y", b="r"),
                entry("u3", 3, a="y", b="s"),
            ]
        )
        stats = attribute_entropy(ds)
        # -2*(1/2)log2(1/2) = 1 bit; H_M = log2(4) = 2.
        assert stats["a"].entropy_bits == pytest.approx(1.0)
        assert stats["a"].normalized_entropy == pytest.approx(0.5)

    def test_entropy_bounded_by_log_distinct(self):
        rng = random.Random(2)
        ds = dataset(
            [entry(f"u{i}", i, a=f"v{rng.randrange(6)}") for i in range(64)]
        )
        stats = attribute_entropy(ds)
        k = stats["a"].distinct_values
        assert stats["a"].entropy_bits <= math.log2(k) + 1e-9

    def test_single_fingerprint_normalization_absent(self):
        ds = dataset([entry("u0", 0)])
        stats = attribute_entropy(ds)
        assert stats["a"].normalized_entropy is None

    def test_flags_count_as_values(self):
        from fpkit.model import ErrorFlag

        ds = dataset(
            [
                entry("u0", 0, a=ErrorFlag.TIMEOUT),
                entry("u1", 1, a="x"),
            ]
        )
        stats = attribute_entropy(ds)
        assert stats["a"].distinct_values == 2
        assert stats["a"].entropy_bits == pytest.approx(1.0)


class TestConditionalEntropy:
    def test_copy_attribute_fully_inferable(self):
        ds = dataset([entry(f"u{i}", i, a=f"v{i % 3}", b=f"v{i % 3}") for i in range(12)])
        result = conditional_entropy_matrix(ds)
        assert result.nce("a", "b") == pytest.approx(0.0, abs=1e-12)

    def test_self_pair_is_zero(self):
        ds = dataset([entry(f"u{i}", i, a=f"v{i % 4}") for i in range(16)])
        result = conditional_entropy_matrix(ds)
        assert result.nce("a", "a") == 0.0

    def test_constant_known_attribute_leaves_normalized_entropy(self):
        ds = dataset([entry(f"u{i}", i, a="const", b=f"v{i % 4}") for i in range(16)])
        result = conditional_entropy_matrix(ds)
        stats = attribute_entropy(ds)
        assert result.nce("a", "b") == pytest.approx(stats["b"].normalized_entropy)

    def test_independent_fair_coins_one_bit(self):
        # Four uniform fingerprints enumerate the joint distribution exactly.
        ds = dataset(
            [
                entry("u0", 0, a="0", b="0"),
                entry("u1", 1, a="0", b="1"),
                entry("u2", 2, a="1", b="0"),
                entry("u3", 3, a="1", b="1"),
            ]
        )
        result = conditional_entropy_matrix(ds)
        assert result.nce("a", "b") * result.h_max_bits == pytest.approx(1.0)

    def test_conditioning_never_increases_entropy(self):
        rng = random.Random(7)
        schema = [AttributeDescriptor(f"c{i}", kind="categorical") for i in range(6)]
        entries = []
        for i in range(100):
            fp = {d.name: str(rng.randrange(4)) for d in schema}
            entries.append(Entry(fingerprint=fp, uid=f"u{i}", ts_ms=i, ip_hash="00" * 32))
        ds = Dataset.build(schema, entries)
        result = conditional_entropy_matrix(ds)
        stats = attribute_entropy(ds)
        for known in result.attributes:
            for inferred in result.attributes:
                lhs = result.nce(known, inferred) * result.h_max_bits
                assert lhs <= stats[inferred].entropy_bits + 1e-9

    def test_matches_enumeration_oracle(self):
        rng = random.Random(13)
        entries = [
            entry(f"u{i}", i, a=f"v{rng.randrange(3)}", b=f"w{rng.randrange(4)}")
            for i in range(50)
        ]
        ds = dataset(entries)
        result = conditional_entropy_matrix(ds)
        # Direct joint-frequency evaluation of the conditional entropy.
        joint = Counter(
            (e.fingerprint["a"], e.fingerprint["b"]) for e in ds.entries
        )
        marginal = Counter(e.fingerprint["a"] for e in ds.entries)
        n = len(ds.entries)
        expected = -sum(
            (c / n) * math.log2((c / n) / (marginal[v] / n))
            for (v, _), c in joint.items()
        )
        assert result.nce("a", "b") * result.h_max_bits == pytest.approx(expected)

    def test_summary_excludes_sources_and_self(self):
        schema = [
            AttributeDescriptor("src", kind="textual"),
            AttributeDescriptor("part", kind="textual", extracted_from="src"),
            AttributeDescriptor("other", kind="categorical"),
        ]
        entries = [
            Entry(
                fingerprint={"src": f"s{i % 2}", "part": f"p{i % 2}", "other": f"o{i % 3}"},
                uid=f"u{i}",
                ts_ms=i,
                ip_hash="00" * 32,
            )
            for i in range(12)
        ]
        ds = Dataset.build(schema, entries)
        result = conditional_entropy_matrix(ds)
        summary = result.summary()
        assert "src" not in summary  # source attributes dropped
        assert set(summary) == {"part", "other"}
        # part's summary must not use its own source as a known attribute:
        # with only "other" left, min == max == NCE(part | other).
        assert summary["part"]["min"] == pytest.approx(result.nce("other", "part"))
        assert summary["part"]["max"] == pytest.approx(result.nce("other", "part"))


class TestAttributePracticality:
    def test_sameness_rates(self):
        entries = [
            entry("b1", 0, a="k", b="m0"),
            entry("b1", 1, a="k", b="m1"),
            entry("b1", 2, a="k", b="m2"),
            entry("b2", 0, a="k", b="n0"),
            entry("b2", 1, a="k", b="n1"),
            entry("b2", 2, a="q", b="n2"),
        ]
        stats = attribute_practicality(dataset(entries))
        # 4 consecutive pairs; attribute a unchanged in 3 of 4.
        assert stats["a"].sameness_rate == pytest.approx(0.75)
        assert stats["b"].sameness_rate == 0.0

    def test_unchanged_attribute_sameness_one(self):
        entries = [entry("b1", 0, b="x0"), entry("b1", 1, b="x1")]
        stats = attribute_practicality(dataset(entries))
        assert stats["a"].sameness_rate == 1.0

    def test_fr_size_two_bytes(self):
        entries = [entry("b1", 0, a="fr")]
        stats = attribute_practicality(dataset(entries))
        assert stats["a"].median_size_bytes == 2

    def test_median_is_lower_middle(self):
        entries = [
            entry("b1", 0, a="x"),
            entry("b2", 0, a="xx"),
            entry("b3", 0, a="xxx"),
            entry("b4", 0, a="xxxx"),
        ]
        stats = attribute_practicality(dataset(entries))
        assert stats["a"].median_size_bytes == 2

    def test_collection_time_respects_outlier_cap(self):
        entries = [
            entry("b1", 0, times={"a": 10, "b": 1, "_total": 2_000}),
            entry("b2", 0, times={"a": 50, "b": 1, "_total": 31_000}),
        ]
        stats = attribute_practicality(dataset(entries), outlier_cap_s=30.0)
        assert stats["a"].median_collection_time_ms == 10


class TestFingerprintPracticality:
    def test_size_anchor(self):
        # Two attributes whose serialized values sum to 7,550 bytes.
        fp = {"a": "x" * 7000, "b": "y" * 550}
        assert fingerprint_size_bytes(fp, SCHEMA) == 7_550
        ds = dataset([Entry(fingerprint=fp, uid="u", ts_ms=0, ip_hash="00" * 32)])
        report = fingerprint_practicality(ds)
        assert report.size_bytes["overall"].median == 7_550

    def test_time_outlier_boundary(self):
        entries = [
            entry("b1", 0, times={"_total": 31_000}),
            entry("b2", 0, times={"_total": 2_000}),
        ]
        report = fingerprint_practicality(dataset(entries), outlier_cap_s=30.0)
        assert report.time_outliers == 1
        assert report.time_ms["overall"].count == 1

    def test_percentiles_match_sort_oracle(self):
        rng = random.Random(21)
        entries = [
            entry(f"b{i}", 0, times={"_total": rng.randrange(100, 20_000)})
            for i in range(40)
        ]
        report = fingerprint_practicality(dataset(entries))
        values = sorted(
            e.per_attribute_time_ms["_total"] for e in entries
        )
        assert report.time_ms["overall"].median == values[(len(values) - 1) // 2]
        assert report.time_ms["overall"].p95 == values[math.ceil(0.95 * len(values)) - 1]
        assert report.time_ms["overall"].minimum == values[0]
        assert report.time_ms["overall"].maximum == values[-1]

    def test_per_device_type_split(self):
        schema = [
            AttributeDescriptor("userAgent", kind="textual"),
            AttributeDescriptor("x", kind="categorical"),
        ]
        mobile_ua = "Mozilla/5.0 (Linux; Android 6.0) Mobile Safari"
        desktop_ua = "Mozilla/5.0 (Windows NT 10.0)"
        entries = [
            Entry({"userAgent": mobile_ua, "x": "1"}, "m", 0, "00" * 32,
                  per_attribute_time_ms={"_total": 4_000}),
            Entry({"userAgent": desktop_ua, "x": "2"}, "d", 0, "00" * 32,
                  per_attribute_time_ms={"_total": 2_000}),
        ]
        report = fingerprint_practicality(Dataset.build(schema, entries))
        assert report.time_ms["mobile"].median == 4_000
        assert report.time_ms["desktop"].median == 2_000

    def test_empty_summary(self):
        summary = DistributionSummary.from_values([])
        assert summary.count == 0 and summary.median is None
