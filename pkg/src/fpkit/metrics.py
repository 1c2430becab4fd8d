"""Fingerprint- and attribute-level properties: anonymity sets, unicity,
time-partitioned snapshots, stability, entropy, conditional entropy, and
size/time statistics.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import (
    AttributeDescriptor,
    AttributeValue,
    Dataset,
    Entry,
    intern_key,
    serialize_value,
    total_time_ms,
    value_identical,
)
from .preprocess import device_type_of

DAY_MS = 86_400_000


def day_origin(ds: Dataset) -> int:
    """Default day-0 origin: midnight UTC of the earliest entry."""
    if not ds.entries:
        return 0
    earliest = min(e.ts_ms for e in ds.entries)
    return (earliest // DAY_MS) * DAY_MS


@dataclass(frozen=True)
class Snapshot:
    """Per-browser latest fingerprint hash at or before the end of a day."""

    day_index: int
    latest: Mapping[str, bytes]


def snapshot(ds: Dataset, tau: int, t0: int | None = None) -> Snapshot:
    """State of each browser's fingerprint after ``tau`` days.

    For each browser with an entry at or before the end of day ``tau``
    (``t0 + (tau + 1) * DAY_MS - 1``), the hash of its latest such
    fingerprint. Browsers first seen later are absent.
    """
    if tau < 0:
        raise ValueError("day index must be non-negative")
    origin = day_origin(ds) if t0 is None else t0
    cutoff = origin + (tau + 1) * DAY_MS - 1
    hashes = ds.entry_hashes()
    latest: dict[str, bytes] = {}
    # Entries are sorted by (uid, ts_ms): the last one at or before the
    # cutoff wins per browser.
    for i, entry in enumerate(ds.entries):
        if entry.ts_ms <= cutoff:
            latest[entry.uid] = hashes[i].digest
    return Snapshot(day_index=tau, latest=latest)


def anonymity_sets(s: Snapshot) -> dict[int, int]:
    """Histogram mapping anonymity-set size to the number of fingerprints
    shared by exactly that many browsers."""
    per_hash = Counter(s.latest.values())
    histogram: Counter[int] = Counter(per_hash.values())
    return dict(histogram)


def unicity_rate(target: Dataset | Snapshot) -> float | None:
    """Proportion of fingerprints observed for a single browser.

    On a full dataset: unique fingerprints over distinct (fingerprint,
    browser) pairs. On a snapshot: fingerprints of anonymity-set size one
    over the number of browsers present. Empty input yields ``None``.
    """
    if isinstance(target, Snapshot):
        if not target.latest:
            return None
        histogram = anonymity_sets(target)
        return histogram.get(1, 0) / len(target.latest)
    if not target.entries:
        return None
    hashes = target.entry_hashes()
    browsers_per_hash: dict[bytes, set[str]] = {}
    for i, entry in enumerate(target.entries):
        browsers_per_hash.setdefault(hashes[i].digest, set()).add(entry.uid)
    unique = sum(1 for uids in browsers_per_hash.values() if len(uids) == 1)
    pairs = sum(len(uids) for uids in browsers_per_hash.values())
    return unique / pairs


def similarity(
    f: Mapping[str, AttributeValue],
    g: Mapping[str, AttributeValue],
    schema: Sequence[AttributeDescriptor],
) -> float:
    """Proportion of identical attributes between two fingerprints."""
    if not schema:
        raise ValueError("similarity requires a non-empty schema")
    identical = 0
    for descriptor in schema:
        try:
            a, b = f[descriptor.name], g[descriptor.name]
        except KeyError as exc:
            raise ValueError(f"fingerprint missing attribute {exc}") from None
        if value_identical(a, b):
            identical += 1
    return identical / len(schema)


def consecutive_pairs(
    ds: Dataset,
    delta_days: tuple[float, float] | None = None,
    max_gap_days: float | None = None,
) -> list[tuple[Entry, Entry]]:
    """Adjacent same-browser entry pairs, optionally filtered by time gap.

    ``delta_days`` is a half-open range [lo, hi) in days. Pairs whose gap
    exceeds ``max_gap_days`` (defaulting to the dataset's own time span) are
    excluded as bogus.
    """
    max_gap_ms: float | None
    if max_gap_days is None:
        if ds.entries:
            span = max(e.ts_ms for e in ds.entries) - min(e.ts_ms for e in ds.entries)
            max_gap_ms = max(span, DAY_MS)
        else:
            max_gap_ms = 0
    elif math.isinf(max_gap_days):
        max_gap_ms = None
    else:
        max_gap_ms = max_gap_days * DAY_MS
    pairs: list[tuple[Entry, Entry]] = []
    for indices in ds.by_browser().values():
        for prev_i, next_i in zip(indices, indices[1:]):
            a, b = ds.entries[prev_i], ds.entries[next_i]
            gap = b.ts_ms - a.ts_ms
            if max_gap_ms is not None and gap > max_gap_ms:
                continue
            if delta_days is not None:
                lo, hi = delta_days
                if not (lo * DAY_MS <= gap < hi * DAY_MS):
                    continue
            pairs.append((a, b))
    return pairs


@dataclass(frozen=True)
class StabilityBucket:
    day: int
    pair_count: int
    average_similarity: float | None
    included: bool


@dataclass(frozen=True)
class StabilityCurve:
    """Average similarity of consecutive pairs per elapsed-days bucket.

    Buckets under the minimum pair count are marked excluded, not zeroed.
    """

    buckets: tuple[StabilityBucket, ...]
    min_pairs: int

    def included_buckets(self) -> list[StabilityBucket]:
        return [b for b in self.buckets if b.included]

    def to_json(self) -> dict:
        return {
            "min_pairs": self.min_pairs,
            "buckets": [
                {
                    "day": b.day,
                    "pairs": b.pair_count,
                    "average_similarity": b.average_similarity,
                    "included": b.included,
                }
                for b in self.buckets
            ],
        }


def stability_curve(
    ds: Dataset,
    min_pairs: int = 10,
    max_gap_days: float | None = None,
) -> StabilityCurve:
    """Average similarity between consecutive fingerprints per day bucket."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for a, b in consecutive_pairs(ds, max_gap_days=max_gap_days):
        day = (b.ts_ms - a.ts_ms) // DAY_MS
        sim = similarity(a.fingerprint, b.fingerprint, ds.schema)
        sums[day] = sums.get(day, 0.0) + sim
        counts[day] = counts.get(day, 0) + 1
    buckets = []
    for day in sorted(counts):
        count = counts[day]
        included = count >= min_pairs
        buckets.append(
            StabilityBucket(
                day=int(day),
                pair_count=count,
                average_similarity=sums[day] / count,
                included=included,
            )
        )
    return StabilityCurve(buckets=tuple(buckets), min_pairs=min_pairs)


# ---------------------------------------------------------------------------
# Attribute-level statistics


def _intern_columns(ds: Dataset) -> dict[str, np.ndarray]:
    """Integer codes per attribute column; two cells share a code iff their
    values are identical in the ``value_identical`` sense."""
    columns: dict[str, np.ndarray] = {}
    n = len(ds.entries)
    for descriptor in ds.schema:
        codes = np.empty(n, dtype=np.int64)
        table: dict = {}
        name = descriptor.name
        for i, entry in enumerate(ds.entries):
            key = intern_key(entry.fingerprint[name])
            code = table.get(key)
            if code is None:
                code = len(table)
                table[key] = code
            codes[i] = code
        columns[name] = codes
    return columns


def _entropy_bits(codes: np.ndarray) -> float:
    if codes.size == 0:
        return 0.0
    _, counts = np.unique(codes, return_counts=True)
    p = counts / codes.size
    return float(-(p * np.log2(p)).sum())


@dataclass
class AttributeStats:
    name: str
    distinct_values: int = 0
    entropy_bits: float = 0.0
    normalized_entropy: float | None = None
    sameness_rate: float | None = None
    median_size_bytes: int | None = None
    median_collection_time_ms: int | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "distinct_values": self.distinct_values,
            "entropy_bits": self.entropy_bits,
            "normalized_entropy": self.normalized_entropy,
            "sameness_rate": self.sameness_rate,
            "median_size_bytes": self.median_size_bytes,
            "median_collection_time_ms": self.median_collection_time_ms,
        }


def max_entropy_bits(fingerprint_count: int) -> float:
    """Upper bound on attribute entropy for a dataset of N fingerprints."""
    if fingerprint_count <= 0:
        raise ValueError("fingerprint count must be positive")
    return math.log2(fingerprint_count)


def attribute_entropy(ds: Dataset) -> dict[str, AttributeStats]:
    """Shannon entropy and normalized entropy per attribute.

    Frequencies are taken over all post-deduplication fingerprints; error
    flags count as values. Normalization is undefined for datasets of one
    fingerprint or fewer.
    """
    n = len(ds.entries)
    columns = _intern_columns(ds)
    h_max = max_entropy_bits(n) if n > 1 else None
    stats = {}
    for descriptor in ds.schema:
        codes = columns[descriptor.name]
        h = _entropy_bits(codes)
        stats[descriptor.name] = AttributeStats(
            name=descriptor.name,
            distinct_values=int(np.unique(codes).size) if n else 0,
            entropy_bits=h,
            normalized_entropy=(h / h_max) if h_max else None,
        )
    return stats


def _lower_median(values: Sequence[int | float]) -> int | float | None:
    """Median; the lower middle element for even-sized samples."""
    if not values:
        return None
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


@dataclass(frozen=True)
class ConditionalEntropyResult:
    attributes: tuple[str, ...]
    # matrix[i][j] = normalized H(attribute j | attribute i), i known.
    matrix: np.ndarray
    h_max_bits: float
    excluded_pairs: frozenset[tuple[str, str]]
    source_attributes: frozenset[str] = frozenset()

    def nce(self, known: str, inferred: str) -> float:
        i = self.attributes.index(known)
        j = self.attributes.index(inferred)
        return float(self.matrix[i][j])

    def summary(self) -> dict[str, dict[str, float]]:
        """Min/avg/max NCE per inferred attribute over known attributes,
        skipping self-pairs, source<->extracted pairs, and source attributes
        themselves."""
        out: dict[str, dict[str, float]] = {}
        for j, inferred in enumerate(self.attributes):
            if inferred in self.source_attributes:
                continue
            values = [
                float(self.matrix[i][j])
                for i, known in enumerate(self.attributes)
                if known != inferred
                and (known, inferred) not in self.excluded_pairs
            ]
            if not values:
                continue
            out[inferred] = {
                "min": min(values),
                "avg": sum(values) / len(values),
                "max": max(values),
            }
        return out


def conditional_entropy_matrix(
    ds: Dataset,
    exclusions: Sequence[tuple[str, str]] | None = None,
) -> ConditionalEntropyResult:
    """Normalized conditional entropy H(a_j | a_i) / H_M for attribute pairs.

    H(a_j | a_i) is computed from joint relative frequencies over the
    fingerprints as H(a_i, a_j) - H(a_i), in bits. Source<->extracted pairs
    (both directions) are excluded from the summary; pass ``exclusions`` to
    extend them.
    """
    if not ds.entries:
        raise ValueError("conditional entropy requires a non-empty dataset")
    names = tuple(d.name for d in ds.schema)
    columns = _intern_columns(ds)
    h_max = max_entropy_bits(max(len(ds.entries), 2))

    excluded: set[tuple[str, str]] = set(exclusions or ())
    sources: set[str] = set()
    for descriptor in ds.schema:
        if descriptor.extracted_from is not None:
            sources.add(descriptor.extracted_from)
            excluded.add((descriptor.extracted_from, descriptor.name))
            excluded.add((descriptor.name, descriptor.extracted_from))

    marginals = {name: _entropy_bits(columns[name]) for name in names}
    size = len(names)
    matrix = np.zeros((size, size), dtype=np.float64)
    for i, known in enumerate(names):
        codes_i = columns[known]
        # Joint codes: known's code shifted past the inferred attribute's
        # code space.
        for j in range(i + 1, size):
            inferred = names[j]
            codes_j = columns[inferred]
            base = int(codes_j.max()) + 1 if codes_j.size else 1
            joint = _entropy_bits(codes_i * base + codes_j)
            matrix[i][j] = max(joint - marginals[known], 0.0) / h_max
            matrix[j][i] = max(joint - marginals[inferred], 0.0) / h_max
    return ConditionalEntropyResult(
        attributes=names,
        matrix=matrix,
        h_max_bits=h_max,
        excluded_pairs=frozenset(excluded),
        source_attributes=frozenset(sources),
    )


def attribute_practicality(
    ds: Dataset,
    outlier_cap_s: float = 30.0,
) -> dict[str, AttributeStats]:
    """Sameness rate, median serialized size, and median collection time per
    attribute.

    The sameness rate covers every consecutive same-browser pair regardless
    of time gap. Collection times ignore entries whose total collection time
    exceeds the outlier cap.
    """
    pairs = consecutive_pairs(ds, max_gap_days=float("inf"))
    cap_ms = outlier_cap_s * 1000.0
    stats = {d.name: AttributeStats(name=d.name) for d in ds.schema}

    same_counts = {d.name: 0 for d in ds.schema}
    for a, b in pairs:
        for name in same_counts:
            if value_identical(a.fingerprint[name], b.fingerprint[name]):
                same_counts[name] += 1
    for name, stat in stats.items():
        stat.sameness_rate = same_counts[name] / len(pairs) if pairs else None

    sizes: dict[str, list[int]] = {d.name: [] for d in ds.schema}
    times: dict[str, list[int]] = {d.name: [] for d in ds.schema}
    for entry in ds.entries:
        total = total_time_ms(entry)
        outlier = total is not None and total > cap_ms
        for name in sizes:
            sizes[name].append(len(serialize_value(entry.fingerprint[name]).encode("utf-8")))
            if entry.per_attribute_time_ms is not None and not outlier:
                t = entry.per_attribute_time_ms.get(name)
                if t is not None:
                    times[name].append(t)
    for name, stat in stats.items():
        stat.median_size_bytes = _lower_median(sizes[name])
        stat.median_collection_time_ms = _lower_median(times[name])
    return stats


@dataclass(frozen=True)
class DistributionSummary:
    count: int
    minimum: float | None
    median: float | None
    p95: float | None
    maximum: float | None

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "DistributionSummary":
        if not values:
            return cls(0, None, None, None, None)
        ordered = sorted(values)
        return cls(
            count=len(ordered),
            minimum=ordered[0],
            median=_lower_median(ordered),
            p95=ordered[min(len(ordered) - 1, math.ceil(0.95 * len(ordered)) - 1)],
            maximum=ordered[-1],
        )

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "min": self.minimum,
            "median": self.median,
            "p95": self.p95,
            "max": self.maximum,
        }


@dataclass(frozen=True)
class PracticalityReport:
    time_ms: dict[str, DistributionSummary]
    size_bytes: dict[str, DistributionSummary]
    time_outliers: int

    def to_json(self) -> dict:
        return {
            "time_ms": {k: v.to_json() for k, v in self.time_ms.items()},
            "size_bytes": {k: v.to_json() for k, v in self.size_bytes.items()},
            "time_outliers": self.time_outliers,
        }


def fingerprint_size_bytes(
    fingerprint: Mapping[str, AttributeValue],
    schema: Sequence[AttributeDescriptor],
) -> int:
    """UTF-8 byte size of the serialized attribute values, metadata excluded."""
    return sum(
        len(serialize_value(fingerprint[d.name]).encode("utf-8")) for d in schema
    )


def fingerprint_practicality(
    ds: Dataset,
    outlier_cap_s: float = 30.0,
    ua_attribute: str = "userAgent",
) -> PracticalityReport:
    """Collection-time and size distributions, overall and per device type.

    Entries whose recorded total collection time exceeds the cap are counted
    as outliers and left out of the time distributions.
    """
    cap_ms = outlier_cap_s * 1000.0
    times: dict[str, list[float]] = {"overall": []}
    sizes: dict[str, list[float]] = {"overall": []}
    outliers = 0
    has_ua = any(d.name == ua_attribute for d in ds.schema)
    for entry in ds.entries:
        group = device_type_of(entry, ua_attribute) if has_ua else None
        size = fingerprint_size_bytes(entry.fingerprint, ds.schema)
        sizes["overall"].append(size)
        if group:
            sizes.setdefault(group, []).append(size)
        total = total_time_ms(entry)
        if total is None:
            continue
        if total > cap_ms:
            outliers += 1
            continue
        times["overall"].append(total)
        if group:
            times.setdefault(group, []).append(total)
    return PracticalityReport(
        time_ms={k: DistributionSummary.from_values(v) for k, v in times.items()},
        size_bytes={k: DistributionSummary.from_values(v) for k, v in sizes.items()},
        time_outliers=outliers,
    )
