"""Fingerprint verification: the simple mechanism counts identical
attributes, the advanced one counts attributes whose per-type distance falls
below a learned threshold. Both are evaluated through month-sampled
comparison sets and FMR/FNMR/EER curves.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .metrics import DAY_MS, day_origin
from .model import (
    AttributeDescriptor,
    AttributeValue,
    Dataset,
    Entry,
    ErrorFlag,
    intern_key,
    serialize_value,
    value_identical,
)

MONTH_MS = 30 * DAY_MS

SAME_BROWSER = "same-browser"
DIFFERENT_BROWSERS = "different-browsers"

# Distance reported for a categorical mismatch or a flag/value mismatch;
# larger than any finite threshold.
MISMATCH = float("inf")


@dataclass(frozen=True)
class ComparisonPair:
    """Two fingerprints compared within one month sample."""

    entry_a: Entry
    entry_b: Entry
    label: str
    month_index: int

    @property
    def fingerprint_a(self) -> Mapping[str, AttributeValue]:
        return self.entry_a.fingerprint

    @property
    def fingerprint_b(self) -> Mapping[str, AttributeValue]:
        return self.entry_b.fingerprint


@dataclass(frozen=True)
class MonthSets:
    month_index: int
    same: tuple[ComparisonPair, ...]
    different: tuple[ComparisonPair, ...]


def build_comparison_sets(
    ds: Dataset,
    months: int = 6,
    seed: int = 0,
    t0: int | None = None,
) -> list[MonthSets]:
    """Same-browser and different-browsers comparison pairs per month sample.

    Months are 30-day windows counted from the dataset's day-0 origin. The
    same-browser set holds every consecutive pair of a browser with both
    entries inside the window; the different-browsers set is an equal-sized
    seeded uniform sample of cross-browser entry pairs from the same window.
    """
    if months < 1:
        raise ValueError("months must be positive")
    origin = day_origin(ds) if t0 is None else t0
    month_entries: list[list[Entry]] = [[] for _ in range(months)]
    month_same: list[list[tuple[Entry, Entry]]] = [[] for _ in range(months)]
    for entry in ds.entries:
        index = (entry.ts_ms - origin) // MONTH_MS
        if 0 <= index < months:
            month_entries[index].append(entry)
    for indices in ds.by_browser().values():
        for prev_i, next_i in zip(indices, indices[1:]):
            a, b = ds.entries[prev_i], ds.entries[next_i]
            index_a = (a.ts_ms - origin) // MONTH_MS
            index_b = (b.ts_ms - origin) // MONTH_MS
            if index_a == index_b and 0 <= index_a < months:
                month_same[index_a].append((a, b))

    sets: list[MonthSets] = []
    for month in range(months):
        same_pairs = tuple(
            ComparisonPair(a, b, SAME_BROWSER, month) for a, b in month_same[month]
        )
        wanted = len(same_pairs)
        different = tuple(
            ComparisonPair(a, b, DIFFERENT_BROWSERS, month)
            for a, b in _sample_cross_pairs(
                month_entries[month], wanted, random.Random(seed * 1_000_003 + month)
            )
        )
        sets.append(MonthSets(month_index=month, same=same_pairs, different=different))
    return sets


def _sample_cross_pairs(
    entries: Sequence[Entry], wanted: int, rng: random.Random
) -> list[tuple[Entry, Entry]]:
    """Uniform sample, without replacement, of entry pairs with distinct UIDs."""
    if wanted == 0 or len(entries) < 2:
        return []
    n = len(entries)
    if n * (n - 1) // 2 <= max(4 * wanted, 64):
        pool = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if entries[i].uid != entries[j].uid
        ]
        rng.shuffle(pool)
        chosen = pool[:wanted]
    else:
        seen: set[tuple[int, int]] = set()
        chosen = []
        attempts = 0
        limit = 200 * wanted + 1000
        while len(chosen) < wanted and attempts < limit:
            attempts += 1
            i = rng.randrange(n)
            j = rng.randrange(n)
            if i == j or entries[i].uid == entries[j].uid:
                continue
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            chosen.append(key)
    return [(entries[i], entries[j]) for i, j in chosen]


def count_identical(
    f: Mapping[str, AttributeValue],
    g: Mapping[str, AttributeValue],
    schema: Sequence[AttributeDescriptor],
) -> int:
    """Number of attributes with identical values between two fingerprints."""
    count = 0
    for descriptor in schema:
        if value_identical(f[descriptor.name], g[descriptor.name]):
            count += 1
    return count


def levenshtein(a: str, b: str) -> int:
    """Minimum edit distance (insertions, deletions, substitutions)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ch_a in enumerate(a, start=1):
        current = [i]
        for j, ch_b in enumerate(b, start=1):
            cost = 0 if ch_a == ch_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def jaccard_distance(a: frozenset, b: frozenset) -> float:
    """1 - |A intersect B| / |A union B|; zero when both sets are empty."""
    if not a and not b:
        return 0.0
    union = len(a | b)
    return 1.0 - len(a & b) / union


def attribute_distance(
    a: AttributeValue, b: AttributeValue, kind: str
) -> float:
    """Distance between two values of one attribute, per the attribute kind.

    Textual values use the edit distance, sets the Jaccard distance, numbers
    the absolute difference, and categories the identity function. Any flag
    operand is at distance zero from the same flag and at the mismatch
    sentinel from anything else.
    """
    if isinstance(a, ErrorFlag) or isinstance(b, ErrorFlag):
        return 0.0 if (a is b) else MISMATCH
    if kind == "textual":
        return float(levenshtein(serialize_value(a), serialize_value(b)))
    if kind == "set":
        if isinstance(a, (frozenset, set)) and isinstance(b, (frozenset, set)):
            return jaccard_distance(frozenset(a), frozenset(b))
        return 0.0 if value_identical(a, b) else MISMATCH
    if kind == "numeric":
        if isinstance(a, (int, float)) and isinstance(b, (int, float)) \
                and not isinstance(a, bool) and not isinstance(b, bool):
            return abs(float(a) - float(b))
        return 0.0 if value_identical(a, b) else MISMATCH
    if kind == "categorical":
        return 0.0 if value_identical(a, b) else MISMATCH
    raise ValueError(f"unknown attribute kind: {kind!r}")


@dataclass
class MatchingConfig:
    """Per-attribute distance thresholds plus the global count threshold."""

    families: dict[str, str]
    thetas: dict[str, float]
    global_theta: int = 0
    degenerate: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if set(self.families) != set(self.thetas):
            raise ValueError("families and thetas must cover the same attributes")
        for name, theta in self.thetas.items():
            if theta < 0:
                raise ValueError(f"negative threshold for {name!r}")

    @property
    def attribute_names(self) -> list[str]:
        return list(self.families)

    @classmethod
    def identical_only(
        cls, schema: Sequence[AttributeDescriptor], global_theta: int = 0
    ) -> "MatchingConfig":
        """Config with all thresholds at zero: matching reduces to identity."""
        return cls(
            families={d.name: d.kind for d in schema},
            thetas={d.name: 0.0 for d in schema},
            global_theta=global_theta,
        )

    def to_json(self) -> dict:
        return {
            "attributes": {
                name: {"family": self.families[name], "theta": self.thetas[name]}
                for name in self.families
            },
            "theta": self.global_theta,
            "degenerate": list(self.degenerate),
        }

    @classmethod
    def from_json(cls, raw: dict) -> "MatchingConfig":
        attributes = raw["attributes"]
        return cls(
            families={name: spec["family"] for name, spec in attributes.items()},
            thetas={name: float(spec["theta"]) for name, spec in attributes.items()},
            global_theta=int(raw.get("theta", 0)),
            degenerate=tuple(raw.get("degenerate", ())),
        )

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "MatchingConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def count_matching(
    f: Mapping[str, AttributeValue],
    g: Mapping[str, AttributeValue],
    config: MatchingConfig,
) -> int:
    """Number of attributes whose distance is within the learned threshold.

    Always at least ``count_identical`` on the same attribute set, since
    identical values are at distance zero and thresholds are non-negative.
    """
    count = 0
    for name, kind in config.families.items():
        if attribute_distance(f[name], g[name], kind) <= config.thetas[name]:
            count += 1
    return count


def _best_split(same_d: Sequence[float], diff_d: Sequence[float]) -> float:
    """Largest-margin threshold separating same-class (small) from
    different-class (large) distances, minimizing misclassifications.

    Ties resolve toward the strictest (smallest) threshold.
    """
    values = sorted({d for d in list(same_d) + list(diff_d) if d != MISMATCH})
    candidates = [0.0] + [v for v in values if v > 0.0]
    best_theta = 0.0
    best_errors = None
    for theta in candidates:
        errors = sum(1 for d in same_d if d > theta) + sum(
            1 for d in diff_d if d <= theta
        )
        if best_errors is None or errors < best_errors:
            best_errors = errors
            best_theta = theta
    higher = [v for v in values if v > best_theta]
    if higher:
        return (best_theta + higher[0]) / 2.0
    return best_theta


def learn_thresholds(
    sets: Sequence[MonthSets],
    schema: Sequence[AttributeDescriptor],
    global_theta: int = 0,
) -> MatchingConfig:
    """Per-attribute distance thresholds from labeled month samples.

    Each month contributes a one-dimensional max-margin split point between
    the same-browser and different-browsers distance distributions; monthly
    thresholds are averaged. Dynamic attributes are forced to a zero
    threshold, and attributes whose two distributions are identical are
    flagged as degenerate.
    """
    populated = [m for m in sets if m.same and m.different]
    if not populated:
        raise ValueError("threshold learning needs at least one populated month")
    thetas: dict[str, float] = {}
    degenerate: list[str] = []
    for descriptor in schema:
        name = descriptor.name
        if descriptor.dynamic:
            thetas[name] = 0.0
            continue
        monthly: list[float] = []
        distributions_equal = True
        for month in populated:
            same_d = [
                attribute_distance(
                    p.fingerprint_a[name], p.fingerprint_b[name], descriptor.kind
                )
                for p in month.same
            ]
            diff_d = [
                attribute_distance(
                    p.fingerprint_a[name], p.fingerprint_b[name], descriptor.kind
                )
                for p in month.different
            ]
            if sorted(same_d) != sorted(diff_d):
                distributions_equal = False
            monthly.append(_best_split(same_d, diff_d))
        if distributions_equal:
            thetas[name] = 0.0
            degenerate.append(name)
        else:
            thetas[name] = sum(monthly) / len(monthly)
    return MatchingConfig(
        families={d.name: d.kind for d in schema},
        thetas=thetas,
        global_theta=global_theta,
        degenerate=tuple(degenerate),
    )


# ---------------------------------------------------------------------------
# Error curves


@dataclass(frozen=True)
class ErrorCurve:
    """FMR and FNMR per candidate global threshold, averaged over months."""

    thetas: np.ndarray
    fmr: np.ndarray
    fnmr: np.ndarray
    attribute_count: int
    month_count: int

    def to_json(self) -> dict:
        return {
            "attribute_count": self.attribute_count,
            "month_count": self.month_count,
            "points": [
                {"theta": int(t), "fmr": float(m), "fnmr": float(n)}
                for t, m, n in zip(self.thetas, self.fmr, self.fnmr)
            ],
        }


def pair_counts(
    pairs: Sequence[ComparisonPair],
    counter: str,
    config: MatchingConfig,
) -> np.ndarray:
    """Identical or matching attribute counts for a batch of pairs.

    Identical counting interns values per attribute and compares integer
    codes, which keeps large evaluations tractable; matching counting
    evaluates the per-kind distances pairwise.
    """
    if counter == "matching":
        return np.array(
            [count_matching(p.fingerprint_a, p.fingerprint_b, config) for p in pairs],
            dtype=np.int64,
        )
    if counter != "identical":
        raise ValueError(f"unknown counter: {counter!r}")
    if not pairs:
        return np.zeros(0, dtype=np.int64)

    entry_index: dict[int, int] = {}
    entries: list[Entry] = []
    for pair in pairs:
        for entry in (pair.entry_a, pair.entry_b):
            if id(entry) not in entry_index:
                entry_index[id(entry)] = len(entries)
                entries.append(entry)
    names = config.attribute_names
    codes = np.empty((len(entries), len(names)), dtype=np.int32)
    for j, name in enumerate(names):
        table: dict = {}
        column = codes[:, j]
        for i, entry in enumerate(entries):
            key = intern_key(entry.fingerprint[name])
            code = table.get(key)
            if code is None:
                code = len(table)
                table[key] = code
            column[i] = code
    ia = np.fromiter(
        (entry_index[id(p.entry_a)] for p in pairs), dtype=np.int64, count=len(pairs)
    )
    ib = np.fromiter(
        (entry_index[id(p.entry_b)] for p in pairs), dtype=np.int64, count=len(pairs)
    )
    counts = np.empty(len(pairs), dtype=np.int64)
    step = 20_000
    for start in range(0, len(pairs), step):
        stop = min(start + step, len(pairs))
        counts[start:stop] = (
            codes[ia[start:stop]] == codes[ib[start:stop]]
        ).sum(axis=1)
    return counts


def error_curve(
    sets: Sequence[MonthSets],
    counter: str,
    config: MatchingConfig,
) -> ErrorCurve:
    """FMR/FNMR per integer threshold in [0, n], averaged over months.

    At threshold T, FMR is the fraction of different-browsers pairs counting
    at least T (falsely matched) and FNMR the fraction of same-browser pairs
    counting below T.
    """
    n = len(config.families)
    thetas = np.arange(0, n + 1, dtype=np.int64)
    fmr_rows = []
    fnmr_rows = []
    for month in sets:
        if not month.same or not month.different:
            continue
        same_counts = np.sort(pair_counts(month.same, counter, config))
        diff_counts = np.sort(pair_counts(month.different, counter, config))
        fnmr_rows.append(
            np.searchsorted(same_counts, thetas, side="left") / same_counts.size
        )
        fmr_rows.append(
            1.0 - np.searchsorted(diff_counts, thetas, side="left") / diff_counts.size
        )
    if not fmr_rows:
        raise ValueError("error curve needs at least one populated month")
    return ErrorCurve(
        thetas=thetas,
        fmr=np.mean(fmr_rows, axis=0),
        fnmr=np.mean(fnmr_rows, axis=0),
        attribute_count=n,
        month_count=len(fmr_rows),
    )


def equal_error_rate(curve: ErrorCurve) -> tuple[float, int]:
    """Operating point minimizing |FMR - FNMR|; ties go to the smaller
    threshold. Returns (rate, threshold) with rate = (FMR + FNMR) / 2."""
    if curve.thetas.size == 0:
        raise ValueError("empty error curve")
    gap = np.abs(curve.fmr - curve.fnmr)
    index = int(np.argmin(gap))
    rate = float((curve.fmr[index] + curve.fnmr[index]) / 2.0)
    return rate, int(curve.thetas[index])


ACCEPT = "accept"
REJECT = "reject"


def verdict(
    stored: Mapping[str, AttributeValue],
    presented: Mapping[str, AttributeValue],
    config: MatchingConfig,
    mode: str = "simple",
) -> str:
    """Accept iff the identical (simple) or matching (advanced) attribute
    count reaches the configured global threshold."""
    count = verification_count(stored, presented, config, mode)
    return ACCEPT if count >= config.global_theta else REJECT


def verification_count(
    stored: Mapping[str, AttributeValue],
    presented: Mapping[str, AttributeValue],
    config: MatchingConfig,
    mode: str = "simple",
) -> int:
    if mode == "simple":
        count = 0
        for name in config.families:
            if value_identical(stored[name], presented[name]):
                count += 1
        return count
    if mode == "advanced":
        return count_matching(stored, presented, config)
    raise ValueError(f"unknown verification mode: {mode!r}")
