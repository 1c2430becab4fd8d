"""Synthetic fingerprint dataset generation.

Produces raw datasets with controllable population size, per-attribute value
distributions, correlation structure, evolution rates, robots, and
cookie-loss UID churn. Everything is derived from per-browser sub-seeds so a
given seed always yields byte-identical output.
"""

from __future__ import annotations

import bisect
import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .metrics import DAY_MS
from .model import (
    AttributeDescriptor,
    Dataset,
    Entry,
    FingerprintVector,
)
from .preprocess import DEFAULT_ROBOT_EXACT_VALUES

DEFAULT_T0_MS = 1_480_896_000_000  # 2016-12-05 00:00:00 UTC

# Robot visitors carry either a blacklisted keyword or a blacklisted exact
# user-agent value, exercising both detection paths.
ROBOT_USER_AGENTS = (
    "Mozilla/5.0 (compatible; Googlebot/2.1; +http://www.google.com/bot.html)",
    "Mozilla/5.0 (compatible; VoilaBot/1.2; +http://www.voila.com/)",
    "Mozilla/5.0 (compatible; Exabot/3.0; spider@exabot.com)",
) + DEFAULT_ROBOT_EXACT_VALUES

# User agents for non-robot browsers; weights skew desktop-heavy.
DEFAULT_USER_AGENTS = (
    ("Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, "
     "like Gecko) Chrome/55.0.2883.87 Safari/537.36", 0.30),
    ("Mozilla/5.0 (Windows NT 6.1; Win64; x64; rv:50.0) Gecko/20100101 "
     "Firefox/50.0", 0.25),
    ("Mozilla/5.0 (Windows NT 6.1; Trident/7.0; rv:11.0) like Gecko", 0.15),
    ("Mozilla/5.0 (Macintosh; Intel Mac OS X 10_12_1) AppleWebKit/602.2.14 "
     "(KHTML, like Gecko) Version/10.0.1 Safari/602.2.14", 0.08),
    ("Mozilla/5.0 (Linux; Android 6.0.1; SM-G920F Build/MMB29K) "
     "AppleWebKit/537.36 (KHTML, like Gecko) SamsungBrowser/4.0 "
     "Chrome/44.0.2403.133 Mobile Safari/537.36", 0.10),
    ("Mozilla/5.0 (iPhone; CPU iPhone OS 10_1_1 like Mac OS X) "
     "AppleWebKit/602.2.14 (KHTML, like Gecko) Version/10.0 Mobile/14B100 "
     "Safari/602.1", 0.07),
    ("Mozilla/5.0 (iPad; CPU OS 10_1_1 like Mac OS X) AppleWebKit/602.2.14 "
     "(KHTML, like Gecko) Version/10.0 Mobile/14B100 Safari/602.1", 0.05),
)

USER_AGENT_ATTR = "userAgent"
COOKIE_ATTR = "cookieEnabled"


@dataclass(frozen=True)
class AttributeSpec:
    """Value distribution and evolution behavior of one generated attribute.

    Exactly one of ``pool_size`` (categorical tokens, optionally skewed),
    ``numeric_range``, or ``unique_per_browser`` drives the base draw.
    ``oscillate`` makes changes toggle between two values instead of drawing
    fresh ones, producing interleaved fingerprints downstream.
    """

    name: str
    kind: str = "categorical"
    dynamic: bool = False
    pool_size: int = 2
    skew: float = 1.0  # weight of value i proportional to skew**i
    numeric_range: tuple[float, float] | None = None
    numeric_int: bool = True
    unique_per_browser: bool = False
    change_probability: float = 0.0
    oscillate: bool = False
    group: str | None = None

    def descriptor(self) -> AttributeDescriptor:
        return AttributeDescriptor(
            name=self.name, kind=self.kind, dynamic=self.dynamic
        )


@dataclass(frozen=True)
class CorrelationGroup:
    """Attributes drawn jointly: a browser picks one profile for the whole
    group, so the members are fully correlated at creation time."""

    name: str
    members: tuple[str, ...]
    profile_count: int = 2
    weights: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GeneratorConfig:
    browser_count: int
    days: int
    attributes: tuple[AttributeSpec, ...]
    groups: tuple[CorrelationGroup, ...] = ()
    seed: int = 0
    t0_ms: int = DEFAULT_T0_MS
    visits_mean: float = 3.0
    revisit_gap_days: float = 6.0
    arrival_spikes: tuple[tuple[int, float], ...] = ()
    robot_fraction: float = 0.0
    cookie_churn_probability: float = 0.0
    major_change_probability: float = 0.0
    major_change_range: tuple[float, float] = (0.1, 0.7)
    clone_cluster_fraction: float = 0.0
    clone_deviation_probability: float = 0.05
    emit_times: bool = False
    time_outlier_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.browser_count < 1 or self.days < 1:
            raise ValueError("browser_count and days must be positive")
        for p in (
            self.robot_fraction,
            self.cookie_churn_probability,
            self.major_change_probability,
            self.clone_cluster_fraction,
            self.clone_deviation_probability,
            self.time_outlier_fraction,
        ):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.robot_fraction > 0 and self.browser_count == 0:
            raise ValueError("robots require a positive browser count")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate attribute names")
        grouped: set[str] = set()
        known = set(names)
        for group in self.groups:
            for member in group.members:
                if member not in known:
                    raise ValueError(f"group {group.name!r} references unknown "
                                     f"attribute {member!r}")
                if member in grouped:
                    raise ValueError(f"attribute {member!r} in two groups")
                grouped.add(member)

    def schema(self) -> list[AttributeDescriptor]:
        base = [
            AttributeDescriptor(name=USER_AGENT_ATTR, kind="textual"),
            AttributeDescriptor(name=COOKIE_ATTR, kind="categorical"),
        ]
        return base + [a.descriptor() for a in self.attributes]

    def to_json(self) -> dict:
        return {
            "browser_count": self.browser_count,
            "days": self.days,
            "seed": self.seed,
            "t0_ms": self.t0_ms,
            "visits_mean": self.visits_mean,
            "revisit_gap_days": self.revisit_gap_days,
            "arrival_spikes": [list(s) for s in self.arrival_spikes],
            "robot_fraction": self.robot_fraction,
            "cookie_churn_probability": self.cookie_churn_probability,
            "major_change_probability": self.major_change_probability,
            "major_change_range": list(self.major_change_range),
            "clone_cluster_fraction": self.clone_cluster_fraction,
            "clone_deviation_probability": self.clone_deviation_probability,
            "emit_times": self.emit_times,
            "time_outlier_fraction": self.time_outlier_fraction,
            "attributes": [
                {
                    "name": a.name,
                    "kind": a.kind,
                    "dynamic": a.dynamic,
                    "pool_size": a.pool_size,
                    "skew": a.skew,
                    "numeric_range": list(a.numeric_range) if a.numeric_range else None,
                    "numeric_int": a.numeric_int,
                    "unique_per_browser": a.unique_per_browser,
                    "change_probability": a.change_probability,
                    "oscillate": a.oscillate,
                    "group": a.group,
                }
                for a in self.attributes
            ],
            "groups": [
                {
                    "name": g.name,
                    "members": list(g.members),
                    "profile_count": g.profile_count,
                    "weights": list(g.weights) if g.weights else None,
                }
                for g in self.groups
            ],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "GeneratorConfig":
        return cls(
            browser_count=raw["browser_count"],
            days=raw["days"],
            seed=raw.get("seed", 0),
            t0_ms=raw.get("t0_ms", DEFAULT_T0_MS),
            visits_mean=raw.get("visits_mean", 3.0),
            revisit_gap_days=raw.get("revisit_gap_days", 6.0),
            arrival_spikes=tuple(
                (int(d), float(w)) for d, w in raw.get("arrival_spikes", ())
            ),
            robot_fraction=raw.get("robot_fraction", 0.0),
            cookie_churn_probability=raw.get("cookie_churn_probability", 0.0),
            major_change_probability=raw.get("major_change_probability", 0.0),
            major_change_range=tuple(raw.get("major_change_range", (0.1, 0.7))),
            clone_cluster_fraction=raw.get("clone_cluster_fraction", 0.0),
            clone_deviation_probability=raw.get("clone_deviation_probability", 0.05),
            emit_times=raw.get("emit_times", False),
            time_outlier_fraction=raw.get("time_outlier_fraction", 0.0),
            attributes=tuple(
                AttributeSpec(
                    name=a["name"],
                    kind=a.get("kind", "categorical"),
                    dynamic=a.get("dynamic", False),
                    pool_size=a.get("pool_size", 2),
                    skew=a.get("skew", 1.0),
                    numeric_range=tuple(a["numeric_range"]) if a.get("numeric_range") else None,
                    numeric_int=a.get("numeric_int", True),
                    unique_per_browser=a.get("unique_per_browser", False),
                    change_probability=a.get("change_probability", 0.0),
                    oscillate=a.get("oscillate", False),
                    group=a.get("group"),
                )
                for a in raw["attributes"]
            ),
            groups=tuple(
                CorrelationGroup(
                    name=g["name"],
                    members=tuple(g["members"]),
                    profile_count=g.get("profile_count", 2),
                    weights=tuple(g["weights"]) if g.get("weights") else None,
                )
                for g in raw.get("groups", ())
            ),
        )


class _Pool:
    """Weighted token pool for one attribute; draws via cumulative weights."""

    def __init__(self, name: str, spec: AttributeSpec):
        self.spec = spec
        if spec.numeric_range is None:
            self.tokens = [f"{name}:v{i}" for i in range(max(spec.pool_size, 1))]
            weights = [spec.skew**i for i in range(len(self.tokens))]
            total = sum(weights)
            acc = 0.0
            self.cumulative = []
            for w in weights:
                acc += w / total
                self.cumulative.append(acc)
        else:
            self.tokens = None
            self.cumulative = None

    def draw(self, rng: random.Random):
        if self.tokens is not None:
            return self.tokens[bisect.bisect_left(self.cumulative, rng.random())]
        lo, hi = self.spec.numeric_range
        value = rng.uniform(lo, hi)
        return int(round(value)) if self.spec.numeric_int else value

    def draw_different(self, rng: random.Random, current):
        for _ in range(8):
            candidate = self.draw(rng)
            if candidate != current:
                return candidate
        if self.tokens is not None:
            # Tiny pools can be exhausted by chance; step deterministically.
            index = self.tokens.index(current) if current in self.tokens else -1
            return self.tokens[(index + 1) % len(self.tokens)]
        return (current + 1) if self.spec.numeric_int else current + 1e-6


def _weighted_indices(weights: Sequence[float], rng: random.Random, count: int) -> list[int]:
    total = sum(weights)
    cumulative = []
    acc = 0.0
    for w in weights:
        acc += w / total
        cumulative.append(acc)
    return [bisect.bisect_left(cumulative, rng.random()) for _ in range(count)]


def generate(config: GeneratorConfig) -> Dataset:
    """Generate a raw dataset: one browser at a time, each from its own
    derived sub-seed, canonically ordered by (uid, ts_ms)."""
    master = random.Random(config.seed)
    schema = config.schema()
    index = FingerprintVector.index_for(schema)
    specs = list(config.attributes)
    n_attrs = len(specs)
    pools = [_Pool(spec.name, spec) for spec in specs]
    change_p = np.array([spec.change_probability for spec in specs])
    # Major churn only touches attributes that evolve at all.
    changeable_mask = change_p > 0.0

    # Arrival-day distribution: constant rate plus spikes.
    day_weights = [1.0] * config.days
    for day, weight in config.arrival_spikes:
        if 0 <= day < config.days:
            day_weights[day] += weight
    ua_values = [ua for ua, _ in DEFAULT_USER_AGENTS]
    ua_weights = [w for _, w in DEFAULT_USER_AGENTS]

    # Group profiles: profile p assigns every member its p-th pool token, so
    # two browsers agree on a whole block iff they drew the same profile.
    group_profiles: dict[str, list[dict[int, object]]] = {}
    member_group: dict[int, str] = {}
    spec_pos = {spec.name: i for i, spec in enumerate(specs)}
    for group in config.groups:
        profiles = []
        for p in range(group.profile_count):
            values = {}
            for m in group.members:
                pos = spec_pos[m]
                tokens = pools[pos].tokens
                if tokens is None:
                    raise ValueError(f"group member {m!r} must be categorical")
                values[pos] = tokens[p % len(tokens)]
            profiles.append(values)
        group_profiles[group.name] = profiles
        for m in group.members:
            member_group[spec_pos[m]] = group.name

    # Clone cluster: a shared base fingerprint emulating a common environment.
    cluster_rng = random.Random(master.randrange(2**63))
    cluster_base = [pools[i].draw(cluster_rng) for i in range(n_attrs)]
    cluster_count = int(round(config.clone_cluster_fraction * config.browser_count))
    robot_count = int(round(config.robot_fraction * config.browser_count))

    t_end = config.t0_ms + config.days * DAY_MS - 1
    entries: list[Entry] = []
    uid_counter = 0

    browser_seeds = [master.randrange(2**63) for _ in range(config.browser_count)]
    for b in range(config.browser_count):
        rng = random.Random(browser_seeds[b])
        np_rng = np.random.default_rng(browser_seeds[b])
        is_robot = b >= config.browser_count - robot_count
        in_cluster = (not is_robot) and b < cluster_count

        uid = f"u{uid_counter:07d}"
        uid_counter += 1
        ip_hash = hashlib.sha256(f"ip:{config.seed}:{b}".encode()).hexdigest()

        if is_robot:
            ua = ROBOT_USER_AGENTS[b % len(ROBOT_USER_AGENTS)]
        else:
            ua = ua_values[_weighted_indices(ua_weights, rng, 1)[0]]

        # Base fingerprint.
        current: list = [None] * n_attrs
        if in_cluster:
            for i in range(n_attrs):
                if specs[i].unique_per_browser:
                    current[i] = f"{specs[i].name}:b{b}"
                elif rng.random() < config.clone_deviation_probability:
                    current[i] = pools[i].draw(rng)
                else:
                    current[i] = cluster_base[i]
        else:
            drawn_groups: dict[str, dict[int, object]] = {}
            for group in config.groups:
                weights = group.weights or [1.0] * group.profile_count
                choice = _weighted_indices(weights, rng, 1)[0]
                drawn_groups[group.name] = group_profiles[group.name][choice]
            for i, spec in enumerate(specs):
                if spec.unique_per_browser:
                    current[i] = f"{spec.name}:b{b}"
                elif i in member_group:
                    current[i] = drawn_groups[member_group[i]][i]
                else:
                    current[i] = pools[i].draw(rng)
        oscillation_alt = {
            i: pools[i].draw_different(rng, current[i])
            for i, spec in enumerate(specs)
            if spec.oscillate
        }

        # Visit schedule.
        arrival_day = _weighted_indices(day_weights, rng, 1)[0]
        visit_count = 1 if is_robot else max(1, int(round(rng.expovariate(1.0 / config.visits_mean))))
        ts = config.t0_ms + arrival_day * DAY_MS + rng.randrange(DAY_MS)
        change_counter = 0
        for visit in range(visit_count):
            if visit > 0:
                gap = max(60_000, int(rng.expovariate(1.0 / config.revisit_gap_days) * DAY_MS))
                ts += gap
                if ts > t_end:
                    break
                if rng.random() < config.cookie_churn_probability:
                    # Cookie loss: fresh UID, unchanged fingerprint.
                    uid = f"u{uid_counter:07d}"
                    uid_counter += 1
                else:
                    if config.major_change_probability and rng.random() < config.major_change_probability:
                        lo, hi = config.major_change_range
                        mask = (np_rng.random(n_attrs) < rng.uniform(lo, hi)) & changeable_mask
                    else:
                        mask = np_rng.random(n_attrs) < change_p
                    for i in np.nonzero(mask)[0]:
                        i = int(i)
                        spec = specs[i]
                        if spec.unique_per_browser:
                            change_counter += 1
                            current[i] = f"{spec.name}:b{b}.{change_counter}"
                        elif spec.oscillate:
                            current[i], oscillation_alt[i] = oscillation_alt[i], current[i]
                        else:
                            current[i] = pools[i].draw_different(rng, current[i])

            values = (ua, True) + tuple(current)
            times = None
            if config.emit_times:
                per_attr = {spec.name: rng.randrange(0, 50) for spec in specs}
                total = sum(per_attr.values()) // 4 + rng.randrange(500, 4000)
                if config.time_outlier_fraction and rng.random() < config.time_outlier_fraction:
                    total = 31_000 + rng.randrange(0, 500_000)
                per_attr["_total"] = total
                times = per_attr
            entries.append(
                Entry(
                    fingerprint=FingerprintVector(index, values),
                    uid=uid,
                    ts_ms=ts,
                    ip_hash=ip_hash,
                    per_attribute_time_ms=times,
                )
            )
    return Dataset.build(schema, entries, provenance=("synthetic",))


# ---------------------------------------------------------------------------
# Calibration


@dataclass(frozen=True)
class CalibrationTargets:
    """Statistics the generated population should reproduce."""

    attribute_count: int = 262
    mean_same_identical: float | None = None
    same_std: float | None = None
    mean_diff_identical: float | None = None
    diff_std: float | None = None
    unicity: float | None = None
    sameness: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CalibrationResult:
    config: GeneratorConfig
    measured: dict[str, float]
    residuals: dict[str, float]


def _solve_change_probabilities(
    target_change: Sequence[float],
    changeable: Sequence[bool],
    major_probability: float,
    major_mean_rate: float,
    iterations: int = 8,
) -> list[float]:
    """Generator-level change probabilities whose post-deduplication
    per-attribute change rates hit the targets.

    Deduplication keeps a revisit only when at least one attribute changed,
    which conditions every per-attribute rate upward; this solves the fixed
    point p_i = t_i * P(kept) under the major-churn mixture.
    """
    p = [min(0.9, max(0.0, t)) if c else 0.0 for t, c in zip(target_change, changeable)]
    pm, u = major_probability, major_mean_rate
    for _ in range(iterations):
        no_change = 1.0
        for pi, c in zip(p, changeable):
            if c:
                no_change *= 1.0 - ((1.0 - pm) * pi + pm * u)
        kept = max(1e-9, 1.0 - no_change)
        updated = []
        for pi, t, c in zip(p, target_change, changeable):
            if not c or t <= 0.0:
                updated.append(0.0)
                continue
            conditional = ((1.0 - pm) * pi + pm * u) / kept
            factor = t / conditional if conditional > 0 else 1.0
            updated.append(min(0.9, max(0.0, pi * factor)))
        p = updated
    return p


def _build_structured_config(
    targets: CalibrationTargets,
    constant_count: int,
    change_scale: float,
    reference: GeneratorConfig | None = None,
    named_change: dict[str, float] | None = None,
) -> GeneratorConfig:
    n = targets.attribute_count
    # Three correlated blocks carry the between-pair variance of the
    # different-browsers class; constants carry the common mass; the
    # remaining distinctive singles keep pairs apart.
    block_sizes = [int(round(n * f)) for f in (0.23, 0.19, 0.15)]
    constant_count = max(0, min(constant_count, n - sum(block_sizes) - 1))
    single_count = n - sum(block_sizes) - constant_count

    mean_change = (
        n - targets.mean_same_identical if targets.mean_same_identical is not None else 0.0
    )
    # Blocks stay frozen so their correlation (the between-pair variance of
    # the different-browsers class) survives evolution; the distinctive
    # singles absorb the whole change budget.
    changeable_count = single_count
    uniform_target = (
        min(0.9, max(0.0, mean_change / changeable_count * change_scale))
        if changeable_count
        else 0.0
    )

    attributes: list[AttributeSpec] = []
    groups: list[CorrelationGroup] = []
    position = 0
    for g, size in enumerate(block_sizes):
        members = []
        for _ in range(size):
            name = f"a{position:03d}"
            attributes.append(
                AttributeSpec(
                    name=name,
                    pool_size=2,
                    change_probability=0.0,
                    group=f"block{g}",
                )
            )
            members.append(name)
            position += 1
        groups.append(
            CorrelationGroup(name=f"block{g}", members=tuple(members), profile_count=2)
        )
    for _ in range(constant_count):
        attributes.append(
            AttributeSpec(name=f"a{position:03d}", pool_size=1, change_probability=0.0)
        )
        position += 1
    for _ in range(single_count):
        attributes.append(
            AttributeSpec(
                name=f"a{position:03d}",
                pool_size=96,
                skew=1.0,
                change_probability=uniform_target,
            )
        )
        position += 1

    # Named sameness targets override the uniform change target.
    overrides = named_change or {
        name: 1.0 - rate for name, rate in targets.sameness.items()
    }
    if overrides:
        attributes = [
            replace(a, change_probability=overrides[a.name])
            if a.name in overrides
            else a
            for a in attributes
        ]
    if targets.unicity is not None and targets.unicity >= 0.999 and attributes:
        attributes[-1] = replace(
            attributes[-1], unique_per_browser=True, change_probability=0.0
        )

    base = reference or GeneratorConfig(
        browser_count=2000,
        days=180,
        attributes=(),
        seed=0,
        visits_mean=4.0,
        revisit_gap_days=5.0,
        major_change_probability=0.007,
        major_change_range=(0.3, 0.65),
        clone_cluster_fraction=0.13,
        clone_deviation_probability=0.05,
    )
    solved = _solve_change_probabilities(
        [a.change_probability for a in attributes],
        [a.pool_size > 1 and not a.unique_per_browser for a in attributes],
        base.major_change_probability,
        sum(base.major_change_range) / 2.0,
    )
    attributes = [
        replace(a, change_probability=p) for a, p in zip(attributes, solved)
    ]
    return replace(base, attributes=tuple(attributes), groups=tuple(groups))


def _measure(
    config: GeneratorConfig,
    sample_browsers: int,
    sameness_names: Sequence[str] = (),
) -> dict[str, float]:
    from .preprocess import deduplicate
    from .verify import MatchingConfig, build_comparison_sets, pair_counts
    from .metrics import attribute_practicality, unicity_rate

    probe = replace(config, browser_count=sample_browsers)
    ds = deduplicate(generate(probe))
    sets = build_comparison_sets(ds, months=6, seed=1)
    matching = MatchingConfig.identical_only(ds.schema)
    same = np.concatenate(
        [pair_counts(m.same, "identical", matching) for m in sets if m.same]
        or [np.zeros(0, dtype=np.int64)]
    )
    diff = np.concatenate(
        [pair_counts(m.different, "identical", matching) for m in sets if m.different]
        or [np.zeros(0, dtype=np.int64)]
    )
    measured = {
        "mean_same_identical": float(same.mean()) if same.size else float("nan"),
        "same_std": float(same.std()) if same.size else float("nan"),
        "mean_diff_identical": float(diff.mean()) if diff.size else float("nan"),
        "diff_std": float(diff.std()) if diff.size else float("nan"),
        "unicity": float(unicity_rate(ds) or 0.0),
    }
    if sameness_names:
        stats = attribute_practicality(ds)
        for name in sameness_names:
            rate = stats[name].sameness_rate
            measured[f"sameness:{name}"] = float(rate) if rate is not None else float("nan")
    return measured


def calibrate(
    targets: CalibrationTargets,
    reference: GeneratorConfig | None = None,
    iterations: int = 3,
    sample_browsers: int = 1500,
) -> CalibrationResult:
    """Search a generator configuration reproducing the target statistics.

    The construction is analytic (constant attributes set the
    different-browsers mean, correlated blocks its spread, change
    probabilities the same-browser mean); a short measure-and-adjust loop on
    a reference seed absorbs the drift that evolution and clone clusters
    introduce. Unreachable targets leave residuals in the result.
    """
    # Note: the identical count between two random browsers is, counting from
    # n = attribute_count, mostly set by the constants plus half the block
    # mass (two-profile blocks collide with probability 1/2).
    n = targets.attribute_count
    block_mass = sum(int(round(n * f)) for f in (0.23, 0.19, 0.15))
    if targets.mean_diff_identical is not None:
        constant_count = int(round(targets.mean_diff_identical - block_mass / 2.0))
    else:
        constant_count = int(round(n * 0.2))
    change_scale = 1.0
    named_change = {name: 1.0 - rate for name, rate in targets.sameness.items()}
    sameness_names = list(targets.sameness)

    config = _build_structured_config(
        targets, constant_count, change_scale, reference, named_change
    )
    measured = _measure(config, sample_browsers, sameness_names)
    for _ in range(iterations):
        adjusted = False
        if targets.mean_diff_identical is not None and not np.isnan(measured["mean_diff_identical"]):
            error = targets.mean_diff_identical - measured["mean_diff_identical"]
            if abs(error) > 0.5:
                constant_count += int(round(error))
                adjusted = True
        if targets.mean_same_identical is not None and not np.isnan(measured["mean_same_identical"]):
            wanted = targets.attribute_count - targets.mean_same_identical
            got = targets.attribute_count - measured["mean_same_identical"]
            if got > 0.1 and abs(wanted - got) > 0.3:
                change_scale *= wanted / got
                adjusted = True
        for name, rate in targets.sameness.items():
            got_rate = measured.get(f"sameness:{name}", float("nan"))
            if np.isnan(got_rate):
                continue
            wanted_change, got_change = 1.0 - rate, 1.0 - got_rate
            if got_change > 1e-4 and abs(wanted_change - got_change) > 0.002:
                named_change[name] = min(
                    0.9, max(0.0, named_change[name] * wanted_change / got_change)
                )
                adjusted = True
        if not adjusted:
            break
        config = _build_structured_config(
            targets, constant_count, change_scale, reference, named_change
        )
        measured = _measure(config, sample_browsers, sameness_names)

    residuals = {}
    for key in ("mean_same_identical", "same_std", "mean_diff_identical", "diff_std", "unicity"):
        target = getattr(targets, key)
        if target is not None and not np.isnan(measured.get(key, float("nan"))):
            residuals[key] = measured[key] - target
    return CalibrationResult(config=config, measured=measured, residuals=residuals)
