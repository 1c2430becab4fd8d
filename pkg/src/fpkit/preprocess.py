"""Dataset preprocessing: cleaning, browser-identifier resynchronization,
deduplication, extracted-attribute derivation, and user-agent classification.
"""

from __future__ import annotations

import hashlib
import hmac as hmac_mod
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import (
    AttributeDescriptor,
    Dataset,
    Entry,
    ErrorFlag,
    serialize_value,
)

# Keywords flagging automated visitors, matched on the lowercased user agent.
DEFAULT_ROBOT_KEYWORDS = (
    "googlebot",
    "evaliant",
    "bot.html",
    "voilabot",
    "google web preview",
    "spider",
    "bingpreview",
)

# Full user-agent values known to be emitted by robots despite containing no
# robot keyword.
DEFAULT_ROBOT_EXACT_VALUES = (
    "mozilla/4.0 (compatible; msie 7.0; windows nt 6.1; trident/7.0; slcc2;"
    " .net clr 2.0.50727; .net clr 3.5.30729; .net clr 3.0.30729;"
    " media center pc 6.0; .net4.0c; .net4.0e)",
    "mozilla/5.0 (x11; linux x86_64) applewebkit/537.36 (khtml, like gecko)"
    " chrome/52.0.2743.116 safari/537.36",
    "mozilla/5.0 (windows nt 6.3; rv:36.0) gecko/20100101 firefox/36.0",
    "mozilla/5.0 (macintosh; intel mac os x 10.10; rv:38.0) gecko/20100101"
    " firefox/38.0",
)

USER_AGENT_ATTRIBUTE = "userAgent"
COOKIE_ENABLED_ATTRIBUTE = "cookieEnabled"


@dataclass
class CleaningReport:
    """Bookkeeping of the cleaning step: what was dropped and why."""

    rejected_wrong_field_count: int = 0
    rejected_robots: int = 0
    merged_exact_duplicates: int = 0
    rejected_cookie_disabled: int = 0
    rejected_out_of_window: int = 0

    @property
    def total_removed(self) -> int:
        return (
            self.rejected_wrong_field_count
            + self.rejected_robots
            + self.merged_exact_duplicates
            + self.rejected_cookie_disabled
            + self.rejected_out_of_window
        )

    def to_json(self) -> dict:
        return {
            "rejected_wrong_field_count": self.rejected_wrong_field_count,
            "rejected_robots": self.rejected_robots,
            "merged_exact_duplicates": self.merged_exact_duplicates,
            "rejected_cookie_disabled": self.rejected_cookie_disabled,
            "rejected_out_of_window": self.rejected_out_of_window,
        }


def hash_ip(ip_address: str, key: bytes) -> str:
    """One-way hash of a raw IP address (HMAC-SHA256, hex) for ingestion."""
    return hmac_mod.new(key, ip_address.encode("utf-8"), hashlib.sha256).hexdigest()


def _user_agent_of(entry: Entry, ua_attribute: str) -> str:
    value = entry.fingerprint.get(ua_attribute)
    if isinstance(value, str):
        return value
    return ""


def _is_robot(
    user_agent: str, keywords: Sequence[str], exact_values: Sequence[str]
) -> bool:
    ua = user_agent.lower()
    if any(keyword in ua for keyword in keywords):
        return True
    return ua in exact_values


def _cookies_enabled(entry: Entry, attribute: str) -> bool:
    value = entry.fingerprint.get(attribute)
    if value is None:
        # Schema without a cookie attribute: nothing to reject on.
        return True
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        return value.strip().lower() == "true"
    return False


def clean(
    raw: Dataset,
    window: tuple[int, int],
    robot_keywords: Sequence[str] = DEFAULT_ROBOT_KEYWORDS,
    robot_exact_values: Sequence[str] = DEFAULT_ROBOT_EXACT_VALUES,
    ua_attribute: str = USER_AGENT_ATTRIBUTE,
    cookie_attribute: str = COOKIE_ENABLED_ATTRIBUTE,
    wrong_field_count: int = 0,
) -> tuple[Dataset, CleaningReport]:
    """Filter irrelevant entries: robots, disabled cookies, out-of-window
    timestamps, and exact duplicates.

    ``wrong_field_count`` carries the number of records already dropped by a
    legacy import so the report covers the whole cleaning step.
    """
    t_start, t_end = window
    if t_start > t_end:
        raise ValueError("cleaning window must be well-ordered")
    report = CleaningReport(rejected_wrong_field_count=wrong_field_count)
    keywords = [k.lower() for k in robot_keywords]
    exact = [v.lower() for v in robot_exact_values]

    kept: list[Entry] = []
    seen: set[tuple[str, int, bytes]] = set()
    raw_hashes = raw.entry_hashes()
    for i, entry in enumerate(raw.entries):
        if _is_robot(_user_agent_of(entry, ua_attribute), keywords, exact):
            report.rejected_robots += 1
            continue
        if not _cookies_enabled(entry, cookie_attribute):
            report.rejected_cookie_disabled += 1
            continue
        if not (t_start <= entry.ts_ms <= t_end):
            report.rejected_out_of_window += 1
            continue
        key = (entry.uid, entry.ts_ms, raw_hashes[i].digest)
        if key in seen:
            report.merged_exact_duplicates += 1
            continue
        seen.add(key)
        kept.append(entry)
    return raw.with_entries(kept, "clean"), report


def _run_length_compress(uids: Iterable[str]) -> list[str]:
    runs: list[str] = []
    for uid in uids:
        if not runs or runs[-1] != uid:
            runs.append(uid)
    return runs


def resynchronize_uids(ds: Dataset) -> Dataset:
    """Merge browser identifiers that share a (fingerprint, IP-hash) pair.

    Within each group whose timestamp-ordered UID sequence is not interleaved
    (no UID reappearing after another one), every entry is rewritten to the
    lexicographically smallest UID observed in the group. Interleaved groups
    indicate distinct identical browsers behind one address and are left
    untouched.
    """
    hashes = ds.entry_hashes()
    groups: dict[tuple[bytes, str], list[int]] = {}
    for i, entry in enumerate(ds.entries):
        groups.setdefault((hashes[i].digest, entry.ip_hash), []).append(i)

    replacement: dict[int, str] = {}
    for indices in groups.values():
        ordered = sorted(indices, key=lambda i: (ds.entries[i].ts_ms, ds.entries[i].uid))
        runs = _run_length_compress(ds.entries[i].uid for i in ordered)
        if len(runs) <= 1:
            continue
        if len(set(runs)) != len(runs):
            continue  # interleaved: u1 ... u2 ... u1
        survivor = min(runs)
        for i in ordered:
            if ds.entries[i].uid != survivor:
                replacement[i] = survivor

    if not replacement:
        return ds.with_entries(ds.entries, "resynchronize")
    rewritten = [
        Entry(
            fingerprint=e.fingerprint,
            uid=replacement.get(i, e.uid),
            ts_ms=e.ts_ms,
            ip_hash=e.ip_hash,
            per_attribute_time_ms=e.per_attribute_time_ms,
        )
        for i, e in enumerate(ds.entries)
    ]
    return ds.with_entries(rewritten, "resynchronize")


def deduplicate(ds: Dataset) -> Dataset:
    """Drop consecutive repeats of the same fingerprint per browser.

    An entry is kept iff its fingerprint hash differs from the immediately
    preceding kept entry of the same browser, which preserves interleaved
    fingerprints (f1, f2, f1).
    """
    hashes = ds.entry_hashes()
    kept: list[Entry] = []
    last_for_uid: dict[str, bytes] = {}
    for i, entry in enumerate(ds.entries):
        digest = hashes[i].digest
        if last_for_uid.get(entry.uid) == digest:
            continue
        last_for_uid[entry.uid] = digest
        kept.append(entry)
    return ds.with_entries(kept, "deduplicate")


# ---------------------------------------------------------------------------
# Extracted attributes


@dataclass(frozen=True)
class ExtractionRule:
    """One derived attribute computed from a source attribute value.

    Operations:
      * ``split_part``: split on ``item_sep``, take item ``index``, then
        optionally split on ``field_sep`` and take ``field``.
      * ``count_items``: number of items after splitting on ``item_sep``
        (or the cardinality of a set value).
      * ``length``: character length of the serialized value.
    """

    name: str
    source: str
    op: str
    kind: str = "textual"
    item_sep: str = ";"
    field_sep: str | None = None
    index: int = 0
    fld: int = 0
    numeric: bool = False

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "source": self.source,
            "op": self.op,
            "kind": self.kind,
            "item_sep": self.item_sep,
            "field_sep": self.field_sep,
            "index": self.index,
            "field": self.fld,
            "numeric": self.numeric,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "ExtractionRule":
        return cls(
            name=raw["name"],
            source=raw["source"],
            op=raw["op"],
            kind=raw.get("kind", "textual"),
            item_sep=raw.get("item_sep", ";"),
            field_sep=raw.get("field_sep"),
            index=raw.get("index", 0),
            fld=raw.get("field", 0),
            numeric=raw.get("numeric", False),
        )


_RULE_OPS = ("split_part", "count_items", "length")


def _apply_rule(rule: ExtractionRule, value):
    if isinstance(value, ErrorFlag):
        return value
    if rule.op == "count_items":
        if isinstance(value, (frozenset, set)):
            return len(value)
        text = serialize_value(value)
        return len([item for item in text.split(rule.item_sep) if item]) if text else 0
    if rule.op == "length":
        return len(serialize_value(value))
    if rule.op == "split_part":
        text = serialize_value(value)
        items = text.split(rule.item_sep)
        if rule.index >= len(items):
            return ErrorFlag.UNDEFINED
        part = items[rule.index]
        if rule.field_sep is not None:
            fields = part.split(rule.field_sep)
            if rule.fld >= len(fields):
                return ErrorFlag.UNDEFINED
            part = fields[rule.fld]
        if rule.numeric:
            try:
                return int(part)
            except ValueError:
                try:
                    return float(part)
                except ValueError:
                    return ErrorFlag.UNDEFINED
        return part
    raise ValueError(f"unknown extraction op: {rule.op!r}")


def derive_extracted(ds: Dataset, rules: Sequence[ExtractionRule]) -> Dataset:
    """Extend schema and entries with attributes derived from source values.

    A source carrying an error flag propagates the same flag to all its
    extracted attributes.
    """
    known = {d.name for d in ds.schema}
    for rule in rules:
        if rule.source not in known:
            raise ValueError(f"extraction rule {rule.name!r} references unknown "
                             f"source {rule.source!r}")
        if rule.op not in _RULE_OPS:
            raise ValueError(f"unknown extraction op: {rule.op!r}")
        if rule.name in known:
            raise ValueError(f"extracted attribute {rule.name!r} already in schema")
        known.add(rule.name)

    by_name = {d.name: d for d in ds.schema}
    extra = [
        AttributeDescriptor(
            name=rule.name,
            kind=rule.kind,
            dynamic=False,
            extracted_from=rule.source,
            collectible_client_side=by_name[rule.source].collectible_client_side,
        )
        for rule in rules
    ]
    schema = list(ds.schema) + extra

    extended: list[Entry] = []
    for entry in ds.entries:
        fingerprint = dict(entry.fingerprint)
        for rule in rules:
            fingerprint[rule.name] = _apply_rule(rule, entry.fingerprint[rule.source])
        extended.append(
            Entry(
                fingerprint=fingerprint,
                uid=entry.uid,
                ts_ms=entry.ts_ms,
                ip_hash=entry.ip_hash,
                per_attribute_time_ms=entry.per_attribute_time_ms,
            )
        )
    return ds.with_schema(schema, extended, "derive_extracted")


# ---------------------------------------------------------------------------
# Environment classification


@dataclass(frozen=True)
class EnvironmentClass:
    device_type: str
    browser_family: str
    os_family: str


MOBILE_KEYWORDS = ("phone", "mobile", "android", "iphone", "blackberry", "wpdesktop")
TABLET_KEYWORDS = ("ipad", "tablet", "terra pad", "tab")
MISC_KEYWORDS = (
    "wii",
    "playstation",
    "smart-tv",
    "smarttv",
    "googletv",
    "opera tv",
    "appletv",
    "nintendo",
    "xbox",
    "opera/9.80 (linux i686; u; fr) presto/2.10.287 version/12.00 ; sc/ihd92 stb",
)

# Families are checked sequentially; the first match wins.
BROWSER_FAMILY_KEYWORDS = (
    ("Firefox", ("firefox",)),
    ("Edge", ("edge",)),
    ("Internet Explorer", ("msie", "trident/7.0")),
    ("Samsung Internet", ("samsungbrowser",)),
    ("Chrome", ("chrome",)),
    ("Safari", ("safari",)),
)

# Mobile systems are checked before desktop ones: their user agents embed
# desktop markers ("linux" on Android, "like mac os x" on iOS, "windows nt"
# on Windows Phone) that would otherwise shadow them.
OS_FAMILY_KEYWORDS = (
    ("Android", ("android",)),
    ("Windows Phone", ("windows phone",)),
    ("iOS", ("ipad", "iphone")),
    ("Windows 10", ("windows nt 10.0",)),
    ("Windows 7", ("windows nt 6.1",)),
    (
        "Other Windows",
        ("windows nt", "windows 7", "windows 98", "windows 95", "windows ce"),
    ),
    ("Mac OS", ("mac os x",)),
    (
        "Linux-based",
        ("linux", "cros", "netbsd", "freebsd", "openbsd", "fedora", "ubuntu", "mint"),
    ),
)


def classify_environment(user_agent: str) -> EnvironmentClass:
    """Infer device type, browser family, and OS family from a user agent.

    Device types resolve keyword overlaps sequentially: mobile requires a
    mobile keyword and no tablet/misc keyword, tablet requires a tablet
    keyword and no misc keyword, misc requires a misc keyword; anything else
    is a desktop.
    """
    ua = user_agent.lower()
    has_mobile = any(k in ua for k in MOBILE_KEYWORDS)
    has_tablet = any(k in ua for k in TABLET_KEYWORDS)
    has_misc = any(k in ua for k in MISC_KEYWORDS)
    if has_mobile and not has_tablet and not has_misc:
        device = "mobile"
    elif has_tablet and not has_misc:
        device = "tablet"
    elif has_misc:
        device = "misc"
    else:
        device = "desktop"

    browser = "other"
    for family, keywords in BROWSER_FAMILY_KEYWORDS:
        if any(k in ua for k in keywords):
            browser = family
            break

    os_family = "other"
    for family, keywords in OS_FAMILY_KEYWORDS:
        if any(k in ua for k in keywords):
            os_family = family
            break

    return EnvironmentClass(device_type=device, browser_family=browser, os_family=os_family)


def device_type_of(entry: Entry, ua_attribute: str = USER_AGENT_ATTRIBUTE) -> str:
    return classify_environment(_user_agent_of(entry, ua_attribute)).device_type


def load_robot_file(path: str) -> tuple[list[str], list[str]]:
    """Read a robot list: one lowercase keyword per line, exact-match user
    agent values prefixed with ``=``."""
    keywords: list[str] = []
    exact: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("="):
                exact.append(line[1:].lower())
            else:
                keywords.append(line.lower())
    return keywords, exact
