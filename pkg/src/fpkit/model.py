"""Core domain types: attribute schema, attribute values, entries, datasets,
and canonical fingerprint hashing.

A fingerprint is a mapping from attribute name to a value. A value is either
a concrete payload (string, number, boolean, set of strings, category token)
or an :class:`ErrorFlag` recording why collection failed. Flags are ordinary
comparable values: two equal flags are identical, a flag never equals a
concrete value.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

# Separators for the canonical byte-level serialization. 0x1F joins attribute
# values in schema order; 0x02 marks a flag payload; 0x1E joins set elements.
_VALUE_SEP = b"\x1f"
_FLAG_PREFIX = "\x02FLAG:"
_SET_SEP = "\x1e"

VALID_KINDS = ("textual", "set", "numeric", "categorical")


class SchemaMismatchError(ValueError):
    """A fingerprint does not cover the schema it is evaluated against."""


class ErrorFlag(enum.Enum):
    """Reason a value could not be collected. Flags are values: they compare
    equal to the same flag and never to a concrete payload."""

    UNSUPPORTED = "unsupported"
    UNDEFINED = "undefined-value"
    EXCEPTION = "exception"
    TIMEOUT = "timeout"

    @classmethod
    def from_code(cls, code: str) -> "ErrorFlag":
        for flag in cls:
            if flag.value == code:
                return flag
        raise ValueError(f"unknown error flag code: {code!r}")


# A concrete attribute value or an error flag.
AttributeValue = Any


@dataclass(frozen=True)
class AttributeDescriptor:
    """Schema entry for one fingerprinting attribute."""

    name: str
    kind: str = "textual"
    dynamic: bool = False
    extracted_from: str | None = None
    collectible_client_side: bool = True

    def __post_init__(self) -> None:
        if self.kind not in VALID_KINDS:
            raise ValueError(f"invalid attribute kind: {self.kind!r}")
        if self.dynamic and self.kind != "categorical":
            raise ValueError(
                f"dynamic attribute {self.name!r} must be categorical"
            )


def validate_schema(schema: Sequence[AttributeDescriptor]) -> None:
    """Check schema-level invariants: unique names, valid extraction links."""
    names = [d.name for d in schema]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate attribute names in schema: {dupes}")
    by_name = {d.name: d for d in schema}
    for d in schema:
        if d.extracted_from is None:
            continue
        source = by_name.get(d.extracted_from)
        if source is None:
            raise ValueError(
                f"{d.name!r} extracted from unknown attribute {d.extracted_from!r}"
            )
        if source.extracted_from is not None:
            raise ValueError(
                f"{d.name!r} extracted from {source.name!r}, which is itself extracted"
            )


def _category(value: AttributeValue) -> str:
    if isinstance(value, ErrorFlag):
        return "flag"
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    if isinstance(value, (frozenset, set)):
        return "set"
    raise TypeError(f"unsupported attribute payload type: {type(value).__name__}")


def serialize_value(value: AttributeValue) -> str:
    """Canonical textual form of a value.

    Numbers use the shortest round-trip decimal, flags are tagged with a
    control prefix, sets are sorted and joined on a control byte.
    """
    cat = _category(value)
    if cat == "flag":
        return _FLAG_PREFIX + value.value
    if cat == "bool":
        return "true" if value else "false"
    if cat in ("int", "float"):
        return repr(value)
    if cat == "set":
        return _SET_SEP.join(sorted(value))
    return value


def intern_key(value: AttributeValue):
    """Hashable key whose equality coincides with :func:`value_identical`."""
    if type(value) is str:
        return value
    return (_category(value), serialize_value(value))


def value_identical(a: AttributeValue, b: AttributeValue) -> bool:
    """Kronecker delta over attribute values: true iff the payloads are equal.

    A flag equals the same flag only; a flag never equals a concrete value;
    payloads of different categories (e.g. the integer 3 and the float 3.0)
    are not identical, consistently with the canonical serialization.
    """
    if a is b:
        return True
    ca = _category(a)
    if ca != _category(b):
        return False
    return serialize_value(a) == serialize_value(b)


@dataclass(frozen=True)
class FingerprintHash:
    """32-byte canonical digest of a fingerprint."""

    digest: bytes

    def __post_init__(self) -> None:
        if len(self.digest) != 32:
            raise ValueError("fingerprint digest must be 32 bytes")

    @property
    def hex(self) -> str:
        return self.digest.hex()


def canonical_hash(
    fingerprint: Mapping[str, AttributeValue],
    schema: Sequence[AttributeDescriptor],
) -> FingerprintHash:
    """SHA-256 over the canonical serialization of a fingerprint.

    Values are serialized in schema order and joined by the 0x1F byte, so
    value-equal fingerprints hash identically across components.
    """
    parts = []
    for descriptor in schema:
        try:
            value = fingerprint[descriptor.name]
        except KeyError:
            raise SchemaMismatchError(
                f"fingerprint is missing attribute {descriptor.name!r}"
            ) from None
        parts.append(serialize_value(value).encode("utf-8"))
    return FingerprintHash(hashlib.sha256(_VALUE_SEP.join(parts)).digest())


class FingerprintVector(Mapping):
    """Tuple-backed fingerprint sharing one name->position index per schema.

    Behaves like a read-only dict keyed by attribute name; used where many
    entries share one schema and per-entry dicts would be wasteful.
    """

    __slots__ = ("_index", "_values")

    def __init__(self, index: dict[str, int], values: tuple):
        self._index = index
        self._values = values

    @classmethod
    def index_for(cls, schema: Sequence[AttributeDescriptor]) -> dict[str, int]:
        return {d.name: i for i, d in enumerate(schema)}

    def __getitem__(self, name: str) -> AttributeValue:
        return self._values[self._index[name]]

    def __iter__(self) -> Iterator[str]:
        return iter(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __repr__(self) -> str:
        return f"FingerprintVector({dict(self)!r})"

    @property
    def values_tuple(self) -> tuple:
        return self._values


@dataclass(frozen=True)
class Entry:
    """One observation: the fingerprint a browser presented at a given time."""

    fingerprint: Mapping[str, AttributeValue]
    uid: str
    ts_ms: int
    ip_hash: str
    per_attribute_time_ms: Mapping[str, int] | None = None

    def __post_init__(self) -> None:
        if self.ts_ms < 0:
            raise ValueError("ts_ms must be non-negative")


# Reserved key inside ``times_ms`` that records the end-to-end collection
# time of the whole fingerprint; attribute times do not sum to it because
# attributes are collected concurrently.
TOTAL_TIME_KEY = "_total"


def total_time_ms(entry: Entry) -> int | None:
    if entry.per_attribute_time_ms is None:
        return None
    return entry.per_attribute_time_ms.get(TOTAL_TIME_KEY)


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of entries plus their schema.

    Entries are kept sorted by (uid, ts_ms); every transformation returns a
    new dataset and appends a provenance step.
    """

    schema: tuple[AttributeDescriptor, ...]
    entries: tuple[Entry, ...]
    provenance: tuple[str, ...] = ()
    _hashes: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def build(
        cls,
        schema: Sequence[AttributeDescriptor],
        entries: Sequence[Entry],
        provenance: Sequence[str] = (),
        validate: bool = False,
    ) -> "Dataset":
        schema = tuple(schema)
        if validate:
            validate_schema(schema)
            names = {d.name for d in schema}
            for entry in entries:
                keys = set(entry.fingerprint.keys())
                if keys != names:
                    missing = sorted(names - keys)
                    extra = sorted(keys - names)
                    raise SchemaMismatchError(
                        f"entry {entry.uid!r}@{entry.ts_ms}: missing={missing} extra={extra}"
                    )
        ordered = tuple(sorted(entries, key=lambda e: (e.uid, e.ts_ms)))
        return cls(schema=schema, entries=ordered, provenance=tuple(provenance))

    def with_entries(self, entries: Sequence[Entry], step: str) -> "Dataset":
        return Dataset.build(self.schema, entries, self.provenance + (step,))

    def with_schema(
        self, schema: Sequence[AttributeDescriptor], entries: Sequence[Entry], step: str
    ) -> "Dataset":
        return Dataset.build(schema, entries, self.provenance + (step,))

    def entry_hashes(self) -> list[FingerprintHash]:
        """Per-entry canonical hashes, computed once and cached."""
        if not self._hashes and self.entries:
            self._hashes.extend(
                canonical_hash(e.fingerprint, self.schema) for e in self.entries
            )
        return self._hashes

    def browsers(self) -> list[str]:
        return sorted({e.uid for e in self.entries})

    def by_browser(self) -> dict[str, list[int]]:
        """Entry indices per uid, in (uid, ts_ms) order."""
        groups: dict[str, list[int]] = {}
        for i, entry in enumerate(self.entries):
            groups.setdefault(entry.uid, []).append(i)
        return groups


# ---------------------------------------------------------------------------
# Interchange formats


def value_to_json(value: AttributeValue) -> Any:
    cat = _category(value)
    if cat == "flag":
        return {"flag": value.value}
    if cat == "set":
        return sorted(value)
    return value


def json_to_value(raw: Any) -> AttributeValue:
    if isinstance(raw, dict):
        if set(raw.keys()) != {"flag"}:
            raise ValueError(f"malformed flag object: {raw!r}")
        return ErrorFlag.from_code(raw["flag"])
    if isinstance(raw, list):
        return frozenset(str(x) for x in raw)
    if isinstance(raw, (str, int, float, bool)):
        return raw
    raise ValueError(f"unsupported JSON value: {raw!r}")


def schema_to_json(schema: Sequence[AttributeDescriptor]) -> list[dict]:
    return [
        {
            "name": d.name,
            "kind": d.kind,
            "dynamic": d.dynamic,
            "extracted_from": d.extracted_from,
            "collectible_client_side": d.collectible_client_side,
        }
        for d in schema
    ]


def schema_from_json(raw: Sequence[dict]) -> list[AttributeDescriptor]:
    schema = [
        AttributeDescriptor(
            name=item["name"],
            kind=item.get("kind", "textual"),
            dynamic=item.get("dynamic", False),
            extracted_from=item.get("extracted_from"),
            collectible_client_side=item.get("collectible_client_side", True),
        )
        for item in raw
    ]
    validate_schema(schema)
    return schema


def save_schema(schema: Sequence[AttributeDescriptor], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_json(schema), fh, indent=2)
        fh.write("\n")


def load_schema(path: str) -> list[AttributeDescriptor]:
    with open(path, "r", encoding="utf-8") as fh:
        return schema_from_json(json.load(fh))


def entry_to_json(entry: Entry) -> dict:
    record: dict[str, Any] = {
        "uid": entry.uid,
        "ts_ms": entry.ts_ms,
        "ip_hash": entry.ip_hash,
        "attrs": {name: value_to_json(v) for name, v in entry.fingerprint.items()},
    }
    if entry.per_attribute_time_ms is not None:
        record["times_ms"] = dict(entry.per_attribute_time_ms)
    return record


def entry_from_json(record: dict) -> Entry:
    times = record.get("times_ms")
    return Entry(
        fingerprint={k: json_to_value(v) for k, v in record["attrs"].items()},
        uid=str(record["uid"]),
        ts_ms=int(record["ts_ms"]),
        ip_hash=str(record["ip_hash"]),
        per_attribute_time_ms=dict(times) if times is not None else None,
    )


def write_jsonl(dataset: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in dataset.entries:
            fh.write(json.dumps(entry_to_json(entry), sort_keys=True))
            fh.write("\n")


def read_jsonl(
    path: str, schema: Sequence[AttributeDescriptor], validate: bool = True
) -> Dataset:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(entry_from_json(json.loads(line)))
    return Dataset.build(schema, entries, provenance=("load",), validate=validate)


def read_legacy(
    path: str, schema: Sequence[AttributeDescriptor], separator: str = ";"
) -> tuple[list[Entry], int]:
    """Import semicolon-separated records against a positional schema.

    Record layout: ``uid;ts_ms;ip_hash;value1;...;valueN``. Records with a
    wrong field count are counted and dropped, never fatal. All values are
    read as plain strings.
    """
    expected = len(schema) + 3
    entries: list[Entry] = []
    rejected = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(separator)
            if len(fields) != expected:
                rejected += 1
                continue
            try:
                ts_ms = int(fields[1])
            except ValueError:
                rejected += 1
                continue
            if ts_ms < 0:
                rejected += 1
                continue
            fingerprint = {
                d.name: fields[3 + i] for i, d in enumerate(schema)
            }
            entries.append(
                Entry(
                    fingerprint=fingerprint,
                    uid=fields[0],
                    ts_ms=ts_ms,
                    ip_hash=fields[2],
                )
            )
    return entries, rejected
