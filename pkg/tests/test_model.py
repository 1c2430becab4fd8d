"""Core type tests: canonical hashing, value identity, schema and IO."""

from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpkit.model import (
    AttributeDescriptor,
    Dataset,
    Entry,
    ErrorFlag,
    FingerprintVector,
    SchemaMismatchError,
    canonical_hash,
    entry_from_json,
    entry_to_json,
    json_to_value,
    read_legacy,
    schema_from_json,
    schema_to_json,
    serialize_value,
    validate_schema,
    value_identical,
    value_to_json,
)

SCHEMA = [
    AttributeDescriptor(name="ua", kind="textual"),
    AttributeDescriptor(name="lang", kind="categorical"),
    AttributeDescriptor(name="fonts", kind="set"),
    AttributeDescriptor(name="width", kind="numeric"),
]


def fp(ua="mozilla", lang="fr", fonts=frozenset({"arial"}), width=1920):
    return {"ua": ua, "lang": lang, "fonts": fonts, "width": width}


class TestCanonicalHash:
    def test_identical_maps_identical_digests(self):
        assert canonical_hash(fp(), SCHEMA) == canonical_hash(fp(), SCHEMA)

    def test_repeated_calls_one_digest(self):
        digests = {canonical_hash(fp(), SCHEMA).digest for _ in range(10_000)}
        assert len(digests) == 1

    def test_flags_are_values_with_distinct_digests(self):
        a = fp(ua=ErrorFlag.TIMEOUT)
        b = fp(ua=ErrorFlag.EXCEPTION)
        assert canonical_hash(a, SCHEMA) != canonical_hash(b, SCHEMA)

    def test_thousand_random_distinct_fingerprints_distinct_digests(self):
        rng = random.Random(42)
        seen_payloads = set()
        fingerprints = []
        while len(fingerprints) < 1000:
            candidate = fp(
                ua=f"ua-{rng.randrange(10**9)}",
                lang=f"l{rng.randrange(1000)}",
                fonts=frozenset(f"f{rng.randrange(50)}" for _ in range(rng.randrange(4))),
                width=rng.randrange(4000),
            )
            key = (candidate["ua"], candidate["lang"], candidate["fonts"], candidate["width"])
            if key in seen_payloads:
                continue
            seen_payloads.add(key)
            fingerprints.append(candidate)
        digests = {canonical_hash(f, SCHEMA).digest for f in fingerprints}
        assert len(digests) == 1000

    def test_missing_attribute_is_schema_mismatch(self):
        broken = fp()
        del broken["lang"]
        with pytest.raises(SchemaMismatchError):
            canonical_hash(broken, SCHEMA)

    def test_digest_is_32_bytes(self):
        assert len(canonical_hash(fp(), SCHEMA).digest) == 32

    def test_set_order_does_not_matter(self):
        a = fp(fonts=frozenset({"arial", "courier"}))
        b = fp(fonts=frozenset({"courier", "arial"}))
        assert canonical_hash(a, SCHEMA) == canonical_hash(b, SCHEMA)


class TestValueIdentical:
    def test_equal_strings(self):
        assert value_identical("fr", "fr")

    def test_equal_flags(self):
        assert value_identical(ErrorFlag.TIMEOUT, ErrorFlag.TIMEOUT)

    def test_flag_never_equals_value(self):
        assert not value_identical(ErrorFlag.TIMEOUT, "")
        assert not value_identical("timeout", ErrorFlag.TIMEOUT)

    def test_different_flags_differ(self):
        assert not value_identical(ErrorFlag.TIMEOUT, ErrorFlag.EXCEPTION)

    def test_int_float_not_identical(self):
        assert not value_identical(3, 3.0)

    def test_bool_int_not_identical(self):
        assert not value_identical(True, 1)

    def test_nan_is_reflexive(self):
        assert value_identical(float("nan"), float("nan"))

    def test_hash_agrees_with_identity(self):
        # Value-equal fingerprints hash equal; value-different ones do not.
        pairs = [
            (fp(), fp(), True),
            (fp(width=3), fp(width=3.0), False),
            (fp(ua=ErrorFlag.TIMEOUT), fp(ua=ErrorFlag.TIMEOUT), True),
        ]
        for a, b, same in pairs:
            assert (canonical_hash(a, SCHEMA) == canonical_hash(b, SCHEMA)) is same


_values = st.one_of(
    st.text(max_size=6),
    st.integers(min_value=-5, max_value=5),
    st.floats(allow_infinity=False, width=32),
    st.booleans(),
    st.frozensets(st.text(max_size=3), max_size=3),
    st.sampled_from(list(ErrorFlag)),
)


class TestEquivalenceRelation:
    @given(_values)
    def test_reflexive(self, v):
        assert value_identical(v, v)

    @given(_values, _values)
    def test_symmetric(self, a, b):
        assert value_identical(a, b) == value_identical(b, a)

    @given(_values, _values, _values)
    @settings(max_examples=300)
    def test_transitive(self, a, b, c):
        if value_identical(a, b) and value_identical(b, c):
            assert value_identical(a, c)


class TestSchema:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            validate_schema([AttributeDescriptor("a"), AttributeDescriptor("a")])

    def test_extracted_from_must_exist(self):
        with pytest.raises(ValueError, match="unknown"):
            validate_schema([AttributeDescriptor("a", extracted_from="missing")])

    def test_extracted_from_extracted_rejected(self):
        with pytest.raises(ValueError, match="itself extracted"):
            validate_schema(
                [
                    AttributeDescriptor("a"),
                    AttributeDescriptor("b", extracted_from="a"),
                    AttributeDescriptor("c", extracted_from="b"),
                ]
            )

    def test_dynamic_must_be_categorical(self):
        with pytest.raises(ValueError, match="categorical"):
            AttributeDescriptor("canvas", kind="textual", dynamic=True)

    def test_roundtrip(self):
        schema = [
            AttributeDescriptor("a", kind="numeric"),
            AttributeDescriptor("canvas", kind="categorical", dynamic=True),
            AttributeDescriptor("a_len", extracted_from="a", kind="numeric"),
        ]
        assert schema_from_json(schema_to_json(schema)) == schema


class TestInterchange:
    def test_value_json_roundtrip(self):
        for v in ["x", 3, 2.5, True, frozenset({"a", "b"}), ErrorFlag.UNSUPPORTED]:
            assert value_identical(json_to_value(value_to_json(v)), v)

    def test_entry_roundtrip(self):
        entry = Entry(
            fingerprint=fp(),
            uid="u1",
            ts_ms=123,
            ip_hash="ab" * 32,
            per_attribute_time_ms={"ua": 5, "_total": 800},
        )
        again = entry_from_json(json.loads(json.dumps(entry_to_json(entry))))
        assert again.uid == entry.uid
        assert again.ts_ms == entry.ts_ms
        assert again.per_attribute_time_ms == entry.per_attribute_time_ms
        assert canonical_hash(again.fingerprint, SCHEMA) == canonical_hash(
            entry.fingerprint, SCHEMA
        )

    def test_malformed_flag_object_rejected(self):
        with pytest.raises(ValueError):
            json_to_value({"flag": "timeout", "extra": 1})

    def test_dataset_sorted_by_uid_then_ts(self):
        entries = [
            Entry(fp(), "b", 5, "00" * 32),
            Entry(fp(), "a", 9, "00" * 32),
            Entry(fp(), "a", 2, "00" * 32),
        ]
        ds = Dataset.build(SCHEMA, entries)
        assert [(e.uid, e.ts_ms) for e in ds.entries] == [("a", 2), ("a", 9), ("b", 5)]

    def test_validation_catches_extra_and_missing(self):
        bad = Entry({"ua": "x"}, "u", 0, "00" * 32)
        with pytest.raises(SchemaMismatchError):
            Dataset.build(SCHEMA, [bad], validate=True)


class TestLegacyImport:
    def test_wrong_field_count_counted_not_fatal(self, tmp_path):
        schema = [AttributeDescriptor("a"), AttributeDescriptor("b")]
        path = tmp_path / "legacy.csv"
        path.write_text(
            "u1;100;ff;va;vb\n"
            "truncated;line\n"
            "u2;200;ff;va\n"  # one field short
            "u3;300;ff;x;y\n"
        )
        entries, rejected = read_legacy(str(path), schema)
        assert rejected == 2
        assert [e.uid for e in entries] == ["u1", "u3"]
        assert entries[0].fingerprint == {"a": "va", "b": "vb"}

    def test_negative_timestamp_rejected(self, tmp_path):
        schema = [AttributeDescriptor("a")]
        path = tmp_path / "legacy.csv"
        path.write_text("u1;-5;ff;va\n")
        entries, rejected = read_legacy(str(path), schema)
        assert entries == [] and rejected == 1


class TestFingerprintVector:
    def test_mapping_behavior(self):
        index = FingerprintVector.index_for(SCHEMA)
        vec = FingerprintVector(index, ("m", "fr", frozenset(), 10))
        assert vec["lang"] == "fr"
        assert len(vec) == 4
        assert dict(vec)["width"] == 10
        assert canonical_hash(vec, SCHEMA) == canonical_hash(dict(vec), SCHEMA)


class TestSerialization:
    def test_shortest_roundtrip_decimal(self):
        assert serialize_value(0.1) == "0.1"
        assert serialize_value(3) == "3"
        assert serialize_value(3.0) == "3.0"

    def test_flag_encoding(self):
        assert serialize_value(ErrorFlag.TIMEOUT) == "\x02FLAG:timeout"

    def test_entropy_of_digest_space(self):
        # Sanity: hashes live in a 256-bit space, log2 is exact here.
        assert math.log2(2**256) == 256
