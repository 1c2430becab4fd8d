"""Shared fixtures and dataset builders."""

from __future__ import annotations

import pytest

from fpkit.model import AttributeDescriptor, Dataset, Entry


def make_schema(*names: str, kinds: dict[str, str] | None = None) -> list[AttributeDescriptor]:
    kinds = kinds or {}
    return [AttributeDescriptor(name=n, kind=kinds.get(n, "textual")) for n in names]


def make_entry(schema, uid, ts_ms, ip_hash="00" * 32, **values) -> Entry:
    fingerprint = {d.name: values.get(d.name, f"{d.name}-default") for d in schema}
    return Entry(fingerprint=fingerprint, uid=uid, ts_ms=ts_ms, ip_hash=ip_hash)


def make_dataset(schema, entries) -> Dataset:
    return Dataset.build(schema, entries, provenance=("test",))


@pytest.fixture
def tiny_schema():
    return make_schema("userAgent", "cookieEnabled", "lang", "screen")
