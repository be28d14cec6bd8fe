"""Content-addressed ball cache: record format, integrity, and store round trips."""

from __future__ import annotations

import json
import os
from fractions import Fraction

import pytest

from wreathdim import (
    BallRecord,
    BallStore,
    IntegrityError,
    LengthOracle,
    ball,
    default_store,
)
from wreathdim.ballstore import CACHE_ENV, FORMAT_VERSION, MAGIC


def make_record(ctx, radius):
    table = ball(ctx, radius)
    return BallRecord(
        ctx.spec_hash,
        Fraction(radius),
        tuple(ctx.encode(g) for g in table.elements),
        tuple(table.lengths[g] for g in table.elements),
    )


# -- record validation ----------------------------------------------------------


def test_record_requires_hex_spec_hash(z):
    rec = make_record(z, 4)
    with pytest.raises(ValueError, match="hex"):
        BallRecord("zz", rec.radius, rec.encodings, rec.lengths)


def test_record_requires_sorted_encodings(z):
    rec = make_record(z, 4)
    with pytest.raises(ValueError, match="increasing"):
        BallRecord(rec.spec_hash, rec.radius, rec.encodings[::-1], rec.lengths)


def test_record_rejects_lengths_outside_radius(z):
    rec = make_record(z, 4)
    with pytest.raises(ValueError):
        BallRecord(rec.spec_hash, rec.radius, rec.encodings, (9,) * rec.count)


def test_record_rejects_count_mismatch(z):
    rec = make_record(z, 4)
    with pytest.raises(ValueError):
        BallRecord(rec.spec_hash, rec.radius, rec.encodings, rec.lengths[:-1])


# -- binary format ----------------------------------------------------------------


def test_record_bytes_round_trip(z, f2):
    for ctx in (z, f2):
        rec = make_record(ctx, 3)
        back = BallRecord.from_bytes(rec.to_bytes())
        assert back == rec
        assert back.content_id == rec.content_id


def test_record_bytes_start_with_magic_and_version(z):
    raw = make_record(z, 3).to_bytes()
    assert raw[:8] == MAGIC
    assert int.from_bytes(raw[8:12], "little") == FORMAT_VERSION


def test_from_bytes_rejects_bad_magic(z):
    raw = make_record(z, 3).to_bytes()
    with pytest.raises(IntegrityError, match="magic"):
        BallRecord.from_bytes(b"XXXXXXXX" + raw[8:])


def test_from_bytes_rejects_flipped_body_bit(z):
    raw = bytearray(make_record(z, 3).to_bytes())
    raw[-1] ^= 1
    with pytest.raises(IntegrityError):
        BallRecord.from_bytes(bytes(raw))


def test_from_bytes_rejects_trailing_bytes(z):
    raw = make_record(z, 3).to_bytes()
    with pytest.raises(IntegrityError):
        BallRecord.from_bytes(raw + b"\x00")


def test_filter_to_smaller_radius(z):
    rec = make_record(z, 4)
    small = rec.filter_to(Fraction(3))
    assert small.radius == Fraction(3)
    assert small.count == 5
    assert max(small.lengths) <= 2


def test_filter_to_cannot_widen(z):
    rec = make_record(z, 4)
    with pytest.raises(ValueError):
        rec.filter_to(Fraction(6))


# -- store ------------------------------------------------------------------------


def test_store_save_load_round_trip(z, tmp_path):
    store = BallStore(tmp_path)
    rec = make_record(z, 4)
    content_id = store.save(rec)
    assert (tmp_path / f"{content_id}.ball").exists()
    assert store.load(z.spec_hash, Fraction(4)) == rec


def test_store_save_is_idempotent(z, tmp_path):
    store = BallStore(tmp_path)
    rec = make_record(z, 4)
    assert store.save(rec) == store.save(rec)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["balls"]) == 1


def test_store_load_filters_down_from_larger_record(z, tmp_path):
    store = BallStore(tmp_path)
    store.save(make_record(z, 5))
    got = store.load(z.spec_hash, Fraction(3))
    assert got is not None
    assert got.radius == Fraction(3)
    assert got == make_record(z, 3)


def test_store_load_misses(z, f2, tmp_path):
    store = BallStore(tmp_path)
    store.save(make_record(z, 4))
    assert store.load("0" * 64, Fraction(2)) is None
    assert store.load(f2.spec_hash, Fraction(2)) is None
    assert store.load(z.spec_hash, Fraction(9)) is None


def test_store_detects_tampered_file(z, tmp_path):
    store = BallStore(tmp_path)
    rec = make_record(z, 4)
    content_id = store.save(rec)
    path = tmp_path / f"{content_id}.ball"
    blob = bytearray(path.read_bytes())
    blob[-1] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(IntegrityError):
        store.load(z.spec_hash, Fraction(4))


def test_ball_uses_store_between_calls(z, tmp_path):
    store = BallStore(tmp_path)
    first = ball(z, 4, store=store)
    assert store.load(z.spec_hash, Fraction(4)) is not None
    second = ball(z, 4, store=store)
    assert second.elements == first.elements
    assert second.lengths == first.lengths


def test_stored_ball_matches_fresh_search(lamplighter, tmp_path):
    store = BallStore(tmp_path)
    ball(lamplighter, 5, store=store)
    cached = ball(lamplighter, 4, store=store)
    fresh = ball(lamplighter, 4)
    assert cached.elements == fresh.elements
    assert all(cached.lengths[g] == fresh.lengths[g] for g in fresh.elements)


def test_length_oracle_accepts_store(z, tmp_path):
    store = BallStore(tmp_path)
    LengthOracle(z, store=store).ball(5)
    oracle = LengthOracle(z, store=store)
    assert oracle.length(4) == 4
    assert store.load(z.spec_hash, Fraction(5)) is not None


# -- default store ------------------------------------------------------------------


def test_default_store_is_none_without_configuration(monkeypatch):
    monkeypatch.delenv(CACHE_ENV, raising=False)
    assert default_store(None) is None


def test_default_store_reads_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    store = default_store()
    assert store is not None
    assert str(tmp_path) in str(store.directory)


def test_default_store_explicit_dir_wins(monkeypatch, tmp_path):
    monkeypatch.setenv(CACHE_ENV, "/nonexistent-env-dir")
    store = default_store(tmp_path)
    assert str(tmp_path) in str(store.directory)
