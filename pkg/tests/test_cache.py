import json
from fractions import Fraction

import numpy as np
import pytest

from harperlab.bands import BandSet
from harperlab.cache import BandCache, CacheWarning, cache_dir, cache_key
from harperlab.model import amo, chiral_amo
from harperlab.spectral import union_spectrum

MODEL = amo(1).cache_key()


def test_round_trip(tmp_path):
    cache = BandCache(tmp_path)
    bs = union_spectrum(amo(1), Fraction(2, 5), 1e-9)
    key = cache_key(MODEL, 2, 5, 1e-9)
    assert cache.get(key) is None
    cache.put(key, bs, {"model": MODEL, "p": 2, "q": 5, "tol": 1e-9})
    back = cache.get(key)
    assert np.array_equal(back.intervals, bs.intervals)
    doc = json.loads(cache.path(key).read_text())
    for field in ("model", "p", "q", "tol", "bands", "created", "version"):
        assert field in doc
    assert not list(tmp_path.glob(".tmp-*"))


def test_key_depends_on_every_field():
    base = cache_key(MODEL, 1, 3, 1e-9)
    assert cache_key(MODEL, 1, 3, 1e-8) != base
    assert cache_key(MODEL, 2, 3, 1e-9) != base
    assert cache_key(MODEL, 1, 4, 1e-9) != base
    assert cache_key(chiral_amo().cache_key(), 1, 3, 1e-9) != base
    assert cache_key(MODEL, 1, 3, 1e-9, version="0.0.0") != base
    assert cache_key(MODEL, 1, 3, 1e-9) == base


def test_tol_change_is_a_miss(tmp_path):
    cache = BandCache(tmp_path)
    bs = BandSet.from_intervals([[0, 1]])
    cache.put(cache_key(MODEL, 1, 2, 1e-9), bs, {})
    assert cache.get(cache_key(MODEL, 1, 2, 1e-6)) is None


def test_truncated_file_warns_and_misses(tmp_path):
    cache = BandCache(tmp_path)
    key = cache_key(MODEL, 1, 2, 1e-9)
    cache.put(key, BandSet.from_intervals([[0, 1], [2, 3]]), {})
    text = cache.path(key).read_text()
    cache.path(key).write_text(text[: len(text) // 2])
    with pytest.warns(CacheWarning):
        assert cache.get(key) is None


def test_unsorted_payload_warns_and_misses(tmp_path):
    cache = BandCache(tmp_path)
    key = cache_key(MODEL, 1, 2, 1e-9)
    cache.path(key).parent.mkdir(parents=True, exist_ok=True)
    cache.path(key).write_text(json.dumps({"version": cache.version, "bands": [[2, 3], [0, 1]]}))
    with pytest.warns(CacheWarning):
        assert cache.get(key) is None


def test_version_mismatch_recomputes(tmp_path):
    old = BandCache(tmp_path, version="0.0.1")
    key = cache_key(MODEL, 1, 2, 1e-9)
    old.put(key, BandSet.from_intervals([[0, 1]]), {})
    assert BandCache(tmp_path).get(key) is None


def test_warm_equals_cold(tmp_path):
    cache = BandCache(tmp_path)
    cold = cache.union_spectrum(chiral_amo(), Fraction(3, 7), 1e-9)
    warm = cache.union_spectrum(chiral_amo(), Fraction(3, 7), 1e-9)
    assert np.array_equal(cold.intervals, warm.intervals)
    assert len(list(tmp_path.glob("*.json"))) == 1


def test_cache_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.setenv("HARPERLAB_CACHE_DIR", str(tmp_path / "env"))
    assert cache_dir() == tmp_path / "env"
    assert cache_dir(tmp_path / "flag") == tmp_path / "flag"
    monkeypatch.delenv("HARPERLAB_CACHE_DIR")
    assert str(cache_dir()) == ".harperlab-cache"
