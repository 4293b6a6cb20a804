"""Tests for EvaluationCache."""

from app.services.cache import EvaluationCache, dof_key


def test_set_and_get():
    cache = EvaluationCache()
    cache.set((1.0, 2.0), 71.87)
    assert cache.get((1.0, 2.0)) == 71.87


def test_get_missing_key_returns_none():
    cache = EvaluationCache()
    assert cache.get((0.0,)) is None
    assert cache.misses == 1


def test_hits_counted():
    cache = EvaluationCache()
    cache.set((3.0,), "x")
    cache.get((3.0,))
    cache.get((3.0,))
    assert cache.hits == 2


def test_evicts_least_recently_used():
    cache = EvaluationCache(max_entries=2)
    cache.set((1.0,), "a")
    cache.set((2.0,), "b")
    cache.get((1.0,))
    cache.set((3.0,), "c")
    assert cache.get((2.0,)) is None
    assert cache.get((1.0,)) == "a"
    assert len(cache) == 2


def test_overwrite():
    cache = EvaluationCache()
    cache.set((1.0,), "old")
    cache.set((1.0,), "new")
    assert cache.get((1.0,)) == "new"


def test_dof_key_merges_float_noise():
    assert dof_key([0.1 + 0.2, 1.0]) == dof_key([0.3, 1.0])
