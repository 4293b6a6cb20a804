"""In-memory memo of inner evaluations keyed by the resolved dof vector."""

from __future__ import annotations

import threading
from collections import OrderedDict
from collections.abc import Sequence
from typing import Any

Key = tuple[float, ...]


def dof_key(values: Sequence[float], digits: int = 12) -> Key:
    """Round so that points reached by different step paths share an entry."""
    return tuple(round(float(v), digits) for v in values)


class EvaluationCache:
    """Bounded least-recently-used cache, safe to share between worker threads."""

    def __init__(self, max_entries: int = 65536) -> None:
        self._store: OrderedDict[Key, Any] = OrderedDict()
        self._max = max_entries
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key: Key) -> Any | None:
        with self._lock:
            entry = self._store.get(key)
            if entry is None:
                self.misses += 1
                return None
            self._store.move_to_end(key)
            self.hits += 1
            return entry

    def set(self, key: Key, value: Any) -> None:
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self._max:
                self._store.popitem(last=False)
