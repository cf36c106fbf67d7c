"""Hook for counting secret-key operations; the simulator attributes them to nodes."""

from contextlib import contextmanager

_observers: list = []


def observe(operation: str) -> None:
    for fn in _observers:
        fn(operation)


@contextmanager
def watching(callback):
    _observers.append(callback)
    try:
        yield
    finally:
        _observers.remove(callback)
