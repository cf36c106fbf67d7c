"""Operational key generation and n-of-n share combination."""

from dataclasses import dataclass
from functools import reduce

from ..cryptosuite.keystream import KEY_BYTES, SymmetricKey, initial_state, keystream_many
from ..cryptosuite.registry import SuiteRegistry, lookup_suite
from ..errors import CapacityExhausted, ParameterError, RekeyError
from ..labels import ClassificationLabel
from ..lifecycle import KeyKind, KeyRecord, KeyState
from ..rng import derive

# retries per key before the suite is judged too small for the batch
MAX_ATTEMPTS = 256


def combine_operational_keys(shares):
    """Byte-wise XOR of all shares.

    Accepts SymmetricKey values (returns a SymmetricKey) or raw bytes.
    """
    shares = list(shares)
    if not shares:
        raise ParameterError("at least one share is required")
    raw = [s.key_bytes if isinstance(s, SymmetricKey) else bytes(s) for s in shares]
    if len({len(r) for r in raw}) != 1:
        raise ParameterError("shares differ in length")
    combined = reduce(lambda a, b: bytes(x ^ y for x, y in zip(a, b)), raw)
    if isinstance(shares[0], SymmetricKey):
        if not all(isinstance(s, SymmetricKey) for s in shares) or len({s.suite_id for s in shares}) != 1:
            raise ParameterError("shares belong to different suites")
        return SymmetricKey(combined, shares[0].suite_id)
    return combined


@dataclass(frozen=True)
class BatchSpec:
    count: int
    classification: ClassificationLabel
    suite_id: int
    infrastructure_id: str = "osm"
    role: str = "osm"
    state: KeyState = KeyState.ACTIVE


def ngdm_generate_batch(spec: BatchSpec, seed: bytes, registry: SuiteRegistry) -> list[KeyRecord]:
    """``spec.count`` distinct OSM keys, each drawn from the suite keystream
    under its own derived seed.  Deterministic in ``seed``.

    Raises CapacityExhausted when the suite's generator cannot supply that
    many distinct keys (tiny test moduli have only a handful of states).
    """
    if spec.count < 1:
        raise ParameterError("count must be at least 1")
    suite = lookup_suite(registry, spec.suite_id)
    attempt = [0] * spec.count
    keys: list[bytes | None] = [None] * spec.count
    todo = list(range(spec.count))
    seen: set[bytes] = set()
    while todo:
        seeds = {}
        for i in todo:
            if attempt[i] >= MAX_ATTEMPTS:
                raise CapacityExhausted(f"suite {spec.suite_id} yields fewer than {spec.count} distinct keys")
            while True:
                s = derive(seed, "ngdm", spec.suite_id, i, attempt[i])
                try:
                    initial_state(s, suite)
                    break
                except RekeyError:
                    attempt[i] += 1
            seeds[i] = s
        streams = keystream_many([seeds[i] for i in todo], suite, KEY_BYTES)
        retry = []
        for i, k in zip(todo, streams):
            if k in seen or not any(k):
                attempt[i] += 1
                retry.append(i)
            else:
                seen.add(k)
                keys[i] = k
        todo = retry
    return [KeyRecord(f"{spec.infrastructure_id}/{i:06d}", KeyKind.OSM, spec.role, k,
                      spec.classification, spec.infrastructure_id, spec.state)
            for i, k in enumerate(keys)]
