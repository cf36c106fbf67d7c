"""Pseudo-one-time pad driven by the x^2 mod n generator.

Seed: s = H(key) mod n, x0 = s^2 mod n.  Output bit i is the low bit of
x_{i+1} = x_i^2 mod n, bits packed MSB-first into bytes.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np

from ..errors import ParameterError, RekeyError
from .audit import observe
from .suite import AlgorithmSuite

KEY_BYTES = 32


@dataclass(frozen=True)
class SymmetricKey:
    key_bytes: bytes
    suite_id: int

    def __post_init__(self):
        if len(self.key_bytes) != KEY_BYTES:
            raise ParameterError(f"symmetric keys are exactly {KEY_BYTES} bytes")

    def __repr__(self):
        return f"SymmetricKey(suite_id={self.suite_id}, <{KEY_BYTES} bytes>)"


def squaring_bits(x0: int, n: int, count: int) -> list[int]:
    """Low bits of x0^2, x0^4, ... (``count`` of them)."""
    out = []
    x = x0
    for _ in range(count):
        x = x * x % n
        out.append(x & 1)
    return out


def initial_state(key_bytes: bytes, suite: AlgorithmSuite) -> int:
    n = suite.stream.n_str
    s = int.from_bytes(suite.hash(key_bytes), "big") % n
    if s == 0 or gcd(s, n) != 1:
        raise RekeyError("key maps onto a degenerate generator state; draw a new key")
    return s * s % n


def keystream(key: SymmetricKey | bytes, suite: AlgorithmSuite, length: int) -> bytes:
    if length < 0:
        raise ParameterError("length must be non-negative")
    observe("keystream")
    key_bytes = key.key_bytes if isinstance(key, SymmetricKey) else bytes(key)
    x = initial_state(key_bytes, suite)
    n = suite.stream.n_str
    out = bytearray(length)
    for i in range(length):
        byte = 0
        for _ in range(8):
            x = x * x % n
            byte = (byte << 1) | (x & 1)
        out[i] = byte
    return bytes(out)


def keystream_many(keys: list[bytes], suite: AlgorithmSuite, length: int) -> list[bytes]:
    """Same output as :func:`keystream` for each key, vectorised when n < 2^32.

    Keys hitting a degenerate state raise RekeyError for the whole call; use
    :func:`initial_state` first to filter.
    """
    observe("keystream")
    n = suite.stream.n_str
    states = [initial_state(k, suite) for k in keys]
    if n >= 1 << 32 or not keys:
        return [keystream(k, suite, length) for k in keys]
    x = np.array(states, dtype=np.uint64)
    nn = np.uint64(n)
    bits = np.empty((len(keys), 8 * length), dtype=np.uint8)
    for i in range(8 * length):
        x = (x * x) % nn
        bits[:, i] = (x & np.uint64(1)).astype(np.uint8)
    packed = np.packbits(bits, axis=1)
    return [row.tobytes() for row in packed]


def potp_xor(stream: bytes, data: bytes) -> bytes:
    if len(stream) != len(data):
        raise ParameterError("keystream and data lengths differ")
    if not data:
        return b""
    x = int.from_bytes(stream, "big") ^ int.from_bytes(data, "big")
    return x.to_bytes(len(data), "big")


def potp_encrypt(key: SymmetricKey | bytes, suite: AlgorithmSuite, data: bytes) -> bytes:
    return potp_xor(keystream(key, suite, len(data)), data)
