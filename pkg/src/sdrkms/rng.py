"""Deterministic byte generator used wherever the package needs randomness.

Counter-mode SHA-256 over a 32-byte seed.  Every probabilistic operation takes
either an explicit seed or one of these, so simulations replay exactly.
"""

import hashlib
import os


def derive(seed: bytes, *labels) -> bytes:
    """32-byte child seed bound to ``labels`` (str, int or bytes)."""
    h = hashlib.sha256(b"sdrkms-derive")
    h.update(len(seed).to_bytes(4, "big") + bytes(seed))
    for label in labels:
        if isinstance(label, int):
            label = label.to_bytes(8, "big", signed=True)
        elif isinstance(label, str):
            label = label.encode("utf-8")
        h.update(len(label).to_bytes(4, "big") + label)
    return h.digest()


def seed_from_text(text: str) -> bytes:
    """Accept 64 hex digits verbatim, otherwise hash the text."""
    try:
        raw = bytes.fromhex(text)
        if len(raw) == 32:
            return raw
    except ValueError:
        pass
    return hashlib.sha256(text.encode("utf-8")).digest()


class Drbg:
    def __init__(self, seed: bytes | None = None):
        if seed is None:
            seed = os.urandom(32)
        self._key = hashlib.sha256(b"sdrkms-drbg" + bytes(seed)).digest()
        self._counter = 0
        self._buf = b""

    def randbytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbits(self, k: int) -> int:
        nbytes = (k + 7) // 8
        x = int.from_bytes(self.randbytes(nbytes), "big")
        return x >> (nbytes * 8 - k)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("upper bound must be positive")
        k = n.bit_length()
        while True:
            x = self.randbits(k)
            if x < n:
                return x

    def randrange(self, lo: int, hi: int) -> int:
        return lo + self.randbelow(hi - lo)

    def child(self, *labels) -> "Drbg":
        return Drbg(derive(self.randbytes(32), *labels))
