"""Binary field codec: big-endian integers, 32-bit length prefixes.

All on-disk and on-wire formats in the package go through :class:`Writer`
and :class:`Reader`.  Reading is strict: truncation, trailing bytes and
non-minimal integer encodings raise :class:`FormatError`.
"""

import struct

from .errors import FormatError


def int_to_bytes(x: int, width: int | None = None) -> bytes:
    if x < 0:
        raise ValueError("negative integer")
    if width is None:
        width = (x.bit_length() + 7) // 8
    return x.to_bytes(width, "big")


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def u8(self, x: int) -> "Writer":
        return self.raw(struct.pack(">B", x))

    def u16(self, x: int) -> "Writer":
        return self.raw(struct.pack(">H", x))

    def u32(self, x: int) -> "Writer":
        return self.raw(struct.pack(">I", x))

    def u64(self, x: int) -> "Writer":
        return self.raw(struct.pack(">Q", x))

    def blob(self, data: bytes) -> "Writer":
        """32-bit length prefix followed by the bytes."""
        return self.u32(len(data)).raw(data)

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def integer(self, x: int) -> "Writer":
        """Length-prefixed minimal big-endian unsigned integer (0 -> empty)."""
        return self.blob(int_to_bytes(x))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def raw(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise FormatError(f"truncated input at offset {self._pos}")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def expect(self, magic: bytes) -> None:
        got = self.raw(len(magic))
        if got != magic:
            raise FormatError(f"bad magic {got!r}, expected {magic!r}")

    def u8(self) -> int:
        return self.raw(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.raw(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8))[0]

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("invalid UTF-8 string") from exc

    def integer(self) -> int:
        data = self.blob()
        if data[:1] == b"\x00":
            raise FormatError("non-minimal integer encoding")
        return int.from_bytes(data, "big")

    def done(self) -> None:
        if self.remaining:
            raise FormatError(f"{self.remaining} trailing bytes")
