"""Canonical binary serialization and hashing.

Every on-chain structure is serialized as length-prefixed fields in declared
order, so two processes always produce byte-identical encodings for the same
logical value. All hashes are SHA-256 over these canonical bytes.

Wire format:
    field       := u32_be(len(content)) || content
    uint        := 8-byte big-endian (values must fit in 64 bits)
    str         := UTF-8 bytes
    bytes       := raw
    fraction    := field(uint numerator) || field(uint denominator)
    list        := u32_be(count) || field(item_0) || ... || field(item_n-1)
"""

from __future__ import annotations

import hashlib
from fractions import Fraction

U64_MAX = 2**64 - 1


class DecodeError(ValueError):
    """Raised when canonical bytes cannot be parsed back into a structure."""


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def enc_uint(n: int) -> bytes:
    if not 0 <= n <= U64_MAX:
        raise ValueError(f"uint out of range: {n}")
    return n.to_bytes(8, "big")


def enc_str(s: str) -> bytes:
    return s.encode("utf-8")


def enc_fraction(f: Fraction) -> bytes:
    if f < 0:
        raise ValueError(f"negative fraction not encodable: {f}")
    return frame(enc_uint(f.numerator), enc_uint(f.denominator))


def frame(*parts: bytes) -> bytes:
    """Concatenate parts, each prefixed with its 4-byte big-endian length."""
    out = bytearray()
    for p in parts:
        out += len(p).to_bytes(4, "big")
        out += p
    return bytes(out)


def enc_list(items: list[bytes]) -> bytes:
    return len(items).to_bytes(4, "big") + frame(*items)


class Reader:
    """Sequential reader over canonical bytes; every read is bounds-checked."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DecodeError("truncated field")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def field(self) -> bytes:
        length = int.from_bytes(self._take(4), "big")
        return self._take(length)

    def uint(self) -> int:
        raw = self.field()
        if len(raw) != 8:
            raise DecodeError("uint field must be 8 bytes")
        return int.from_bytes(raw, "big")

    def string(self) -> str:
        try:
            return self.field().decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodeError(f"invalid utf-8: {e}") from e

    def fraction(self) -> Fraction:
        sub = Reader(self.field())
        num = sub.uint()
        den = sub.uint()
        if den == 0:
            raise DecodeError("fraction with zero denominator")
        return Fraction(num, den)

    def list_fields(self) -> list[bytes]:
        count = int.from_bytes(self._take(4), "big")
        return [self.field() for _ in range(count)]

    def done(self) -> bool:
        return self._pos == len(self._data)

    def expect_end(self) -> None:
        if not self.done():
            raise DecodeError("trailing bytes after structure")
