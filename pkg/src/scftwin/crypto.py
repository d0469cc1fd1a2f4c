"""Signing for node identities.

Non-repudiation is semantic here, not cryptographic policy: the scheme sits
behind a small interface so a real asymmetric signer can be dropped in. The
default is a deterministic keyed MAC (HMAC-SHA256), which gives byte-stable
signatures for reproducible chains. A node's ``public_key`` doubles as the
MAC key in this mode.
"""

from __future__ import annotations

import hashlib
import hmac
from typing import Protocol


class Signer(Protocol):
    def sign(self, key: bytes, message: bytes) -> bytes: ...

    def verify(self, key: bytes, message: bytes, signature: bytes) -> bool: ...


class HmacSigner:
    """Deterministic HMAC-SHA256 signer used throughout the desk-scale twin."""

    def sign(self, key: bytes, message: bytes) -> bytes:
        return hmac.new(key, message, hashlib.sha256).digest()

    def verify(self, key: bytes, message: bytes, signature: bytes) -> bool:
        return hmac.compare_digest(self.sign(key, message), signature)


def derive_key(network_secret: str, node_id: str) -> bytes:
    """Stable per-node key so replays of the same network re-create identical
    signatures."""
    return hashlib.sha256(f"{network_secret}:{node_id}".encode("utf-8")).digest()


DEFAULT_SIGNER = HmacSigner()
