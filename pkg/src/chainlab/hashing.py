"""Hashing primitives, difficulty targets, and Merkle tree construction.

Digests are raw 32-byte strings. Whenever a digest is compared against a
target it is interpreted as a 256-bit big-endian unsigned integer, so
"digest below target 2^(256-z)" is the same statement as "the top z bits
of the digest are zero".
"""

from __future__ import annotations

import hashlib

DIGEST_SIZE = 32

# Largest value a 256-bit target can take.
MAX_TARGET = (1 << 256) - 1


def double_sha256(data: bytes) -> bytes:
    """SHA-256 applied twice. Pure and deterministic; empty input allowed."""
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def digest_to_int(digest: bytes) -> int:
    """Big-endian numeric value of a 32-byte digest."""
    if len(digest) != DIGEST_SIZE:
        raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(digest)}")
    return int.from_bytes(digest, "big")


def target_from_zero_bits(zero_bits: int) -> int:
    """Target below which a digest's top `zero_bits` bits are all zero.

    Returns 2**(256 - zero_bits); zero_bits = 0 is capped to MAX_TARGET so
    every digest qualifies.
    """
    if not 0 <= zero_bits <= 255:
        raise ValueError(f"zero_bits must be in [0, 255], got {zero_bits}")
    if zero_bits == 0:
        return MAX_TARGET
    return 1 << (256 - zero_bits)


def check_target(target: int) -> int:
    """Validate a target value and return it."""
    if not 0 < target <= MAX_TARGET:
        raise ValueError(f"target must be in (0, 2**256 - 1], got {target}")
    return target


def merkle_root(leaf_hashes: list[bytes]) -> bytes:
    """Merkle root over an ordered list of 32-byte leaf hashes.

    Siblings are combined with double_sha256(left || right) level by level;
    an odd node at any level is paired with a copy of itself. A single leaf
    is its own root.
    """
    if not leaf_hashes:
        raise ValueError("merkle_root requires at least one leaf")
    level = list(leaf_hashes)
    for leaf in level:
        if len(leaf) != DIGEST_SIZE:
            raise ValueError("merkle leaves must be 32-byte digests")
    while len(level) > 1:
        if len(level) % 2 == 1:
            level.append(level[-1])
        level = [
            double_sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)
        ]
    return level[0]
