"""Proof-of-work puzzle checking, mining backends, and difficulty retargeting.

Two mining backends exist. The exact backend really hashes headers, scanning
nonce values until double_sha256(header) meets the target. The statistical
backend skips hashing and samples the time-to-success from an exponential
distribution with rate hash_rate * target / 2**256; it is the default inside
simulations, where real hashing would dominate the runtime.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .hashing import MAX_TARGET, check_target, digest_to_int, double_sha256
from .ledger import BlockHeader, serialize_header

NONCE_LIMIT = 1 << 32


@dataclass(frozen=True)
class PowParams:
    retarget_interval_blocks: int = 2016
    target_block_interval: float = 600.0
    initial_target: int = 1 << 236
    clamp_factor: float = 4.0
    # Header-vs-target comparison; the non-strict form is the default.
    strict_comparison: bool = False

    def __post_init__(self) -> None:
        if self.retarget_interval_blocks < 1:
            raise ValueError("retarget_interval_blocks must be >= 1")
        if self.target_block_interval <= 0:
            raise ValueError("target_block_interval must be positive")
        if self.clamp_factor < 1:
            raise ValueError("clamp_factor must be >= 1")
        check_target(self.initial_target)

    @property
    def expected_window_seconds(self) -> float:
        return self.retarget_interval_blocks * self.target_block_interval


def check_pow(header: BlockHeader, target: int, *, strict: bool = False) -> bool:
    """True when the double-SHA256 of the header meets the target."""
    value = digest_to_int(double_sha256(serialize_header(header)))
    return value < target if strict else value <= target


class MineResult(NamedTuple):
    nonce: int
    attempts: int


def mine(
    header: BlockHeader,
    target: int,
    *,
    nonce_start: int = 0,
    max_attempts: int = NONCE_LIMIT,
    strict: bool = False,
) -> MineResult | None:
    """Scan nonces sequentially until the header hash meets the target.

    Returns the first qualifying nonce and the number of attempts spent, or
    None when max_attempts is exhausted (a normal outcome, not an error).
    Nonce values wrap modulo 2**32; the caller refreshes the timestamp and
    retries if a full wrap yields nothing.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    prefix = serialize_header(header)[:76]
    sha = __import__("hashlib").sha256
    pack = struct.Struct("<I").pack
    for attempt in range(max_attempts):
        nonce = (nonce_start + attempt) % NONCE_LIMIT
        digest = sha(sha(prefix + pack(nonce)).digest()).digest()
        value = int.from_bytes(digest, "big")
        if (value < target) if strict else (value <= target):
            return MineResult(nonce=nonce, attempts=attempt + 1)
    return None


def success_probability(target: int) -> float:
    """Per-attempt probability that a uniform 256-bit hash meets the target."""
    return target / float(1 << 256)


def statistical_mine(hash_rate: float, target: int, rng: random.Random) -> float:
    """Simulated seconds until a miner at hash_rate finds a block.

    Exponential with rate hash_rate * p where p = target / 2**256. The
    memoryless form keeps races between miners unbiased when mining restarts
    on a new tip.
    """
    if hash_rate <= 0:
        raise ValueError("hash_rate must be positive")
    p = success_probability(target)
    if p <= 0:
        raise ValueError("target gives zero success probability")
    return rng.expovariate(hash_rate * p)


def retarget(actual_elapsed: float, params: PowParams, old_target: int) -> int:
    """New target after a retarget window: old * (actual / expected), clamped.

    The ratio is clamped into [1/clamp_factor, clamp_factor] before scaling,
    and the result is clamped into the valid target range. Arithmetic is
    exact rational so that e.g. a doubled window exactly doubles the target.
    """
    if actual_elapsed <= 0:
        raise ValueError("actual_elapsed must be positive")
    check_target(old_target)
    ratio = Fraction(actual_elapsed) / Fraction(params.expected_window_seconds)
    clamp = Fraction(params.clamp_factor)
    ratio = min(max(ratio, 1 / clamp), clamp)
    new_target = int(old_target * ratio)
    return min(max(new_target, 1), MAX_TARGET)
