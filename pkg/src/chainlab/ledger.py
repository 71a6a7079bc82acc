"""Transactions, blocks, the 80-byte header codec, validation, and the block tree.

The ledger is account-balance based: a block is valid when every transaction's
sender can afford it, applied in order on top of the parent state, and no
transaction id repeats anywhere in the ancestor chain.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

from .hashing import DIGEST_SIZE, MAX_TARGET, digest_to_int, double_sha256, merkle_root

HEADER_SIZE = 80
ZERO_DIGEST = b"\x00" * DIGEST_SIZE

# Reject reasons returned by validate_block.
REJECT_BAD_MERKLE = "bad-merkle"
REJECT_OVERSIZE = "oversize"
REJECT_OVERSPEND = "overspend"
REJECT_DUPLICATE_TX = "duplicate-tx"
REJECT_UNKNOWN_PARENT = "unknown-parent"


@dataclass(frozen=True)
class Transaction:
    id: bytes
    sender: str
    recipient: str
    amount: int
    size_bytes: int
    created_at: float

    def __post_init__(self) -> None:
        if len(self.id) != DIGEST_SIZE:
            raise ValueError("transaction id must be 32 bytes")
        if self.amount < 0:
            raise ValueError("amount must be non-negative")
        if self.size_bytes < 1:
            raise ValueError("size_bytes must be positive")


@dataclass(frozen=True)
class BlockHeader:
    """Fixed 80-byte header: version, prev hash, merkle root, timestamp, bits, nonce."""

    version: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    bits: int
    nonce: int


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()
    # Stake-mode metadata; trusted simulation identity, not a signature.
    signer: str | None = None
    coin_days_claimed: float | None = None

    @property
    def tx_bytes(self) -> int:
        return sum(tx.size_bytes for tx in self.transactions)


def serialize_header(header: BlockHeader) -> bytes:
    """Pack a header into its canonical 80-byte layout (little-endian integers)."""
    data = struct.pack(
        "<I32s32sIII",
        header.version & 0xFFFFFFFF,
        header.prev_hash,
        header.merkle_root,
        header.timestamp & 0xFFFFFFFF,
        header.bits & 0xFFFFFFFF,
        header.nonce & 0xFFFFFFFF,
    )
    assert len(data) == HEADER_SIZE
    return data


def deserialize_header(data: bytes) -> BlockHeader:
    if len(data) != HEADER_SIZE:
        raise ValueError(f"header must be {HEADER_SIZE} bytes, got {len(data)}")
    version, prev_hash, root, timestamp, bits, nonce = struct.unpack(
        "<I32s32sIII", data
    )
    return BlockHeader(version, prev_hash, root, timestamp, bits, nonce)


def block_hash(header: BlockHeader) -> bytes:
    return double_sha256(serialize_header(header))


def target_to_bits(target: int) -> int:
    """Compact 4-byte encoding: 1-byte exponent, 3-byte mantissa.

    Encoding truncates the target to 24 significant bits (23 when the mantissa
    would carry a high bit); decode(encode(t)) <= t always holds.
    """
    if not 0 < target <= MAX_TARGET:
        raise ValueError("target out of range for compact encoding")
    size = (target.bit_length() + 7) // 8
    if size <= 3:
        mantissa = target << (8 * (3 - size))
    else:
        mantissa = target >> (8 * (size - 3))
    if mantissa & 0x800000:
        mantissa >>= 8
        size += 1
    return (size << 24) | mantissa


def bits_to_target(bits: int) -> int:
    size = bits >> 24
    mantissa = bits & 0x007FFFFF
    if mantissa == 0:
        raise ValueError(f"compact bits {bits:#010x} decode to zero target")
    if size <= 3:
        target = mantissa >> (8 * (3 - size))
    else:
        target = mantissa << (8 * (size - 3))
    if target == 0 or target > MAX_TARGET:
        raise ValueError(f"compact bits {bits:#010x} decode out of range")
    return target


def normalize_target(target: int) -> int:
    """Round a target down to the nearest compact-representable value."""
    return bits_to_target(target_to_bits(target))


def block_merkle_root(transactions: tuple[Transaction, ...] | list[Transaction]) -> bytes:
    """Merkle root over transaction ids; the empty block commits to zeros."""
    if not transactions:
        return ZERO_DIGEST
    return merkle_root([tx.id for tx in transactions])


@dataclass(frozen=True)
class ChainState:
    """Cumulative ledger state at a block: balances and every included tx id."""

    balances: dict[str, int]
    tx_ids: frozenset[bytes]


def validate_block(
    block: Block,
    parent_state: ChainState,
    *,
    max_block_bytes: int,
) -> str | None:
    """Check a block against its parent's ledger state.

    Returns None on acceptance or one of the REJECT_* reasons. The caller is
    responsible for REJECT_UNKNOWN_PARENT when it cannot produce parent_state.
    """
    if block.header.merkle_root != block_merkle_root(block.transactions):
        return REJECT_BAD_MERKLE
    if block.tx_bytes > max_block_bytes:
        return REJECT_OVERSIZE
    balances = dict(parent_state.balances)
    seen: set[bytes] = set()
    for tx in block.transactions:
        if tx.id in parent_state.tx_ids or tx.id in seen:
            return REJECT_DUPLICATE_TX
        seen.add(tx.id)
        if balances.get(tx.sender, 0) < tx.amount:
            return REJECT_OVERSPEND
        balances[tx.sender] = balances.get(tx.sender, 0) - tx.amount
        balances[tx.recipient] = balances.get(tx.recipient, 0) + tx.amount
    return None


def apply_block(
    block: Block,
    parent_state: ChainState,
    *,
    block_reward: int,
    producer: str | None,
) -> ChainState:
    """State after a validated block: reward credited to the producer, then txs."""
    balances = dict(parent_state.balances)
    if producer is not None and block_reward:
        balances[producer] = balances.get(producer, 0) + block_reward
    for tx in block.transactions:
        balances[tx.sender] -= tx.amount
        balances[tx.recipient] = balances.get(tx.recipient, 0) + tx.amount
    tx_ids = parent_state.tx_ids.union(tx.id for tx in block.transactions)
    return ChainState(balances=balances, tx_ids=tx_ids)


class BlockTree:
    """All received blocks keyed by hash, with heights, children, and tips.

    Single-owner mutable structure; exactly one genesis at height 0. Insertion
    requires the parent to be present (orphans are buffered by the caller) and
    is idempotent for duplicate hashes.
    """

    def __init__(self, genesis: Block):
        h = block_hash(genesis.header)
        self.genesis_hash = h
        self.blocks: dict[bytes, Block] = {h: genesis}
        self.heights: dict[bytes, int] = {h: 0}
        self.children: dict[bytes, list[bytes]] = {h: []}
        self.tips: set[bytes] = {h}
        self.arrival_order: dict[bytes, int] = {h: 0}

    def __contains__(self, block_id: bytes) -> bool:
        return block_id in self.blocks

    def height_of(self, block_id: bytes) -> int:
        return self.heights[block_id]

    def insert_block(self, block: Block, arrival_seq: int) -> bytes:
        """Insert a block whose parent is already present; returns its hash."""
        h = block_hash(block.header)
        if h in self.blocks:
            return h
        parent = block.header.prev_hash
        if parent not in self.blocks:
            raise KeyError(f"parent {parent.hex()} not in tree")
        self.blocks[h] = block
        self.heights[h] = self.heights[parent] + 1
        self.children[h] = []
        self.children[parent].append(h)
        self.tips.discard(parent)
        self.tips.add(h)
        self.arrival_order[h] = arrival_seq
        return h

    def fork_choice(self) -> bytes:
        """Canonical tip: maximal height, ties broken by first arrival."""
        return min(
            self.tips,
            key=lambda t: (-self.heights[t], self.arrival_order[t]),
        )

    def chain_to(self, tip: bytes) -> list[bytes]:
        """Block hashes from genesis to tip, inclusive."""
        chain = []
        cur = tip
        while True:
            chain.append(cur)
            if cur == self.genesis_hash:
                break
            cur = self.blocks[cur].header.prev_hash
        chain.reverse()
        return chain

    def ancestor_at(self, block_id: bytes, height: int) -> bytes:
        cur = block_id
        while self.heights[cur] > height:
            cur = self.blocks[cur].header.prev_hash
        if self.heights[cur] != height:
            raise ValueError("no ancestor at requested height")
        return cur

    def lowest_common_ancestor(self, a: bytes, b: bytes) -> bytes:
        ha, hb = self.heights[a], self.heights[b]
        if ha > hb:
            a = self.ancestor_at(a, hb)
        elif hb > ha:
            b = self.ancestor_at(b, ha)
        while a != b:
            a = self.blocks[a].header.prev_hash
            b = self.blocks[b].header.prev_hash
        return a


def make_genesis(bits: int, version: int = 1) -> Block:
    """Genesis block: zero prev hash, empty transaction list, timestamp 0.

    Initial allocations live in the genesis ChainState, not in the block.
    """
    header = BlockHeader(
        version=version,
        prev_hash=ZERO_DIGEST,
        merkle_root=block_merkle_root(()),
        timestamp=0,
        bits=bits,
        nonce=0,
    )
    return Block(header=header, transactions=())


def genesis_state(initial_balances: dict[str, int]) -> ChainState:
    return ChainState(balances=dict(initial_balances), tx_ids=frozenset())


def with_nonce(header: BlockHeader, nonce: int) -> BlockHeader:
    return replace(header, nonce=nonce)
