"""Append-only commitment trees, the spent-serial set and their snapshot format."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Iterable

from .primitives import field, poseidon

NODE_DOMAIN = 1
DEFAULT_DEPTH = 64
SNAPSHOT_MAGIC = b"ZKAF"
SNAPSHOT_VERSION = 1


class CapacityError(Exception):
    """The tree already holds 2**depth leaves."""


class SnapshotError(ValueError):
    """A snapshot could not be parsed."""


def hash_node(left: int, right: int) -> int:
    return poseidon.hash_fields(NODE_DOMAIN, [left, right])


@lru_cache(maxsize=None)
def default_nodes(depth: int) -> tuple[int, ...]:
    """Empty-subtree values for levels 0..depth, level 0 being the empty leaf."""
    out = [0]
    for _ in range(depth):
        out.append(hash_node(out[-1], out[-1]))
    return tuple(out)


@dataclass(frozen=True)
class MerklePath:
    leaf_index: int
    siblings: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.siblings)

    def directions(self) -> list[int]:
        """Bit k is 1 when the running node is the right child at level k."""
        return [(self.leaf_index >> k) & 1 for k in range(self.depth)]


def root_from_path(leaf: int, path: MerklePath) -> int:
    node = leaf
    for bit, sib in zip(path.directions(), path.siblings):
        node = hash_node(sib, node) if bit else hash_node(node, sib)
    return node


def verify_membership(leaf: int, path: MerklePath, root: int, depth: int | None = None) -> bool:
    if depth is not None and path.depth != depth:
        return False
    if not 0 <= path.leaf_index < (1 << path.depth):
        return False
    return root_from_path(leaf, path) == root


class MerkleTree:
    """Fixed-depth append-only tree keeping every non-empty node and every root."""

    def __init__(self, depth: int = DEFAULT_DEPTH):
        if not 1 <= depth <= 64:
            raise ValueError("depth must be between 1 and 64")
        self.depth = depth
        self._defaults = default_nodes(depth)
        self._levels: list[list[int]] = [[] for _ in range(depth + 1)]
        self._roots: list[int] = [self._defaults[depth]]
        self._root_index: dict[int, int] = {self._roots[0]: 0}

    @property
    def capacity(self) -> int:
        return 1 << self.depth

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(self._levels[0])

    def __len__(self) -> int:
        return len(self._levels[0])

    @property
    def root(self) -> int:
        return self._roots[-1]

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(self._roots)

    def is_known_root(self, root: int) -> bool:
        return root in self._root_index

    def _node(self, level: int, index: int) -> int:
        row = self._levels[level]
        return row[index] if index < len(row) else self._defaults[level]

    def append(self, leaf: int) -> tuple[int, int]:
        if not 0 <= leaf < field.MODULUS:
            raise ValueError("leaf must be a field element")
        index = len(self)
        if index >= self.capacity:
            raise CapacityError(f"tree of depth {self.depth} is full")
        self._levels[0].append(leaf)
        node, pos = leaf, index
        for level in range(self.depth):
            sib = self._node(level, pos ^ 1)
            node = hash_node(sib, node) if pos & 1 else hash_node(node, sib)
            pos >>= 1
            row = self._levels[level + 1]
            if pos < len(row):
                row[pos] = node
            else:
                row.append(node)
        self._roots.append(node)
        self._root_index.setdefault(node, len(self._roots) - 1)
        return index, node

    def extend(self, leaves: Iterable[int]) -> None:
        for leaf in leaves:
            self.append(leaf)

    def prove_membership(self, leaf_index: int) -> MerklePath:
        if not 0 <= leaf_index < len(self):
            raise IndexError(f"leaf index {leaf_index} out of range (size {len(self)})")
        sibs = tuple(self._node(level, (leaf_index >> level) ^ 1) for level in range(self.depth))
        return MerklePath(leaf_index, sibs)

    def index_of(self, leaf: int) -> int:
        try:
            return self._levels[0].index(leaf)
        except ValueError:
            raise KeyError("leaf not in tree") from None


class SerialStatus(enum.Enum):
    FRESH = "fresh"
    DUPLICATE = "duplicate"


@dataclass
class SerialNumberSet:
    _seen: set[int] = dc_field(default_factory=set)
    _order: list[int] = dc_field(default_factory=list)

    def __contains__(self, sn: int) -> bool:
        return sn in self._seen

    def __len__(self) -> int:
        return len(self._order)

    def record(self, sn: int) -> SerialStatus:
        if sn in self._seen:
            return SerialStatus.DUPLICATE
        self._seen.add(sn)
        self._order.append(sn)
        return SerialStatus.FRESH

    def __iter__(self):
        return iter(self._order)


class TreeKind(enum.IntEnum):
    STORE = 0
    OWN = 1
    SHARE = 2
    ACCESS = 3


class CommitmentForest:
    """The four operation trees plus the spent-serial set."""

    def __init__(self, depth: int = DEFAULT_DEPTH):
        self.depth = depth
        self.trees = {kind: MerkleTree(depth) for kind in TreeKind}
        self.serials = SerialNumberSet()

    def __getitem__(self, kind: TreeKind) -> MerkleTree:
        return self.trees[kind]

    def roots(self) -> dict[TreeKind, int]:
        return {kind: tree.root for kind, tree in self.trees.items()}

    def to_bytes(self) -> bytes:
        out = bytearray(SNAPSHOT_MAGIC)
        out += struct.pack(">HB", SNAPSHOT_VERSION, self.depth)
        for kind in TreeKind:
            tree = self.trees[kind]
            out += struct.pack(">Q", len(tree))
            out += b"".join(field.to_bytes(x) for x in tree.leaves)
            out += struct.pack(">Q", len(tree.roots))
            out += b"".join(field.to_bytes(x) for x in tree.roots)
        serials = list(self.serials)
        out += struct.pack(">Q", len(serials))
        out += b"".join(field.to_bytes(x) for x in serials)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CommitmentForest":
        forest, rest = cls.read_from(data)
        if rest:
            raise SnapshotError("trailing bytes after forest snapshot")
        return forest

    @classmethod
    def read_from(cls, data: bytes) -> tuple["CommitmentForest", bytes]:
        """Parse a forest snapshot prefix; returns the forest and the unread tail."""
        view = memoryview(data)
        if bytes(view[:4]) != SNAPSHOT_MAGIC:
            raise SnapshotError("bad snapshot magic")
        try:
            version, depth = struct.unpack_from(">HB", view, 4)
        except struct.error as exc:
            raise SnapshotError("truncated snapshot header") from exc
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version {version}")
        pos = 7

        def read_elements() -> list[int]:
            nonlocal pos
            try:
                (count,) = struct.unpack_from(">Q", view, pos)
            except struct.error as exc:
                raise SnapshotError("truncated snapshot") from exc
            pos += 8
            end = pos + 32 * count
            if end > len(view):
                raise SnapshotError("truncated snapshot")
            try:
                items = [field.from_bytes(bytes(view[i : i + 32])) for i in range(pos, end, 32)]
            except ValueError as exc:
                raise SnapshotError(str(exc)) from exc
            pos = end
            return items

        forest = cls(depth)
        for kind in TreeKind:
            tree = forest.trees[kind]
            tree.extend(read_elements())
            if tuple(read_elements()) != tree.roots:
                raise SnapshotError(f"{kind.name.lower()} root registry does not match its leaves")
        for sn in read_elements():
            if forest.serials.record(sn) is SerialStatus.DUPLICATE:
                raise SnapshotError("duplicate serial in snapshot")
        return forest, bytes(view[pos:])
