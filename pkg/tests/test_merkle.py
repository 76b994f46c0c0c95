import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive
from zkaudit.merkle import (
    CapacityError,
    CommitmentForest,
    MerklePath,
    MerkleTree,
    SerialNumberSet,
    SerialStatus,
    SnapshotError,
    TreeKind,
    default_nodes,
    root_from_path,
    verify_membership,
)
from zkaudit.primitives import field

felts = st.integers(min_value=0, max_value=field.MODULUS - 1)


def test_empty_root_is_default_hash_chain():
    assert MerkleTree(3).root == naive.brute_root([], 3)
    assert default_nodes(3)[3] == naive.brute_root([], 3)


def test_every_prefix_matches_brute_force():
    rng = random.Random(1)
    tree = MerkleTree(4)
    leaves = []
    for _ in range(16):
        leaf = field.random_element(rng)
        leaves.append(leaf)
        tree.append(leaf)
        assert tree.root == naive.brute_root(leaves, 4)
        for i in range(len(leaves)):
            path = tree.prove_membership(i)
            assert list(path.siblings) == naive.brute_path(leaves, 4, i)
            assert verify_membership(leaves[i], path, tree.root, 4)
    with pytest.raises(CapacityError):
        tree.append(1)


@settings(max_examples=20, deadline=None)
@given(st.lists(felts, min_size=1, max_size=8), st.data())
def test_membership_paths(leaves, data):
    tree = MerkleTree(3)
    tree.extend(leaves)
    i = data.draw(st.integers(min_value=0, max_value=len(leaves) - 1))
    path = tree.prove_membership(i)
    assert root_from_path(leaves[i], path) == tree.root
    other = data.draw(felts)
    if other != leaves[i]:
        assert not verify_membership(other, path, tree.root)
    assert not verify_membership(leaves[i], path, tree.root, depth=4)


@settings(max_examples=20, deadline=None)
@given(st.lists(felts, max_size=8))
def test_root_registry_grows_by_one_per_append(leaves):
    tree = MerkleTree(3)
    seen = [tree.root]
    for leaf in leaves:
        _, root = tree.append(leaf)
        seen.append(root)
    assert tree.roots == tuple(seen)
    assert all(tree.is_known_root(r) for r in seen)
    assert tree.root == naive.brute_root(leaves, 3)


def test_bad_inputs():
    with pytest.raises(ValueError):
        MerkleTree(0)
    with pytest.raises(ValueError):
        MerkleTree(65)
    tree = MerkleTree(2)
    with pytest.raises(ValueError):
        tree.append(field.MODULUS)
    with pytest.raises(IndexError):
        tree.prove_membership(0)
    with pytest.raises(KeyError):
        tree.index_of(5)
    assert not verify_membership(0, MerklePath(9, (0, 0)), tree.root)


def test_depth_64_tree_is_sparse():
    tree = MerkleTree(64)
    tree.extend([1, 2, 3])
    path = tree.prove_membership(2)
    assert path.depth == 64
    assert verify_membership(3, path, tree.root, 64)


def test_serial_set():
    s = SerialNumberSet()
    assert s.record(5) is SerialStatus.FRESH
    assert s.record(5) is SerialStatus.DUPLICATE
    assert 5 in s and len(s) == 1 and list(s) == [5]


def _forest(rng):
    forest = CommitmentForest(4)
    for kind in TreeKind:
        forest[kind].extend(field.random_element(rng) for _ in range(rng.randrange(1, 5)))
    for _ in range(3):
        forest.serials.record(field.random_element(rng))
    return forest


def test_forest_snapshot_roundtrip(rng):
    forest = _forest(rng)
    back = CommitmentForest.from_bytes(forest.to_bytes())
    assert back.roots() == forest.roots()
    assert list(back.serials) == list(forest.serials)
    assert all(back[k].roots == forest[k].roots for k in TreeKind)
    assert back.to_bytes() == forest.to_bytes()


def test_forest_snapshot_rejects_corruption(rng):
    data = _forest(rng).to_bytes()
    with pytest.raises(SnapshotError):
        CommitmentForest.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(SnapshotError):
        CommitmentForest.from_bytes(data[:-1])
    with pytest.raises(SnapshotError):
        CommitmentForest.from_bytes(data + b"\0")
    # edit one leaf: the stored root registry no longer matches
    edited = bytearray(data)
    edited[7 + 8] ^= 1
    with pytest.raises(SnapshotError):
        CommitmentForest.from_bytes(bytes(edited))
