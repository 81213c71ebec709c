import json

import pytest

from arcula.exceptions import (
    CycleDetected,
    DanglingEdge,
    DuplicateEdge,
    DuplicateNode,
    EmptyHierarchy,
    HierarchyError,
    InvalidLabel,
    MultipleComponents,
    UnknownNode,
)
from arcula.hierarchy import (
    Label,
    ancestors,
    augment_root,
    canonical_parents,
    children,
    derivation_path,
    descendants,
    dump_hierarchy,
    hierarchy_document,
    label_of,
    load_hierarchy,
    topological_order,
    validate,
)
from tests.dag_corpus import bfs_reachable, corpus


def test_label_encoding_switches_with_version():
    assert Label(node_index=5).encode() == b"\x00\x00\x00\x05"
    assert Label(node_index=5, version=2).encode() == b"\x00\x00\x00\x05\x00\x00\x00\x02"
    assert Label(node_index=5).encode(compact=False) == b"\x00\x00\x00\x05" + bytes(4)


def test_label_rejects_compact_form_with_version():
    with pytest.raises(InvalidLabel):
        Label(node_index=1, version=1).encode(compact=True)


def test_label_decode():
    assert Label.decode(b"\x00\x00\x01\x00") == Label(node_index=256)
    assert Label.decode(bytes(4) + b"\x00\x00\x00\x03") == Label(node_index=0, version=3)
    with pytest.raises(InvalidLabel):
        Label.decode(bytes(5))


def test_label_decode_rejects_versioned_form_at_version_zero():
    with pytest.raises(InvalidLabel):
        Label.decode(b"\x00\x00\x00\x05" + bytes(4))


def test_label_encoding_round_trips():
    for data in (b"\x00\x00\x00\x05", b"\x00\x00\x00\x05\x00\x00\x00\x01"):
        assert Label.decode(data).encode() == data


def test_diamond_structure(diamond):
    assert diamond.root == 0
    assert diamond.parents == {1: 0, 2: 0, 3: 1, 4: 3}
    assert diamond.non_parent_edges == ((2, 3),)
    assert descendants(diamond, 0) == frozenset({1, 2, 3, 4})
    assert descendants(diamond, 2) == frozenset({3, 4})
    assert descendants(diamond, 4) == frozenset()
    assert ancestors(diamond, 3) == frozenset({0, 1, 2})
    assert children(diamond, 0) == (1, 2)
    assert topological_order(diamond) == (0, 1, 2, 3, 4)


def test_topological_order_releases_smallest_ready_first():
    h = validate([0, 1, 2, 3], [(0, 3), (3, 1), (0, 2)])
    assert topological_order(h) == (0, 2, 3, 1)


def test_parents_follow_ascending_depth_first_search():
    # 0 -> 1 -> 3 is found before 0 -> 2 -> 3
    h = validate([0, 1, 2, 3], [(0, 2), (2, 3), (0, 1), (1, 3)])
    assert h.parents[3] == 1
    assert canonical_parents(h.nodes, h.edges, 0) == h.parents


def test_forest_gets_an_explicit_root(forest):
    assert forest.root == 4
    assert set(forest.nodes) == {0, 1, 2, 3, 4}
    assert (4, 0) in forest.edges and (4, 1) in forest.edges
    assert descendants(forest, 4) == frozenset({0, 1, 2, 3})


def test_augment_root_is_idempotent():
    nodes, edges = augment_root([0, 1, 2], [(0, 2)])
    assert nodes == [0, 1, 2, 3]
    assert edges == [(0, 2), (3, 0), (3, 1)]
    assert augment_root(nodes, edges) == (nodes, edges)


def test_single_node_is_its_own_root():
    h = validate([0], [])
    assert h.root == 0
    assert h.parents == {}
    assert h.subtree(0) == [0]


def test_validate_rejects_empty():
    with pytest.raises(EmptyHierarchy):
        validate([], [])


def test_validate_rejects_cycles():
    with pytest.raises(CycleDetected) as excinfo:
        validate([0, 1, 2], [(0, 1), (1, 2), (2, 1)])
    assert set(excinfo.value.cycle) >= {1, 2}


def test_validate_rejects_self_loops():
    with pytest.raises(CycleDetected):
        validate([0, 1], [(0, 1), (1, 1)])


def test_validate_rejects_dangling_and_duplicates():
    with pytest.raises(DanglingEdge) as excinfo:
        validate([0, 1], [(0, 7)])
    assert excinfo.value.edge == (0, 7)
    with pytest.raises(DuplicateNode):
        validate([0, 0], [])
    with pytest.raises(DuplicateEdge):
        validate([0, 1], [(0, 1), (0, 1)])


def test_validate_without_augmentation_rejects_several_minimal_nodes():
    with pytest.raises(MultipleComponents) as excinfo:
        validate([0, 1], [], augment=False)
    assert excinfo.value.minimal == [0, 1]


def test_validate_checks_explicit_parents():
    with pytest.raises(HierarchyError):
        validate([0, 1, 2], [(0, 1), (1, 2)], parents={1: 0, 2: 0})
    with pytest.raises(HierarchyError):
        validate([0, 1], [(0, 1)], parents={})


def test_validate_rejects_versions_of_unknown_nodes():
    with pytest.raises(UnknownNode):
        validate([0, 1], [(0, 1)], versions={5: 1})


def test_unknown_node_lookups(diamond):
    with pytest.raises(UnknownNode):
        label_of(diamond, 99)
    with pytest.raises(LookupError):
        descendants(diamond, 99)


def test_labels_carry_versions():
    h = validate([0, 1], [(0, 1)], versions={1: 2})
    assert label_of(h, 1) == Label(node_index=1, version=2)
    assert h.label_bytes(1) == b"\x00\x00\x00\x01\x00\x00\x00\x02"
    assert h.label_bytes(0) == b"\x00\x00\x00\x00"


def test_subtree_follows_parent_tree(diamond):
    assert diamond.subtree(1) == [1, 3, 4]
    assert diamond.subtree(2) == [2]


def test_derivation_path_prefers_parent_edges(diamond):
    assert derivation_path(diamond, 0, 4) == [0, 1, 3, 4]
    assert derivation_path(diamond, 2, 4) == [2, 3, 4]
    assert derivation_path(diamond, 3, 3) == [3]
    assert derivation_path(diamond, 4, 0) is None
    assert derivation_path(diamond, 1, 2) is None


def test_descendants_match_bfs_on_random_dags():
    for h in corpus(30, max_nodes=20, max_edges=40):
        for node in h.nodes:
            assert descendants(h, node) == frozenset(bfs_reachable(h, node) - {node})
            for desc in descendants(h, node):
                assert node in ancestors(h, desc)


def test_topological_order_respects_every_edge():
    for h in corpus(30, max_nodes=20, max_edges=40):
        position = {n: k for k, n in enumerate(topological_order(h))}
        assert all(position[i] < position[j] for i, j in h.edges)
        assert topological_order(h)[0] == h.root


def test_load_hierarchy_from_file(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"nodes": [0, 1, 2], "edges": [[0, 1], [0, 2]]}))
    h = load_hierarchy(path)
    assert h.root == 0
    assert h.edges == ((0, 1), (0, 2))


def test_load_hierarchy_requires_dense_ids():
    with pytest.raises(HierarchyError):
        load_hierarchy({"nodes": [0, 2], "edges": [[0, 2]]})


def test_load_hierarchy_checks_declared_root():
    with pytest.raises(HierarchyError):
        load_hierarchy({"nodes": [0, 1], "edges": [[0, 1]], "root": 1, "parents": {"1": 0}})


def test_document_round_trip_keeps_mutated_state(tmp_path):
    h = validate(
        [0, 1, 2, 5],
        [(0, 1), (0, 2), (1, 5), (2, 5)],
        versions={5: 3},
        parents={1: 0, 2: 0, 5: 2},
    )
    doc = hierarchy_document(h)
    assert doc["parents"] == {"1": 0, "2": 0, "5": 2}
    assert doc["versions"] == {"5": 3}
    assert load_hierarchy(doc) == h

    path = tmp_path / "mutated.json"
    dump_hierarchy(h, path)
    assert load_hierarchy(path) == h
