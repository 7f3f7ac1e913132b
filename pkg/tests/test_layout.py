"""Geometry invariants of the patch: commutation, independence, scheduling."""

from __future__ import annotations

import pytest

from roundopt.layout import SCHEDULES, build_patch

DISTANCES = (3, 5, 7, 9)


def gf2_rank(rows: list[int]) -> int:
    rank = 0
    pivots: list[int] = []
    for row in rows:
        for p in pivots:
            row = min(row, row ^ p)
        if row:
            pivots.append(row)
            rank += 1
    return rank


def support_mask(qubits) -> int:
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


@pytest.mark.parametrize("d", DISTANCES)
def test_stabilizer_counts_and_weights(d):
    patch = build_patch(d)
    stabs = patch.stabilizers
    assert len(stabs) == d * d - 1
    xs = patch.x_stabilizers
    zs = patch.z_stabilizers
    assert len(xs) == len(zs) == (d * d - 1) // 2
    for group in (xs, zs):
        w2 = [s for s in group if s.weight == 2]
        w4 = [s for s in group if s.weight == 4]
        assert len(w2) == d - 1
        assert len(w2) + len(w4) == len(group)
    # boundary half-faces: X on top/bottom rows, Z on left/right columns
    for s in xs:
        if s.weight == 2:
            assert s.coord[0] in (-1, 2 * d - 1)
    for s in zs:
        if s.weight == 2:
            assert s.coord[1] in (-1, 2 * d - 1)


@pytest.mark.parametrize("d", DISTANCES)
def test_indices_and_coords(d):
    patch = build_patch(d)
    assert [s.index for s in patch.stabilizers] == list(range(d * d - 1))
    assert [s.ancilla for s in patch.stabilizers] == list(
        range(d * d, 2 * d * d - 1)
    )
    # X block first, each block sorted by coordinate
    paulis = [s.pauli for s in patch.stabilizers]
    split = paulis.index("Z")
    assert set(paulis[:split]) == {"X"} and set(paulis[split:]) == {"Z"}
    for block in (patch.stabilizers[:split], patch.stabilizers[split:]):
        coords = [s.coord for s in block]
        assert coords == sorted(coords)
    for idx in range(d * d):
        r, c = patch.data_coord(idx)
        assert patch.data_index(r // 2, c // 2) == idx
    # every ancilla coordinate is odd-odd and adjacent to its support
    for s in patch.stabilizers:
        ar, ac = s.coord
        assert ar % 2 == 1 and ac % 2 == 1
        for q in s.data:
            qr, qc = patch.data_coord(q)
            assert abs(qr - ar) == 1 and abs(qc - ac) == 1


@pytest.mark.parametrize("d", DISTANCES)
def test_commutation_relations(d):
    patch = build_patch(d)
    masks = {s.index: support_mask(s.data) for s in patch.stabilizers}
    for a in patch.x_stabilizers:
        for b in patch.z_stabilizers:
            overlap = bin(masks[a.index] & masks[b.index]).count("1")
            assert overlap % 2 == 0, (a.index, b.index)
    zl = support_mask(patch.z_logical)
    xl = support_mask(patch.x_logical)
    for s in patch.x_stabilizers:
        assert bin(masks[s.index] & zl).count("1") % 2 == 0
    for s in patch.z_stabilizers:
        assert bin(masks[s.index] & xl).count("1") % 2 == 0
    assert bin(zl & xl).count("1") % 2 == 1


@pytest.mark.parametrize("d", DISTANCES)
def test_group_rank_and_logicals_independent(d):
    patch = build_patch(d)
    # symplectic rows: X part in low bits, Z part shifted by n_data
    n = patch.n_data
    rows = []
    for s in patch.stabilizers:
        m = support_mask(s.data)
        rows.append(m if s.pauli == "X" else m << n)
    assert gf2_rank(rows) == d * d - 1
    zl = support_mask(patch.z_logical) << n
    xl = support_mask(patch.x_logical)
    assert gf2_rank(rows + [zl]) == d * d
    assert gf2_rank(rows + [xl]) == d * d
    assert gf2_rank(rows + [zl, xl]) == d * d + 1


@pytest.mark.parametrize("d", DISTANCES)
@pytest.mark.parametrize("schedule", SCHEDULES)
def test_cnot_layers_are_disjoint_and_complete(d, schedule):
    patch = build_patch(d, schedule)
    layers = patch.cnot_layers()
    assert len(layers) == 4
    seen = 0
    for layer in layers:
        touched = [q for pair in layer for q in pair]
        assert len(touched) == len(set(touched))
        seen += len(layer)
    assert seen == sum(s.weight for s in patch.stabilizers)
    # orientation: X ancilla controls, Z ancilla targets
    anc_pauli = {s.ancilla: s.pauli for s in patch.stabilizers}
    for layer in layers:
        for ctrl, tgt in layer:
            assert anc_pauli.get(ctrl, "data") == "X" or anc_pauli.get(tgt) == "Z"
    # weight-4 stabilizers use all four layers in order
    for s in patch.stabilizers:
        assert list(s.steps) == sorted(s.steps)
        if s.weight == 4:
            assert list(s.steps) == [1, 2, 3, 4]


def test_swapped_schedule_differs():
    a = build_patch(3, "standard")
    b = build_patch(3, "swapped")
    diffs = [
        (sa, sb)
        for sa, sb in zip(a.stabilizers, b.stabilizers)
        if sa.weight == 4 and sa.data != sb.data
    ]
    assert diffs, "swapping the CNOT orders must reorder weight-4 supports"


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_patch(2)
    with pytest.raises(ValueError):
        build_patch(1)
    with pytest.raises(ValueError):
        build_patch(3, "zigzag")
    with pytest.raises(ValueError):
        build_patch(3).data_index(3, 0)


def test_describe_mentions_key_facts():
    text = build_patch(5).describe()
    assert "distance 5" in text
    assert "data qubits: 25" in text
    assert "ancillas:    24" in text
