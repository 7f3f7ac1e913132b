"""Minimum-weight matching decoder over the circuit's fault mechanisms.

The detector error model factors into two independent matching problems.
Every fault mechanism splits into an X-type and a Z-type Pauli component
(a measurement flip is its own single component), and each component
toggles at most two detectors, all belonging to one stabilizer family.
Detectors of Z stabilizers witness X-type residuals, which flip the
logical-Z readout, and vice versa, so each family forms a weighted graph
that is decoded on its own and predicts one observable bit.

Decoding a shot reduces its defects to a complete graph over pairwise
shortest-path distances (with a boundary absorbing odd parity) and runs
the exact blossom matcher on it; observable parities ride along the
canonical shortest paths fixed at table-construction time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .circuit import Circuit
from .frame import (
    OBS_EX,
    OBS_EZ,
    CompiledCircuit,
    compile_signatures,
    fault_distance,
)
from .matching import _mwm_dense

__all__ = [
    "BOUNDARY",
    "MatchingGraph",
    "build_graphs",
    "decode",
    "decode_batch",
    "decode_shot",
    "fault_distance",
]

BOUNDARY = -1


@dataclass(frozen=True)
class MatchingGraph:
    """One stabilizer family's weighted defect graph plus decode tables.

    Nodes are the family's detectors in global-id order; edge endpoints
    are local node indices with BOUNDARY standing for the open boundary.
    dist/bdist hold all-pairs and node-to-boundary shortest-path weights;
    dist_obs/bdist_obs the observable parity of the canonical minimal
    path (even parity preferred on exact ties).
    """

    family: str  # "x" or "z": stabilizer type of the detectors
    obs_bit: int  # OBS_EX or OBS_EZ: the readout flip this graph predicts
    node_det: np.ndarray  # int64 (n,) global detector id per node
    det_node: np.ndarray  # int32 (n_det,) global id -> node index or -1
    edge_u: np.ndarray  # int32 (E,)
    edge_v: np.ndarray  # int32 (E,), BOUNDARY for boundary edges
    edge_prob: np.ndarray  # float64 (E,) merged flip probability
    edge_weight: np.ndarray  # float64 (E,) ln((1-p)/p)
    edge_obs: np.ndarray  # uint8 (E,) 1 if the edge flips obs_bit
    dist: np.ndarray  # float64 (n, n)
    dist_obs: np.ndarray  # uint8 (n, n)
    bdist: np.ndarray  # float64 (n,)
    bdist_obs: np.ndarray  # uint8 (n,)

    @property
    def n_nodes(self) -> int:
        return self.node_det.size

    @property
    def n_edges(self) -> int:
        return self.edge_u.size

    def edge_rows(self):
        """Edges as (u det id, v det id or -1, prob, weight, obs) tuples."""
        for i in range(self.n_edges):
            u = int(self.node_det[self.edge_u[i]])
            v = int(self.edge_v[i])
            if v != BOUNDARY:
                v = int(self.node_det[v])
            yield (
                u,
                v,
                float(self.edge_prob[i]),
                float(self.edge_weight[i]),
                int(self.edge_obs[i]),
            )


def _components(mech):
    """Nontrivial X/Z Pauli parts of a mechanism (flips are their own part)."""
    if mech.is_flip:
        return (mech.paulis,)
    xpart = tuple((q, 1, 0) for q, xb, _ in mech.paulis if xb)
    zpart = tuple((q, 0, 1) for q, _, zb in mech.paulis if zb)
    return tuple(c for c in (xpart, zpart) if c)


def build_graphs(circuit: Circuit | CompiledCircuit):
    """Weighted matching graphs of the X- and Z-stabilizer families.

    Returns (x_graph, z_graph), named by the stabilizer type of their
    detectors: the Z graph's defects witness X-type residuals and predict
    the logical-Z readout flip, the X graph predicts the logical-X flip.
    Components sharing an endpoint pair merge by XOR-combining their
    probabilities; every component probability is a mechanism probability
    (the depolarizing decomposition treats the X and Z parts of a Y-type
    fault as independent, so a mechanism can feed both graphs).
    """
    cc = (
        circuit
        if isinstance(circuit, CompiledCircuit)
        else compile_signatures(circuit)
    )
    circ = cc.circuit
    n_det = cc.n_det
    stab_fam = np.array(
        [0 if s.pauli == "X" else 1 for s in circ.layout.stabilizers],
        dtype=np.uint8,
    )
    det_fam = np.tile(stab_fam, circ.n_rounds_total)

    node_det = []
    det_node = []
    for fam in (0, 1):
        nd = np.flatnonzero(det_fam == fam).astype(np.int64)
        dn = np.full(n_det, -1, dtype=np.int32)
        dn[nd] = np.arange(nd.size, dtype=np.int32)
        node_det.append(nd)
        det_node.append(dn)

    sig_index = {(m.instr, m.paulis): i for i, m in enumerate(cc.mechanisms)}
    fam_obs = (OBS_EX, OBS_EZ)
    merged: list[dict[tuple[int, int], list]] = [{}, {}]

    for mid, mech in enumerate(cc.mechanisms):
        if mech.prob <= 0.0:
            continue
        for comp in _components(mech):
            if comp == mech.paulis:
                cid = mid
            else:
                cid = sig_index.get((mech.instr, comp))
                if cid is None:
                    raise AssertionError(
                        "mechanism component has no enumerated counterpart"
                    )
            dets, ob = cc.signature_bits(cid)
            if not dets:
                if ob:
                    raise ValueError(
                        "fault component flips an observable without "
                        "touching any detector; the circuit cannot be "
                        "decoded by matching"
                    )
                continue
            fam = int(det_fam[dets[0]])
            if any(det_fam[det] != fam for det in dets[1:]):
                raise ValueError(
                    "fault component spans both stabilizer families; the "
                    "graphlike decomposition does not apply"
                )
            if len(dets) > 2:
                raise ValueError(
                    f"fault component triggers {len(dets)} detectors of "
                    "one family; the schedule violates the graphlike "
                    "assumption"
                )
            if ob & ~fam_obs[fam]:
                raise ValueError(
                    "fault component flips the other family's observable; "
                    "edge observable masks would be inconsistent"
                )
            obit = 1 if ob else 0
            dn = det_node[fam]
            if len(dets) == 2:
                key = (int(dn[dets[0]]), int(dn[dets[1]]))
            else:
                key = (int(dn[dets[0]]), BOUNDARY)
            entry = merged[fam].get(key)
            if entry is None:
                merged[fam][key] = [mech.prob, obit]
            elif entry[1] != obit:
                raise ValueError(
                    "edge merges fault components with conflicting "
                    "observable masks"
                )
            else:
                p0 = entry[0]
                entry[0] = p0 * (1.0 - mech.prob) + mech.prob * (1.0 - p0)

    graphs = []
    for fam, family, obs_bit in ((0, "x", OBS_EX), (1, "z", OBS_EZ)):
        items = sorted(merged[fam].items())
        n_edges = len(items)
        eu = np.empty(n_edges, dtype=np.int32)
        ev = np.empty(n_edges, dtype=np.int32)
        ep = np.empty(n_edges, dtype=np.float64)
        ew = np.empty(n_edges, dtype=np.float64)
        eo = np.empty(n_edges, dtype=np.uint8)
        for i, ((u, v), (p, o)) in enumerate(items):
            eu[i] = u
            ev[i] = v
            ep[i] = p
            ew[i] = np.log((1.0 - p) / p)
            eo[i] = o
        dist, dist_obs, bdist, bdist_obs = _decode_tables(
            node_det[fam].size, eu, ev, ew, eo
        )
        graphs.append(
            MatchingGraph(
                family=family,
                obs_bit=obs_bit,
                node_det=node_det[fam],
                det_node=det_node[fam],
                edge_u=eu,
                edge_v=ev,
                edge_prob=ep,
                edge_weight=ew,
                edge_obs=eo,
                dist=dist,
                dist_obs=dist_obs,
                bdist=bdist,
                bdist_obs=bdist_obs,
            )
        )
    return graphs[0], graphs[1]


def _decode_tables(n, eu, ev, ew, eo):
    """All-pairs and boundary shortest paths with observable parities.

    Runs Dijkstra on the parity-doubled graph: node (v, b) carries the
    observable parity b accumulated so far, and an edge with mask o links
    (u, b) to (v, b xor o).  The minimum over target parities is the true
    distance, and comparing the two copies yields the parity of a
    canonical minimal path, breaking exact ties toward even parity.
    """
    if n == 0 or eu.size == 0:
        dist = np.full((n, n), np.inf)
        np.fill_diagonal(dist, 0.0)
        return (
            dist,
            np.zeros((n, n), dtype=np.uint8),
            np.full(n, np.inf),
            np.zeros(n, dtype=np.uint8),
        )
    # boundary occupies base index n; parity-1 copies are offset by n + 1
    v2 = np.where(ev == BOUNDARY, n, ev).astype(np.int64)
    u64 = eu.astype(np.int64)
    off = np.where(eo == 1, n + 1, 0).astype(np.int64)
    rows = np.concatenate([u64, u64 + (n + 1)])
    cols = np.concatenate([v2 + off, v2 + (n + 1) - off])
    vals = np.concatenate([ew, ew])
    size = 2 * (n + 1)
    graph = coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    full = dijkstra(graph, directed=False, indices=np.arange(n))
    d_even = full[:, :n]
    d_odd = full[:, n + 1 : 2 * n + 1]
    dist = np.minimum(d_even, d_odd)
    dist_obs = (d_odd < d_even).astype(np.uint8)
    b_even = full[:, n]
    b_odd = full[:, 2 * n + 1]
    bdist = np.minimum(b_even, b_odd)
    bdist_obs = (b_odd < b_even).astype(np.uint8)

    touched = np.zeros(n, dtype=bool)
    touched[eu] = True
    touched[v2[v2 < n]] = True
    if np.any(touched & ~np.isfinite(bdist)):
        raise ValueError(
            "a detector with fault support has no path to the boundary; "
            "its defects could not always be matched"
        )
    return dist, dist_obs, bdist, bdist_obs


@njit(cache=True)
def _decode_family(bits, fam_dets, dist, dist_obs, bdist, bdist_obs, out):
    """Predicted observable bit per shot for one family graph.

    bits is the (shots, n_det) detector array; fam_dets the family's
    global detector ids in node order.  The defect set is reduced to a
    complete graph with entries min(direct path, through-boundary), plus
    one boundary vertex when the defect count is odd, and matched by the
    dense blossom kernel; ties between the direct and boundary routes
    resolve to the boundary, matching the cost construction.
    """
    n_shots = bits.shape[0]
    nf = fam_dets.shape[0]
    defects = np.empty(nf, dtype=np.int64)
    for s in range(n_shots):
        m = 0
        for k in range(nf):
            if bits[s, fam_dets[k]] != 0:
                defects[m] = k
                m += 1
        if m == 0:
            out[s] = 0
            continue
        n = m + (m & 1)
        cost = np.zeros((n, n), dtype=np.float64)
        cmax = 0.0
        for i in range(m):
            di = defects[i]
            for j in range(i + 1, m):
                dj = defects[j]
                dd = dist[di, dj]
                bb = bdist[di] + bdist[dj]
                c = dd if dd < bb else bb
                if c == np.inf:
                    raise ValueError(
                        "defect disconnected from the boundary and from "
                        "its partners"
                    )
                cost[i, j] = c
                cost[j, i] = c
                if c > cmax:
                    cmax = c
        if n != m:
            for i in range(m):
                c = bdist[defects[i]]
                if c == np.inf:
                    raise ValueError(
                        "defect disconnected from the boundary and from "
                        "its partners"
                    )
                cost[i, n - 1] = c
                cost[n - 1, i] = c
                if c > cmax:
                    cmax = c
        shift = cmax + 1.0
        wmat = np.empty((n, n), dtype=np.float64)
        for i in range(n):
            for j in range(n):
                wmat[i, j] = 0.0 if i == j else shift - cost[i, j]
        mate = _mwm_dense(wmat, True)
        pred = np.uint8(0)
        for i in range(n):
            j = mate[i]
            if j < 0:
                raise RuntimeError("matching left a defect unpaired")
            if j <= i:
                continue
            if n != m and j == n - 1:
                pred ^= bdist_obs[defects[i]]
            else:
                di = defects[i]
                dj = defects[j]
                if dist[di, dj] < bdist[di] + bdist[dj]:
                    pred ^= dist_obs[di, dj]
                else:
                    pred ^= bdist_obs[di] ^ bdist_obs[dj]
        out[s] = pred
    return out


def decode_batch(graph: MatchingGraph, bits: np.ndarray) -> np.ndarray:
    """Predicted observable-flip bit for each row of detector bits."""
    out = np.empty(bits.shape[0], dtype=np.uint8)
    if bits.shape[0]:
        _decode_family(
            bits,
            graph.node_det,
            graph.dist,
            graph.dist_obs,
            graph.bdist,
            graph.bdist_obs,
            out,
        )
    return out


def decode(graph: MatchingGraph, defects) -> int:
    """Observable flip predicted for one defect set of global detector ids."""
    bits = np.zeros((1, graph.det_node.size), dtype=np.uint8)
    for det in set(int(d) for d in defects):
        if not 0 <= det < graph.det_node.size or graph.det_node[det] < 0:
            raise ValueError(
                f"detector {det} is not a node of the {graph.family} graph"
            )
        bits[0, det] = 1
    return int(decode_batch(graph, bits)[0])


def decode_shot(
    x_graph: MatchingGraph,
    z_graph: MatchingGraph,
    detector_bits: np.ndarray,
    basis: str,
) -> int:
    """Predicted readout flip for one shot of a basis memory experiment.

    A Z memory fails on logical-Z flips, predicted by the Z graph; X
    likewise; a Y memory fails when exactly one of the two flips, so it
    takes the XOR of both predictions.
    """
    row = np.ascontiguousarray(detector_bits, dtype=np.uint8).reshape(1, -1)
    if basis == "x":
        return int(decode_batch(x_graph, row)[0])
    if basis == "z":
        return int(decode_batch(z_graph, row)[0])
    if basis == "y":
        return int(decode_batch(x_graph, row)[0] ^ decode_batch(z_graph, row)[0])
    raise ValueError(f"basis must be x, y or z, got {basis!r}")
