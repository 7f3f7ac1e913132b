"""Pauli-frame simulation of the memory circuit and fast shot sampling.

Every noise event is a Pauli insertion or measurement-bit flip, and the
circuit is Clifford, so a shot is fully described by which detectors and
logical readouts each fault mechanism toggles (its signature) and the
GF(2) sum over sampled mechanisms.  Signatures are computed once per
round offset and shifted across rounds: a fault's effect on its own
round's measurements plus the permanent residual data-qubit frame is
identical in every round, because data-qubit frame components pass
through syndrome extraction unchanged while ancilla components die at
the next reset.

Sampling uses the parity trick: the parity of independent Bernoulli(p)
events over a group of equal-probability mechanisms is reproduced
exactly by drawing Poisson(-G*ln(1-2p)/2) mechanism picks uniformly with
replacement and XOR-ing their signatures.  Shots are organized in
fixed-size blocks whose random streams depend only on (seed, block,
group), never on how work is partitioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .circuit import Circuit, ExperimentConfig, build_memory_circuit
from .noise import idling_probs

# Mechanism probability groups; members of one group share one probability.
GROUPS = ("dep1", "dep2", "idle_x", "idle_y", "idle_z", "meas")
GROUP_ID = {name: i for i, name in enumerate(GROUPS)}

# Observable bits: ez = logical-Z readout flipped (X-type residual),
# ex = logical-X readout flipped (Z-type residual).
OBS_EZ = 1
OBS_EX = 2

BLOCK_SHOTS = 1024

_PAULI_XZ = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_TWO_QUBIT_PAULIS = [
    (a, b) for a in "IXYZ" for b in "IXYZ" if not (a == "I" and b == "I")
]


@dataclass(frozen=True)
class Mechanism:
    """One elementary fault: a Pauli insertion or a measurement flip."""

    instr: int
    group: str
    prob: float
    paulis: tuple[tuple[int, int, int], ...]  # (qubit, x-bit, z-bit); empty = flip

    @property
    def is_flip(self) -> bool:
        return not self.paulis


def enumerate_mechanisms(circuit: Circuit) -> list[Mechanism]:
    """All fault mechanisms in stream order.

    DEP1 sites contribute 3 mechanisms (p/3 each), DEP2 sites 15 (p/15),
    IDLE sites 3 (the twirled relaxation/dephasing probabilities at the
    per-round idle time), noisy MEASURE sites one flip mechanism.
    """
    noise = circuit.config.noise
    out: list[Mechanism] = []
    for idx, ins in enumerate(circuit.instructions):
        if ins.op == "DEP1":
            q = ins.qubits[0]
            for pauli in "XYZ":
                xb, zb = _PAULI_XZ[pauli]
                out.append(Mechanism(idx, "dep1", ins.param / 3.0, ((q, xb, zb),)))
        elif ins.op == "DEP2":
            c, t = ins.qubits
            for pa, pb in _TWO_QUBIT_PAULIS:
                paulis = []
                if pa != "I":
                    xb, zb = _PAULI_XZ[pa]
                    paulis.append((c, xb, zb))
                if pb != "I":
                    xb, zb = _PAULI_XZ[pb]
                    paulis.append((t, xb, zb))
                out.append(
                    Mechanism(idx, "dep2", ins.param / 15.0, tuple(paulis))
                )
        elif ins.op == "IDLE":
            q = ins.qubits[0]
            probs = idling_probs(noise.t1, noise.tphi, ins.param)
            for pauli, prob in (("X", probs.px), ("Y", probs.py), ("Z", probs.pz)):
                xb, zb = _PAULI_XZ[pauli]
                out.append(
                    Mechanism(idx, f"idle_{pauli.lower()}", prob, ((q, xb, zb),))
                )
        elif ins.op == "MEASURE" and ins.param > 0.0:
            out.append(Mechanism(idx, "meas", ins.param, ()))
    return out


def _simulate(
    circuit: Circuit, faults: dict[int, tuple[tuple[int, int, int], ...]]
) -> tuple[int, int, list[int]]:
    """Walk the circuit with injected faults; returns (fx, fz, meas bits)."""
    fx = 0  # X components, bit per qubit
    fz = 0
    meas_bits: list[int] = []
    for idx, ins in enumerate(circuit.instructions):
        op = ins.op
        if op == "RESET":
            keep = ~(1 << ins.qubits[0])
            fx &= keep
            fz &= keep
        elif op == "H":
            b = 1 << ins.qubits[0]
            xq = fx & b
            zq = fz & b
            fx ^= xq ^ (b if zq else 0)
            fz ^= zq ^ (b if xq else 0)
        elif op == "CNOT":
            c, t = ins.qubits
            if fx & (1 << c):
                fx ^= 1 << t
            if fz & (1 << t):
                fz ^= 1 << c
        elif op == "MEASURE":
            bit = 1 if fx & (1 << ins.qubits[0]) else 0
            if idx in faults:
                bit ^= 1
            meas_bits.append(bit)
        if idx in faults and op != "MEASURE":
            for q, xb, zb in faults[idx]:
                if xb:
                    fx ^= 1 << q
                if zb:
                    fz ^= 1 << q
    return fx, fz, meas_bits


def propagate_frame(
    circuit: Circuit, faults: dict[int, tuple[tuple[int, int, int], ...]]
) -> tuple[np.ndarray, int, int]:
    """Reference frame propagation with faults injected at given instructions.

    faults maps instruction index to Pauli applications (applied right
    after that instruction executes); an empty tuple at a MEASURE flips
    its recorded bit.  Returns (detector bits, ez, ex).  Slow; this is
    the oracle the compiled signatures are validated against.
    """
    fx, fz, meas_bits = _simulate(circuit, faults)

    det = np.zeros(circuit.n_detectors, dtype=np.uint8)
    for det_id in range(circuit.n_detectors):
        par = 0
        for m in circuit.detector_meas(det_id):
            par ^= meas_bits[m]
        det[det_id] = par

    layout = circuit.layout
    zl_mask = 0
    for q in layout.z_logical:
        zl_mask |= 1 << q
    xl_mask = 0
    for q in layout.x_logical:
        xl_mask |= 1 << q
    # residual X components flip the Z-logical readout and vice versa
    ez = bin(fx & zl_mask).count("1") & 1
    ex = bin(fz & xl_mask).count("1") & 1
    return det, ez, ex


def final_frame(
    circuit: Circuit, faults: dict[int, tuple[tuple[int, int, int], ...]]
) -> tuple[int, int]:
    """Frame bitmasks (fx, fz) left after the whole circuit.

    Data-qubit bits describe the residual error, which is what the
    rate-counting oracles read; ancilla bits may hold stale copies from
    the last round and should be masked off by the caller.
    """
    fx, fz, _ = _simulate(circuit, faults)
    return fx, fz


@dataclass
class CompiledCircuit:
    """Per-mechanism detector/observable signatures in CSR form."""

    circuit: Circuit
    mechanisms: list[Mechanism]
    n_det: int
    indptr: np.ndarray  # int64, len n_mech + 1
    det_ids: np.ndarray  # int32, detector ids toggled per mechanism
    obs: np.ndarray  # uint8, OBS_EZ/OBS_EX bits per mechanism
    group_members: list[np.ndarray]  # mechanism ids per group, index GROUP_ID
    group_probs: np.ndarray  # float64 per group

    @property
    def n_mech(self) -> int:
        return len(self.mechanisms)

    def signature_bits(self, mech_id: int) -> tuple[tuple[int, ...], int]:
        lo, hi = self.indptr[mech_id], self.indptr[mech_id + 1]
        return tuple(int(d) for d in self.det_ids[lo:hi]), int(self.obs[mech_id])


def _probe_templates(circuit: Circuit) -> list[tuple[Mechanism, list[int], list[int], int]]:
    """Signatures of every round-1 mechanism on a two-noisy-round probe.

    Returns (mechanism, own-round stab flips, next-round stab flips, obs)
    per mechanism of the first round.  The probe re-derives each entry by
    brute-force propagation; shifting across rounds is exact because the
    residual data frame and the per-offset measurement effects do not
    depend on the round index.
    """
    cfg = circuit.config
    probe_cfg = ExperimentConfig(
        d=cfg.d,
        rounds=2,
        t_total=2.0 * cfg.idle_per_round,
        noise=cfg.noise,
        schedule=cfg.schedule,
    )
    probe = build_memory_circuit(probe_cfg)
    mechs = enumerate_mechanisms(probe)
    # noisy rounds are identical instruction blocks, so round 1 owns the
    # first half of the mechanisms
    assert len(mechs) % 2 == 0
    per_round = len(mechs) // 2
    n_stabs = probe.n_stabs
    out = []
    for mech in mechs[:per_round]:
        faults = {mech.instr: mech.paulis}
        det, ez, ex = propagate_frame(probe, faults)
        own: list[int] = []
        nxt: list[int] = []
        for det_id in np.nonzero(det)[0]:
            r, f = probe.detector_round_stab(int(det_id))
            if r == 1:
                own.append(f)
            elif r == 2:
                nxt.append(f)
            else:
                raise AssertionError(
                    f"round-1 fault toggled detector in round {r}; "
                    "signature shifting would be invalid"
                )
        out.append((mech, own, nxt, ez * OBS_EZ + ex * OBS_EX))
    return out


# Probe signatures are pure geometry: they depend on the patch, the CNOT
# schedule and which mechanism kinds exist (measurement flips only when
# q > 0), never on the noise magnitudes, so they are cached per shape.
_TEMPLATE_CACHE: dict[tuple, list] = {}


def compile_signatures(circuit: Circuit) -> CompiledCircuit:
    """Expand per-offset templates into per-mechanism CSR signatures."""
    cfg = circuit.config
    cache_key = (cfg.d, cfg.schedule, cfg.noise.q > 0.0)
    templates = _TEMPLATE_CACHE.get(cache_key)
    if templates is None:
        templates = _probe_templates(circuit)
        _TEMPLATE_CACHE[cache_key] = templates
    mechanisms = enumerate_mechanisms(circuit)
    per_round = len(templates)
    rounds = circuit.config.rounds
    if len(mechanisms) != per_round * rounds:
        raise AssertionError("mechanism list does not tile into rounds")

    n_stabs = circuit.n_stabs
    indptr = np.zeros(len(mechanisms) + 1, dtype=np.int64)
    chunks: list[np.ndarray] = []
    obs = np.zeros(len(mechanisms), dtype=np.uint8)
    for r in range(rounds):
        for k, (tmpl_mech, own, nxt, ob) in enumerate(templates):
            mid = r * per_round + k
            mech = mechanisms[mid]
            if (mech.group, mech.paulis) != (tmpl_mech.group, tmpl_mech.paulis):
                raise AssertionError("template order does not match circuit order")
            dets = sorted(
                [r * n_stabs + f for f in own]
                + [(r + 1) * n_stabs + f for f in nxt]
            )
            chunks.append(np.asarray(dets, dtype=np.int32))
            indptr[mid + 1] = indptr[mid] + len(dets)
            obs[mid] = ob
    det_ids = (
        np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int32)
    )

    group_probs = np.zeros(len(GROUPS), dtype=np.float64)
    members: list[list[int]] = [[] for _ in GROUPS]
    for mid, mech in enumerate(mechanisms):
        g = GROUP_ID[mech.group]
        members[g].append(mid)
        if group_probs[g] == 0.0:
            group_probs[g] = mech.prob
        elif mech.prob != group_probs[g]:
            raise AssertionError(
                f"group {mech.group} has mixed probabilities "
                f"{group_probs[g]} vs {mech.prob}"
            )
    group_members = [np.asarray(m, dtype=np.int64) for m in members]
    return CompiledCircuit(
        circuit=circuit,
        mechanisms=mechanisms,
        n_det=circuit.n_detectors,
        indptr=indptr,
        det_ids=det_ids.astype(np.int32),
        obs=obs,
        group_members=group_members,
        group_probs=group_probs,
    )


@njit(cache=True)
def _scatter_events(bits, obs_out, shot_idx, mech_idx, indptr, det_ids, obs_mask):
    for e in range(shot_idx.shape[0]):
        s = shot_idx[e]
        m = mech_idx[e]
        for k in range(indptr[m], indptr[m + 1]):
            bits[s, det_ids[k]] ^= 1
        obs_out[s] ^= obs_mask[m]


def _block_generator(key: np.ndarray, block: int, group: int) -> np.random.Generator:
    # Independent stream per (seed key, shot block, mechanism group); the
    # counter's low words are left for the stream's own advancement.
    return np.random.Generator(
        np.random.Philox(key=key, counter=[0, 0, block, group])
    )


def _sample_block(cc: CompiledCircuit, key: np.ndarray, block: int):
    """Detector bits and observable flips for one full block of shots."""
    bits = np.zeros((BLOCK_SHOTS, cc.n_det), dtype=np.uint8)
    obs = np.zeros(BLOCK_SHOTS, dtype=np.uint8)
    for g, members in enumerate(cc.group_members):
        p = float(cc.group_probs[g])
        if members.size == 0 or p == 0.0:
            continue
        gen = _block_generator(key, block, g)
        if p >= 0.5:
            # parity trick breaks down at p = 1/2 (fair coin); draw the
            # member bits directly, chunked to bound memory
            chunk = max(1, (1 << 22) // members.size)
            for lo in range(0, BLOCK_SHOTS, chunk):
                hi = min(lo + chunk, BLOCK_SHOTS)
                hits = gen.random((hi - lo, members.size)) < p
                shot_i, memb_i = np.nonzero(hits)
                _scatter_events(
                    bits,
                    obs,
                    (shot_i + lo).astype(np.int64),
                    members[memb_i],
                    cc.indptr,
                    cc.det_ids,
                    cc.obs,
                )
            continue
        lam = -0.5 * math.log1p(-2.0 * p) * members.size
        counts = gen.poisson(lam, BLOCK_SHOTS)
        total = int(counts.sum())
        if total == 0:
            continue
        picks = gen.integers(0, members.size, size=total)
        shot_idx = np.repeat(np.arange(BLOCK_SHOTS, dtype=np.int64), counts)
        _scatter_events(
            bits, obs, shot_idx, members[picks], cc.indptr, cc.det_ids, cc.obs
        )
    return bits, obs


def iter_shot_blocks(cc: CompiledCircuit, key: np.ndarray, n_shots: int):
    """Yield (detector bits, observable bits) arrays covering n_shots.

    Blocks are simulated whole and sliced, so shot s always sees the same
    faults for a given key regardless of n_shots or scheduling.
    """
    done = 0
    block = 0
    while done < n_shots:
        bits, obs = _sample_block(cc, key, block)
        take = min(BLOCK_SHOTS, n_shots - done)
        yield bits[:take], obs[:take]
        done += take
        block += 1


def sample_shots(cc: CompiledCircuit, key: np.ndarray, n_shots: int):
    """Convenience wrapper collecting all blocks into single arrays."""
    all_bits = []
    all_obs = []
    for bits, obs in iter_shot_blocks(cc, key, n_shots):
        all_bits.append(bits.copy())
        all_obs.append(obs.copy())
    if not all_bits:
        return (
            np.zeros((0, cc.n_det), dtype=np.uint8),
            np.zeros(0, dtype=np.uint8),
        )
    return np.concatenate(all_bits), np.concatenate(all_obs)


def shot_key(global_seed: int, cell_index: int, basis_index: int) -> np.ndarray:
    """Philox key for one (parameter cell, measurement basis) stream."""
    ss = np.random.SeedSequence(
        entropy=(int(global_seed), int(cell_index), int(basis_index))
    )
    return ss.generate_state(2, dtype=np.uint64)


def _obs_fails(obs_bits: int, basis: str) -> int:
    ez = obs_bits & 1
    ex = (obs_bits >> 1) & 1
    if basis == "x":
        return ex
    if basis == "z":
        return ez
    if basis == "y":
        return ez ^ ex
    raise ValueError(f"basis must be x, y or z, got {basis!r}")


def fault_distance(
    cc: CompiledCircuit,
    basis: str,
    max_weight: int = 4,
    max_pairs: int = 5_000_000,
) -> int | None:
    """Minimum number of mechanisms forming an undetected logical flip.

    Meet-in-the-middle over deduplicated mechanism signatures encoded as
    integers (detector bits, then the two observable bits).  Returns the
    distance if it is <= max_weight, else None.  Zero-probability
    mechanisms cannot fire and are excluded.  Intended for small patches
    and round counts; the pair enumeration is refused beyond max_pairs.
    """
    n_det = cc.n_det
    sigs = set()
    for mid, mech in enumerate(cc.mechanisms):
        if mech.prob <= 0.0:
            continue
        dets, ob = cc.signature_bits(mid)
        sig = ob << n_det
        for det_id in dets:
            sig |= 1 << det_id
        if sig:
            sigs.add(sig)
    sig_list = sorted(sigs)
    det_mask = (1 << n_det) - 1

    def hits(sig: int) -> bool:
        return (sig & det_mask) == 0 and _obs_fails(sig >> n_det, basis) == 1

    for s in sig_list:
        if hits(s):
            return 1
    if max_weight < 2:
        return None
    n_pairs = len(sig_list) * (len(sig_list) - 1) // 2
    if n_pairs > max_pairs:
        raise ValueError(
            f"fault-distance search needs {n_pairs} signature pairs, "
            f"over the budget of {max_pairs}; use a smaller circuit"
        )

    # all unordered pairs, grouped by detector part
    by_det: dict[int, list[int]] = {}
    for s in sig_list:
        by_det.setdefault(s & det_mask, []).append(s >> n_det)
    pair_by_det: dict[int, set[int]] = {}
    for i, s1 in enumerate(sig_list):
        for s2 in sig_list[i + 1 :]:
            x = s1 ^ s2
            pair_by_det.setdefault(x & det_mask, set()).add(x >> n_det)
    for ob in pair_by_det.get(0, ()):
        if _obs_fails(ob, basis):
            return 2
    if max_weight < 3:
        return None

    # singles against pairs; a hit can only reuse a mechanism in ways that
    # reduce to weight <= 1, which was already ruled out
    for s in sig_list:
        d = s & det_mask
        for ob in pair_by_det.get(d, ()):
            if _obs_fails(ob ^ (s >> n_det), basis):
                return 3
    if max_weight < 4:
        return None

    # pairs against pairs; reuse reduces to weight <= 2, already ruled out
    for d, obs_set in pair_by_det.items():
        obs_list = sorted(obs_set)
        for i, o1 in enumerate(obs_list):
            for o2 in obs_list[i:]:
                if _obs_fails(o1 ^ o2, basis):
                    return 4
    return None
