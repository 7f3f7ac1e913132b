"""Memory-experiment circuit: N noisy syndrome rounds plus one perfect round.

The experiment prepares a code-space state (so every first-round
stabilizer outcome is deterministically +1), runs N noisy rounds of
syndrome extraction with the idling budget T split evenly between
rounds, then one noiseless round, and finally reads the data out
transversally without error.  Detectors compare each stabilizer outcome
with the previous round (or with +1 in round one); the final perfect
round gives the decoder a closing boundary in time.

Noise opcodes are interleaved with the gates they follow: DEP1 after
each Hadamard, DEP2 after each CNOT, a classical flip probability on
each measurement, and one IDLE of duration T/N per data qubit per noisy
round (placed after the measurements, while ancillas are being reused).
The perfect round emits the same gate sequence with no noise opcodes and
flip probability zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .layout import PatchLayout, build_patch
from .noise import NoiseParams

# Opcodes; DEP1/DEP2/IDLE/MEASURE carry a probability or duration param.
OPS = ("RESET", "H", "CNOT", "DEP1", "DEP2", "IDLE", "MEASURE")


@dataclass(frozen=True)
class Instruction:
    op: str
    qubits: tuple[int, ...]
    param: float = 0.0

    def to_text(self) -> str:
        qs = " ".join(str(q) for q in self.qubits)
        if self.op in ("DEP1", "DEP2", "IDLE", "MEASURE"):
            return f"{self.op} {self.param:.12g} {qs}"
        return f"{self.op} {qs}"


@dataclass(frozen=True)
class ExperimentConfig:
    """One memory-experiment setting: patch size, round count, idle budget."""

    d: int
    rounds: int
    t_total: float
    noise: NoiseParams
    schedule: str = "standard"

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"need at least one noisy round, got {self.rounds}")
        if self.t_total < 0.0:
            raise ValueError(f"idle budget must be nonnegative, got {self.t_total}")

    @property
    def idle_per_round(self) -> float:
        return self.t_total / self.rounds


@dataclass
class Circuit:
    layout: PatchLayout
    config: ExperimentConfig
    instructions: tuple[Instruction, ...]
    n_meas: int

    @property
    def n_stabs(self) -> int:
        return self.layout.n_ancilla

    @property
    def n_rounds_total(self) -> int:
        # noisy rounds plus the final perfect one
        return self.config.rounds + 1

    @property
    def n_detectors(self) -> int:
        return self.n_rounds_total * self.n_stabs

    def detector_id(self, round_1based: int, stab: int) -> int:
        if not (1 <= round_1based <= self.n_rounds_total):
            raise ValueError(f"round {round_1based} out of range")
        if not (0 <= stab < self.n_stabs):
            raise ValueError(f"stabilizer {stab} out of range")
        return (round_1based - 1) * self.n_stabs + stab

    def detector_round_stab(self, det: int) -> tuple[int, int]:
        r, f = divmod(det, self.n_stabs)
        return (r + 1, f)

    def detector_meas(self, det: int) -> tuple[int, ...]:
        """Measurement record indices whose parity defines the detector."""
        r, f = self.detector_round_stab(det)
        if r == 1:
            return (f,)
        return ((r - 2) * self.n_stabs + f, (r - 1) * self.n_stabs + f)

    def op_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for ins in self.instructions:
            counts[ins.op] = counts.get(ins.op, 0) + 1
        return counts

    def to_text(self) -> str:
        lines = []
        meas = 0
        for ins in self.instructions:
            if ins.op == "RESET" and ins.qubits[0] == self.layout.n_data:
                r = meas // self.n_stabs + 1
                kind = "noisy" if r <= self.config.rounds else "perfect"
                lines.append(f"# round {r} ({kind})")
            lines.append(ins.to_text())
            if ins.op == "MEASURE":
                meas += 1
        lines.append("# transversal data readout (noiseless)")
        return "\n".join(lines) + "\n"


def _emit_round(
    out: list[Instruction],
    layout: PatchLayout,
    p: float,
    q: float,
    idle_t: float,
    noisy: bool,
) -> None:
    x_ancillas = [s.ancilla for s in layout.x_stabilizers]
    for s in layout.stabilizers:
        out.append(Instruction("RESET", (s.ancilla,)))
    for a in x_ancillas:
        out.append(Instruction("H", (a,)))
        if noisy:
            out.append(Instruction("DEP1", (a,), p))
    for layer in layout.cnot_layers():
        for ctrl, tgt in layer:
            out.append(Instruction("CNOT", (ctrl, tgt)))
            if noisy:
                out.append(Instruction("DEP2", (ctrl, tgt), p))
    for a in x_ancillas:
        out.append(Instruction("H", (a,)))
        if noisy:
            out.append(Instruction("DEP1", (a,), p))
    for s in layout.stabilizers:
        out.append(Instruction("MEASURE", (s.ancilla,), q if noisy else 0.0))
    if noisy:
        for dq in range(layout.n_data):
            out.append(Instruction("IDLE", (dq,), idle_t))


def build_memory_circuit(config: ExperimentConfig) -> Circuit:
    layout = build_patch(config.d, config.schedule)
    out: list[Instruction] = []
    for _ in range(config.rounds):
        _emit_round(
            out,
            layout,
            config.noise.p,
            config.noise.q,
            config.idle_per_round,
            noisy=True,
        )
    _emit_round(out, layout, 0.0, 0.0, 0.0, noisy=False)
    n_meas = sum(1 for ins in out if ins.op == "MEASURE")
    return Circuit(
        layout=layout,
        config=config,
        instructions=tuple(out),
        n_meas=n_meas,
    )
