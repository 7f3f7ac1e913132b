"""Rotated surface-code patch geometry and CNOT scheduling.

Data qubits sit on a d x d grid at even-even half-step coordinates
(2r, 2c); stabilizer ancillas sit at odd-odd face centers.  Interior
faces alternate X/Z in a checkerboard; the boundary carries weight-2
half-faces, X-type along the top and bottom edges and Z-type along the
left and right.  The logical Z is a Z string along the top data row and
the logical X an X string down the left column.

Syndrome extraction uses four CNOT layers.  X ancillas fire their four
CNOTs in NW, NE, SW, SE order (tracing a "Z") and Z ancillas in NW, SW,
NE, SE order (tracing an "N").  With the checkerboard this touches every
data qubit at most once per layer, and ancilla errors that leak onto two
data qubits mid-round ("hooks") land perpendicular to the logical they
could damage.  A "swapped" schedule with the two orders exchanged is
provided as a known-bad control: its hooks align with the logicals and
cut the effective distance roughly in half.
"""

from __future__ import annotations

from dataclasses import dataclass

# Face-relative data offsets in face-grid units; face (fr, fc) touches
# data (fr + dr, fc + dc).
_SLOTS = {"nw": (0, 0), "ne": (0, 1), "sw": (1, 0), "se": (1, 1)}
X_ORDER = ("nw", "ne", "sw", "se")
Z_ORDER = ("nw", "sw", "ne", "se")

SCHEDULES = ("standard", "swapped")


@dataclass(frozen=True)
class Stabilizer:
    """One stabilizer generator and its measurement schedule.

    data lists the supporting data qubit ids in CNOT firing order;
    steps[i] is the layer (1..4) in which data[i] is coupled.
    """

    index: int
    ancilla: int
    pauli: str
    coord: tuple[int, int]
    data: tuple[int, ...]
    steps: tuple[int, ...]

    @property
    def weight(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class PatchLayout:
    d: int
    schedule: str
    stabilizers: tuple[Stabilizer, ...]
    z_logical: tuple[int, ...]
    x_logical: tuple[int, ...]

    @property
    def n_data(self) -> int:
        return self.d * self.d

    @property
    def n_ancilla(self) -> int:
        return self.d * self.d - 1

    @property
    def n_qubits(self) -> int:
        return self.n_data + self.n_ancilla

    @property
    def x_stabilizers(self) -> tuple[Stabilizer, ...]:
        return tuple(s for s in self.stabilizers if s.pauli == "X")

    @property
    def z_stabilizers(self) -> tuple[Stabilizer, ...]:
        return tuple(s for s in self.stabilizers if s.pauli == "Z")

    def data_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.d and 0 <= col < self.d):
            raise ValueError(f"data position ({row}, {col}) outside patch")
        return row * self.d + col

    def data_coord(self, index: int) -> tuple[int, int]:
        """Half-step coordinate of a data qubit id."""
        row, col = divmod(index, self.d)
        return (2 * row, 2 * col)

    def cnot_layers(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Four CNOT layers as (control, target) qubit-id pairs.

        X ancillas are controls; Z ancillas are targets.
        """
        layers: list[list[tuple[int, int]]] = [[], [], [], []]
        for s in self.stabilizers:
            for q, step in zip(s.data, s.steps):
                pair = (s.ancilla, q) if s.pauli == "X" else (q, s.ancilla)
                layers[step - 1].append(pair)
        return tuple(tuple(layer) for layer in layers)

    def describe(self) -> str:
        lines = [
            f"rotated surface code, distance {self.d} ({self.schedule} schedule)",
            f"data qubits: {self.n_data} (ids 0..{self.n_data - 1}, "
            f"grid coords (2r, 2c))",
            f"ancillas:    {self.n_ancilla} (ids {self.n_data}.."
            f"{self.n_qubits - 1})",
            f"logical Z:   data {list(self.z_logical)} (top row)",
            f"logical X:   data {list(self.x_logical)} (left column)",
            "stabilizers:",
        ]
        for s in self.stabilizers:
            sched = ", ".join(f"{q}@{t}" for q, t in zip(s.data, s.steps))
            lines.append(
                f"  [{s.index:3d}] {s.pauli} ancilla {s.ancilla} at "
                f"{s.coord}: {sched}"
            )
        return "\n".join(lines)


def _face_type(fr: int, fc: int) -> str:
    # Checkerboard over the (virtual) face grid, shared by interior and
    # boundary half-faces so the pattern continues across the edge.
    return "X" if (fr + fc) % 2 == 1 else "Z"


def _faces(d: int) -> list[tuple[int, int, str]]:
    faces = []
    for fr in range(d - 1):
        for fc in range(d - 1):
            faces.append((fr, fc, _face_type(fr, fc)))
    for fc in range(d - 1):
        if _face_type(-1, fc) == "X":
            faces.append((-1, fc, "X"))
        if _face_type(d - 1, fc) == "X":
            faces.append((d - 1, fc, "X"))
    for fr in range(d - 1):
        if _face_type(fr, -1) == "Z":
            faces.append((fr, -1, "Z"))
        if _face_type(fr, d - 1) == "Z":
            faces.append((fr, d - 1, "Z"))
    return faces


def build_patch(d: int, schedule: str = "standard") -> PatchLayout:
    """Construct the distance-d patch and its measurement schedule."""
    if d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be odd and >= 3, got {d}")
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")

    orders = {"X": X_ORDER, "Z": Z_ORDER}
    if schedule == "swapped":
        orders = {"X": Z_ORDER, "Z": X_ORDER}

    entries = []
    for fr, fc, pauli in _faces(d):
        coord = (2 * fr + 1, 2 * fc + 1)
        support = []
        for step, slot in enumerate(orders[pauli], start=1):
            dr, dc = _SLOTS[slot]
            r, c = fr + dr, fc + dc
            if 0 <= r < d and 0 <= c < d:
                support.append((r * d + c, step))
        entries.append((pauli, coord, tuple(support)))

    # Index order: X block then Z block, each sorted by ancilla coordinate.
    entries.sort(key=lambda e: (e[0] != "X", e[1]))
    n_data = d * d
    stabilizers = tuple(
        Stabilizer(
            index=i,
            ancilla=n_data + i,
            pauli=pauli,
            coord=coord,
            data=tuple(q for q, _ in support),
            steps=tuple(t for _, t in support),
        )
        for i, (pauli, coord, support) in enumerate(entries)
    )
    return PatchLayout(
        d=d,
        schedule=schedule,
        stabilizers=stabilizers,
        z_logical=tuple(range(d)),
        x_logical=tuple(range(0, n_data, d)),
    )
