"""Physical noise channels: relaxation/dephasing idling, gate depolarizing, readout flips.

All channels are Pauli channels (the idling channel is the Pauli twirl of
amplitude plus phase damping), so every noise event is a probabilistic
Pauli insertion or a classical measurement-bit flip.  Times are in
arbitrary but consistent units; only ratios like t/T1 matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class PauliProbs(NamedTuple):
    """Single-qubit Pauli channel: identity plus X/Y/Z flip probabilities."""

    pi: float
    px: float
    py: float
    pz: float


@dataclass(frozen=True)
class NoiseParams:
    """Hardware noise figures shared by every circuit location.

    Parameters
    ----------
    t1 : float
        Amplitude damping (relaxation) time constant, > 0.
    tphi : float
        Pure dephasing time constant, > 0; ``math.inf`` disables pure
        dephasing, in which case T2 saturates its ceiling 2*T1.
    p : float
        Depolarizing strength applied after every gate.
    q : float
        Classical flip probability of each measurement outcome.
    """

    t1: float
    tphi: float
    p: float
    q: float

    def __post_init__(self) -> None:
        if not self.t1 > 0.0:
            raise ValueError(f"t1 must be positive, got {self.t1}")
        if not self.tphi > 0.0:
            raise ValueError(f"tphi must be positive, got {self.tphi}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if not 0.0 <= self.q <= 0.5:
            raise ValueError(f"q must be in [0, 1/2], got {self.q}")

    @property
    def t2(self) -> float:
        return t2_from(self.t1, self.tphi)


def t2_from(t1: float, tphi: float) -> float:
    """Total dephasing time from 1/T2 = 1/(2*T1) + 1/Tphi.

    The returned T2 never exceeds 2*T1 (equality iff Tphi is infinite).
    """
    if math.isinf(tphi):
        return 2.0 * t1
    return 1.0 / (0.5 / t1 + 1.0 / tphi)


def tphi_from_t2(t1: float, t2: float) -> float:
    """Pure-dephasing time reproducing a target T2 at the given T1.

    Inverse of ``t2_from``: 1/Tphi = 1/T2 - 1/(2*T1).  T2 equal to the
    2*T1 ceiling maps to an infinite Tphi; T2 above the ceiling has no
    physical Tphi and raises.
    """
    if not 0.0 < t2 <= 2.0 * t1:
        raise ValueError(f"t2 must lie in (0, 2*t1], got t2={t2} with t1={t1}")
    if t2 == 2.0 * t1:
        return math.inf
    return 1.0 / (1.0 / t2 - 0.5 / t1)


def idling_probs(t1: float, tphi: float, t: float) -> PauliProbs:
    """Pauli twirl of amplitude plus phase damping for idle duration t.

    px = py = (1 - exp(-t/T1)) / 4
    pz = (1 - exp(-t/T2)) / 2 - (1 - exp(-t/T1)) / 4

    pz is nonnegative for every t because T2 <= 2*T1.
    """
    if t < 0.0:
        raise ValueError(f"idle duration must be nonnegative, got {t}")
    t2 = t2_from(t1, tphi)
    # -expm1(-x) = 1 - exp(-x), accurate for small x
    decay1 = -math.expm1(-t / t1)
    decay2 = -math.expm1(-t / t2)
    px = 0.25 * decay1
    pz = 0.5 * decay2 - 0.25 * decay1
    return PauliProbs(1.0 - 2.0 * px - pz, px, px, pz)


def depolarize1_probs(p: float) -> PauliProbs:
    """Single-qubit depolarizing: each of X, Y, Z with probability p/3."""
    return PauliProbs(1.0 - p, p / 3.0, p / 3.0, p / 3.0)


def depolarize2_probs(p: float) -> np.ndarray:
    """Two-qubit depolarizing as a 16-entry distribution over Pauli pairs.

    Index 4*a + b encodes the pair (P_a on first qubit, P_b on second)
    with 0=I, 1=X, 2=Y, 3=Z.  Entry 0 is 1-p; the other 15 are p/15.
    """
    probs = np.full(16, p / 15.0)
    probs[0] = 1.0 - p
    return probs


def readout_flip_prob(q: float) -> float:
    """Probability that a recorded measurement bit is flipped."""
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"q must be in [0, 1/2], got {q}")
    return q


def lindblad_twirl_probs(t1: float, tphi: float, t: float) -> PauliProbs:
    """Idling Pauli probabilities via direct integration of the master equation.

    Numerically integrates d(rho)/dt = sum_k L_k rho L_k^+ - {L_k^+ L_k, rho}/2
    with L_1 = sigma_minus / sqrt(T1) and L_2 = sigma_z / sqrt(2*Tphi),
    extracts the diagonal of the Pauli transfer matrix from evolved Bloch
    states, and twirls.  Slow; used only to cross-check ``idling_probs``.
    """
    from scipy.integrate import solve_ivp

    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    sminus = np.array([[0, 0], [1, 0]], dtype=complex)

    lindblad_ops = [sminus / math.sqrt(t1)]
    if not math.isinf(tphi):
        lindblad_ops.append(sz / math.sqrt(2.0 * tphi))

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = (y[:4] + 1j * y[4:]).reshape(2, 2)
        drho = np.zeros((2, 2), dtype=complex)
        for op in lindblad_ops:
            opd_op = op.conj().T @ op
            drho += op @ rho @ op.conj().T - 0.5 * (opd_op @ rho + rho @ opd_op)
        flat = drho.reshape(4)
        return np.concatenate([flat.real, flat.imag])

    def evolve(rho0: np.ndarray) -> np.ndarray:
        y0 = np.concatenate([rho0.reshape(4).real, rho0.reshape(4).imag])
        sol = solve_ivp(rhs, (0.0, t), y0, rtol=1e-10, atol=1e-12, method="DOP853")
        yf = sol.y[:, -1]
        return (yf[:4] + 1j * yf[4:]).reshape(2, 2)

    ident = np.eye(2, dtype=complex)
    diag = []
    for pauli in (sx, sy, sz):
        plus = evolve(0.5 * (ident + pauli))
        minus = evolve(0.5 * (ident - pauli))
        # difference of traces cancels the non-unital affine component
        diag.append(0.5 * np.trace(pauli @ (plus - minus)).real)
    rxx, ryy, rzz = diag
    return PauliProbs(
        0.25 * (1.0 + rxx + ryy + rzz),
        0.25 * (1.0 + rxx - ryy - rzz),
        0.25 * (1.0 - rxx + ryy - rzz),
        0.25 * (1.0 - rxx - ryy + rzz),
    )
