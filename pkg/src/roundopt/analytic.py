"""Closed-form model of how logical failure depends on the round count.

Splitting a fixed idle time T into N measurement rounds trades two error
sources against each other: per-round idle error shrinks like T/N while
gate and propagation error stays fixed per round, so the lowest-order
logical failure rate A*N*(eps_idle(T/N) + k*p)^((d+1)/2) has an interior
minimum in N.  Everything here is per logical basis; the per-round gate
term k*p counts the two-qubit depolarizing events that dress one data
qubit per round, and k is validated against brute-force propagation
through the actual circuit.

Readout flips are not part of this model: they enter the decoding graphs
through time-like edges whose weight does not depend on N, so to this
order they shift the failure level without moving the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .circuit import ExperimentConfig, build_memory_circuit
from .frame import enumerate_mechanisms, final_frame
from .noise import NoiseParams

__all__ = [
    "AnalyticParams",
    "count_dressing_choices",
    "k_value",
    "min_weight_failure",
    "combined_failure",
    "n_star_basis",
    "n_star_combined",
    "feasible_rounds",
    "analytic_table",
]


def k_value() -> Fraction:
    """Effective count of depolarizing choices per data qubit per round.

    A bulk data qubit is dressed with a residual X (equivalently Z) by 7
    two-qubit error events per round: its own 4 gates with an X on the
    data side, plus 3 gates earlier in its ancillas' schedules whose
    ancilla-side X propagates onto it.  Each event covers 8 of the 15
    equally likely nonidentity Pauli pairs, giving 7*8/15 = 56/15.
    """
    return Fraction(56, 15)


def count_dressing_choices(pauli: str, d: int = 5) -> Fraction:
    """Brute-force oracle behind ``k_value``.

    Enumerates every two-qubit depolarizing mechanism of a one-round
    memory circuit, propagates each through the full circuit, and counts
    the ones that leave the requested Pauli component on the central
    data qubit.  Returned as count/15, the per-event weight in units of
    the gate error rate p.
    """
    if pauli not in ("x", "z"):
        raise ValueError(f"pauli must be 'x' or 'z', got {pauli!r}")
    if d < 5 or d % 2 == 0:
        raise ValueError("need an odd distance >= 5 for a bulk center qubit")
    config = ExperimentConfig(
        d=d,
        rounds=1,
        t_total=0.0,
        noise=NoiseParams(t1=1.0, tphi=math.inf, p=0.5, q=0.0),
    )
    circuit = build_memory_circuit(config)
    center = (d // 2) * d + d // 2
    count = 0
    for mech in enumerate_mechanisms(circuit):
        if mech.group != "dep2":
            continue
        fx, fz = final_frame(circuit, {mech.instr: mech.paulis})
        frame = fx if pauli == "x" else fz
        count += (frame >> center) & 1
    return Fraction(count, 15)


@dataclass(frozen=True)
class AnalyticParams:
    """Inputs of the closed-form failure model.

    k defaults to the derived 56/15; a is an overall amplitude that a
    fit could supply.  Neither changes where the optimum sits.
    """

    d: int
    t_total: float
    t1: float
    t2: float
    p: float
    k: float = float(Fraction(56, 15))
    a: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError(f"d must be an odd integer >= 3, got {self.d}")
        if not self.t_total > 0.0:
            raise ValueError("t_total must be positive")
        if not 0.0 < self.t2 <= 2.0 * self.t1:
            raise ValueError("t2 must lie in (0, 2*t1]")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")

    @classmethod
    def from_noise(
        cls,
        d: int,
        t_total: float,
        noise: NoiseParams,
        k: float | None = None,
        a: float = 1.0,
    ) -> "AnalyticParams":
        kw = {} if k is None else {"k": k}
        return cls(
            d=d, t_total=t_total, t1=noise.t1, t2=noise.t2, p=noise.p, a=a, **kw
        )


def _idle_term(params: AnalyticParams, n: int, basis: str, linearized: bool) -> float:
    # x-basis chains are flipped by X or Y idle errors, total
    # (1 - exp(-t/T1))/2; z-basis by Z or Y, total (1 - exp(-t/T2))/2.
    t = params.t_total / n
    t_rel = params.t1 if basis == "x" else params.t2
    if linearized:
        return 0.5 * t / t_rel
    return -0.5 * math.expm1(-t / t_rel)


def _check_basis(basis: str) -> None:
    if basis not in ("x", "z"):
        raise ValueError(f"basis must be 'x' or 'z', got {basis!r}")


def min_weight_failure(
    params: AnalyticParams, n: int, basis: str, linearized: bool = False
) -> float:
    """Lowest-order failure proxy a*n*(idle(T/n) + k*p)^((d+1)/2).

    With ``linearized`` the idle term becomes t/(2*T_rel), which makes
    the optimum solvable in closed form (see ``n_star_basis``).  The
    proxy is a leading-order rate, not a bounded probability.
    """
    _check_basis(basis)
    if n < 1:
        raise ValueError("n must be >= 1")
    eps = _idle_term(params, n, basis, linearized) + params.k * params.p
    return params.a * n * eps ** ((params.d + 1) // 2)


def combined_failure(
    params: AnalyticParams, n: int, linearized: bool = False
) -> float:
    """Sum of the x- and z-basis failure proxies at round count n."""
    return min_weight_failure(params, n, "x", linearized) + min_weight_failure(
        params, n, "z", linearized
    )


def n_star_basis(params: AnalyticParams, basis: str) -> float:
    """Real-valued optimum of the linearized model for one basis.

    Setting d/dn [n*(T/(2*T_rel*n) + k*p)^m] = 0 gives
    n* = (d-1)*T / (4*k*p*T_rel) with T_rel = T1 (x) or T2 (z).
    Gate noise p = 0 removes the fixed per-round cost, so splitting ever
    finer always helps and the optimum diverges; returned as inf.
    """
    _check_basis(basis)
    kp = params.k * params.p
    if kp == 0.0:
        return math.inf
    t_rel = params.t1 if basis == "x" else params.t2
    return (params.d - 1) * params.t_total / (4.0 * kp * t_rel)


def n_star_combined(params: AnalyticParams, linearized: bool = False) -> int:
    """Integer round count minimizing the two-basis sum.

    Scans n = 1 .. ceil(2*max(n*_x, n*_z)), which brackets the optimum
    because the sum rises monotonically past the larger single-basis
    optimum.  Ties keep the smallest n.
    """
    n_hi = max(n_star_basis(params, "x"), n_star_basis(params, "z"))
    if math.isinf(n_hi):
        raise ValueError("p = 0 pushes the optimum to infinitely many rounds")
    best_n, best_f = 1, combined_failure(params, 1, linearized)
    for n in range(2, math.ceil(2.0 * n_hi) + 1):
        f = combined_failure(params, n, linearized)
        if f < best_f:
            best_n, best_f = n, f
    return best_n


def feasible_rounds(t_total: float, cycle_time: float) -> int:
    """How many rounds of the given cycle duration fit inside t_total.

    floor with a one-part-per-billion grace so that ratios which are
    exact in decimal (1 s over 2 ms) do not lose a round to binary
    rounding.
    """
    if not cycle_time > 0.0:
        raise ValueError("cycle_time must be positive")
    if t_total < 0.0:
        raise ValueError("t_total must be nonnegative")
    return int(math.floor(t_total / cycle_time + 1e-9))


def analytic_table(
    params: AnalyticParams, n_list, linearized: bool = False
) -> list[tuple[int, float, float, float]]:
    """(n, fail_x, fail_z, fail_x + fail_z) rows for the given counts."""
    rows = []
    for n in n_list:
        fx = min_weight_failure(params, n, "x", linearized)
        fz = min_weight_failure(params, n, "z", linearized)
        rows.append((n, fx, fz, fx + fz))
    return rows
