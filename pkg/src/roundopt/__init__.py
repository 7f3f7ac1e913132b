"""Round-rate optimizer for an idling surface-code memory.

Simulates the logical Pauli channel of a rotated surface-code patch that
idles for a fixed wall-clock time while being stabilized by repeated
syndrome measurement, and finds the number of measurement rounds that
minimizes the logical failure rate.
"""

__version__ = "0.1.0"

from .noise import NoiseParams, idling_probs  # noqa: E402
from .circuit import ExperimentConfig, build_memory_circuit  # noqa: E402

__all__ = [
    "__version__",
    "NoiseParams",
    "idling_probs",
    "ExperimentConfig",
    "build_memory_circuit",
]
