"""Multi-fidelity surrogate learning for stretch-bending springback.

Subpackages: geometry primitives, a synthetic elastoplastic data generator,
dataset persistence, the encoder/processor/decoder surrogate with cross-fidelity
attention, staged training, evaluation metrics, and the displacement-compensation
design loop.
"""

__version__ = "0.1.0"
