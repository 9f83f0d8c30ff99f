"""Composite ZIP + induction-motor load parameter identification.

Forward model, synthetic measurement generation, a swarm tabular
Q-learning optimizer with imitation and transfer, baseline metaheuristics,
and a batch CLI tying them together.
"""

__version__ = "0.1.0"
