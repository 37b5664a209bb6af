"""Inverse-VQA laboratory on a synthetic scene world.

The package trains a variational question generator conditioned on
(scene, answer), extracts the belief set of any VQA model with
reinforcement learning, and measures both with ranking, linguistic, and
belief-composition metrics -- all against an exact scene oracle.
"""

__version__ = "0.1.0"
