"""Shared structural types.

A choice model is anything that knows its universe size and can assign
a probability distribution to any choice set of two or more
alternatives. The concrete models in this package (Markov-chain models,
Luce models, mixtures, embedding models) all satisfy this protocol, and
evaluation code is written against it rather than any single class.
"""

from typing import Protocol, Sequence, runtime_checkable

from .ctmc import Distribution


@runtime_checkable
class ChoiceModel(Protocol):
    """Anything that maps choice sets to choice distributions."""

    @property
    def n(self) -> int:
        """Number of alternatives in the universe."""
        ...

    def probabilities(self, subset: Sequence[int]) -> Distribution:
        """Choice distribution over the given set of alternatives."""
        ...
