"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Vector or matrix shapes do not agree."""


class ParameterError(ValueError):
    """A numeric parameter lies outside the admissible range."""


class FormatError(ValueError):
    """A matrix or network file is malformed or has an unsupported version."""


class CapExceeded(ParameterError):
    """An exact computation was asked to run above its configured size cap."""


class StructurallyUnmemorizable(ValueError):
    """Some transition can never be learned by a linear threshold unit.

    Raised by multi-pass training when an all-zero firing vector must be
    followed by a vector with at least one active neuron: the inner product
    with the zero input is always 0, so the residual never vanishes.
    """

    def __init__(self, pairs):
        self.pairs = list(pairs)
        shown = ", ".join(f"(neuron {l}, time {n})" for l, n in self.pairs[:5])
        more = "" if len(self.pairs) <= 5 else f" and {len(self.pairs) - 5} more"
        super().__init__(
            "zero input column must produce a firing neuron at " + shown + more
        )
