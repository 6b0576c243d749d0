"""Exception hierarchy shared by all demosplit modules."""


class DemosplitError(ValueError):
    """Base class for every error raised by this package."""


class MalformedInput(DemosplitError):
    pass


class InsufficientData(DemosplitError):
    pass


class InvalidParameter(DemosplitError):
    pass


class InvalidInput(DemosplitError):
    pass


class EmptyAfterFiltering(DemosplitError):
    """Every token of a sentence was dropped as out-of-vocabulary."""


class UnknownWord(DemosplitError):
    def __init__(self, word: str):
        super().__init__(f"word not in embedding table: {word!r}")
        self.word = word


class Infeasible(DemosplitError):
    """Fewer segments than instructions; no valid assignment exists."""

    def __init__(self, n_segments: int, n_instructions: int):
        super().__init__(
            f"cannot match {n_instructions} instructions (N) to "
            f"{n_segments} segments (M): need M >= N"
        )
        self.n_segments = n_segments
        self.n_instructions = n_instructions


class DegenerateGeometry(DemosplitError):
    pass
