"""Error taxonomy: anything raised here maps to CLI exit code 1."""


class ComputationError(RuntimeError):
    """A computation could not produce a meaningful result."""


class DegeneratePreselectionError(ComputationError):
    """Preselection removed all probability mass at the working precision."""


class TableRangeError(ComputationError):
    """Precomputed series tables do not cover the requested threshold."""


class MissingTileError(ComputationError):
    """A tile partial required by gather was not found."""
