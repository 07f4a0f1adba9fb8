"""Exception types shared across the toolkit."""


class FormatError(ValueError):
    """An image file has an unsupported or malformed encoding."""


class SizeError(ValueError):
    """An image is too small (or wrongly shaped) for the requested operation."""


class CoverageError(ValueError):
    """Patch aggregation left at least one canvas pixel uncovered."""


class TrainingError(ValueError):
    """Dictionary training was asked to run on insufficient data."""
