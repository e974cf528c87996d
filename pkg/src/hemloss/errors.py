"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class ParseError(ValueError):
    """Malformed input file. ``location`` is a byte offset or a line number."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{message} (at {location})")
        self.location = location


class EmptyDatasetError(ParseError):
    pass


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, step, detail="non-finite loss or gradient"):
        super().__init__(f"training diverged at epoch {epoch}, step {step}: {detail}")
        self.epoch = epoch
        self.step = step


class AttackFailed(RuntimeError):
    def __init__(self, sample):
        super().__init__(f"non-finite input gradient for sample {sample}")
        self.sample = sample
