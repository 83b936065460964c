"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Invalid user-supplied data, file content, or configuration.

    The command-line layer maps this (and I/O errors) to exit code 2;
    anything else is treated as an internal failure.
    """


class TrainingDivergedError(RuntimeError):
    """Training loss became NaN or infinite."""
