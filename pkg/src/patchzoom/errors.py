"""Shared exception types."""


class FormatError(Exception):
    """A binary file failed validation (bad magic, version, or truncation).

    ``offset`` is the byte position at which parsing failed.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset
