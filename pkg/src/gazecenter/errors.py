"""Exception type shared by every gazecenter module."""


class GazeCenterError(ValueError):
    """A data or contract error carrying a stable machine-readable code.

    ``code`` is one of the upper-case identifiers used throughout the package
    (``EMPTY_RASTER``, ``DIM_MISMATCH``, ...). The CLI prints it verbatim so
    callers can parse failures without matching on message text.
    """

    def __init__(self, code, message=""):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}" if message else code)
