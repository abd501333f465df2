class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured candidate cap."""

    def __init__(self, what: str, cap: int, needed: int | None = None):
        self.what = what
        self.cap = cap
        self.needed = needed
        msg = f"{what}: cap of {cap} candidates exceeded"
        if needed is not None:
            msg += f" (needs {needed})"
        super().__init__(msg)
