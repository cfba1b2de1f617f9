"""Exception types carrying machine-readable error codes."""


class OligofairError(ValueError):
    """Base error. ``code`` is a stable upper-case identifier."""

    def __init__(self, code, message=""):
        self.code = code
        super().__init__(f"{code}: {message}" if message else code)


class ParseError(OligofairError):
    def __init__(self, path, message):
        self.path = path
        super().__init__("PARSE_ERROR", f"{path}: {message}")


class ModelError(OligofairError):
    pass


class SolverError(OligofairError):
    pass


class GameError(OligofairError):
    def __init__(self, code, message="", firm=None):
        self.firm = firm
        super().__init__(code, message)
