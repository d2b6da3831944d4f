"""Errors raised by the scene ingestion paths."""


class IngestError(Exception):
    pass


class UnsupportedDirective(IngestError):
    def __init__(self, name: str, line: int):
        super().__init__(f"unsupported directive '{name}' at line {line}")
        self.name = name
        self.line = line


class PbrtSyntaxError(IngestError):
    def __init__(self, line: int, expected: str):
        super().__init__(f"syntax error at line {line}: expected {expected}")
        self.line = line
        self.expected = expected


class UnbalancedBlock(IngestError):
    def __init__(self, line: int, what: str = "block"):
        super().__init__(f"unbalanced {what} at line {line}")
        self.line = line


class MissingInclude(IngestError):
    def __init__(self, path: str):
        super().__init__(f"include file not found: {path}")
        self.path = path


class NotPaired(IngestError):
    """Triangle pair does not follow the shared-diagonal quad convention."""

    def __init__(self, triangle_index: int):
        super().__init__(f"triangles {triangle_index},{triangle_index + 1} do not form a quad")
        self.triangle_index = triangle_index


class BadMagic(IngestError):
    pass


class UnsupportedVersion(IngestError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"unsupported BIFF version {found}, expected {expected}")
        self.found = found
        self.expected = expected


class TruncatedStream(IngestError):
    def __init__(self, offset: int):
        super().__init__(f"truncated stream at byte {offset}")
        self.offset = offset


class MismatchedScenes(IngestError):
    pass
