"""Exception and warning types shared across lamelab."""


class LamelabError(Exception):
    """Base class for library errors."""


class PrecisionWarning(UserWarning):
    """Series evaluation is expected to lose accuracy."""


class PoleAtLattice(LamelabError, ZeroDivisionError):
    pass


class PoleAtSingularity(LamelabError, ZeroDivisionError):
    pass


class PoleCollision(LamelabError):
    pass


class ZeroTotalWeight(LamelabError):
    pass


class InconsistentB(LamelabError):
    pass


class UnstableRange(LamelabError):
    def __init__(self, message, direct_count=None):
        super().__init__(message)
        self.direct_count = direct_count


class PathFailure(LamelabError):
    pass


class DedupAmbiguity(LamelabError):
    pass


class TargetNearBranchDivisor(LamelabError):
    pass


class ClusterAmbiguity(LamelabError):
    pass


class ExceptionalParameter(LamelabError):
    def __init__(self, message, stratum=None):
        super().__init__(message)
        self.stratum = stratum


class RootMultiplicity(LamelabError):
    pass


class DegreeDeficit(LamelabError):
    pass


class DegenerateDeformation(LamelabError):
    pass


class ParseError(LamelabError):
    def __init__(self, message, field=None, line=None):
        where = [f"line {line}"] if line is not None else []
        where += [f"field {field!r}"] if field is not None else []
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class ValidationError(LamelabError):
    def __init__(self, message, field=None):
        super().__init__(f"{message} (field {field!r})" if field is not None else message)
        self.field = field
