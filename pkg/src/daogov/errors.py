"""Exception hierarchy shared by every stage."""


class DaoGovError(Exception):
    """Base class for all library errors."""


class ValidationError(DaoGovError, ValueError):
    pass


class UnknownProposalError(DaoGovError, LookupError):
    pass


class ParseError(DaoGovError, ValueError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {message}")


class IntegrityError(DaoGovError):
    def __init__(self, message, offenders=()):
        self.offenders = list(offenders)
        shown = ", ".join(map(str, self.offenders[:20]))
        more = "" if len(self.offenders) <= 20 else f" (+{len(self.offenders) - 20} more)"
        super().__init__(f"{message}: {shown}{more}" if self.offenders else message)


class EmptyDomainError(DaoGovError, ValueError):
    pass


class DegenerateProposalError(DaoGovError, ValueError):
    """Raised when a proposal's total voting power is zero."""


class ConfigurationError(DaoGovError, ValueError):
    pass


class PrerequisiteError(DaoGovError):
    def __init__(self, stage, missing):
        self.stage = stage
        self.missing = missing
        super().__init__(f"stage '{stage}' requires stage '{missing}' to run first")


class UnsupportedStrategyError(DaoGovError):
    def __init__(self, kind):
        self.kind = kind
        super().__init__(f"unsupported strategy: {kind}")


class ProviderError(DaoGovError):
    """Balance lookup failed; callers may retry."""

    retryable = True
