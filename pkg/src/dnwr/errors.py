"""Exception hierarchy for the DNWR package."""


class DnwrError(ValueError):
    """Base class for all errors raised by this package."""


class NonCommensurateError(DnwrError):
    pass


class MisalignedBreakpointError(DnwrError):
    pass


class TooThinSubdomainError(DnwrError):
    pass


class ArityMismatchError(DnwrError):
    pass


class SingularSystemError(DnwrError):
    pass


class TooFewNodesError(DnwrError):
    pass


class ShapeMismatchError(DnwrError):
    pass


class EvenSubdomainCountError(DnwrError):
    pass


class InterfaceMismatchError(DnwrError):
    def __init__(self, interface_index, gap, tol):
        self.interface_index = interface_index
        self.gap = gap
        super().__init__(
            f"subdomains disagree at interface {interface_index}: "
            f"max gap {gap:.3e} exceeds tolerance {tol:.3e}"
        )


class ConfigError(DnwrError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
