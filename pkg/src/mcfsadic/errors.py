"""Exception hierarchy shared by all modules.

Domain errors (a point outside an algorithm's domain, a non-primitive
directive sequence, ...) derive from :class:`DomainError`; the CLI maps them
to exit status 2.
"""


class MCFError(Exception):
    pass


class DomainError(MCFError):
    pass


class OutsideDomain(DomainError):
    pass


class DegenerateBoundary(DomainError):
    pass


class ZeroImage(DomainError):
    pass


class NoNestedSeed(DomainError):
    pass


class Unsaturated(DomainError):
    pass


class NotPrimitive(DomainError):
    pass


class IndeterminatePrecision(DomainError):
    pass


class EnumerationTooLarge(DomainError):
    pass


class SearchExhausted(DomainError):
    pass


class UnsupportedMeasure(DomainError):
    pass


class OrbitExit(DomainError):
    pass


class CloudTooSparse(DomainError):
    pass


class ParseError(MCFError, ValueError):
    pass
