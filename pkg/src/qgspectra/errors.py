"""Exception taxonomy; DomainError maps to CLI exit code 1."""


class QgError(Exception):
    pass


class DomainError(QgError):
    """Well-formed request on data the mathematics rejects."""


class ProblemFormatError(DomainError):
    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class NotElliptic(DomainError):
    pass


class NotSymmetric(DomainError):
    pass


class NearSingularResolvent(DomainError):
    pass


class WindowTooSmall(DomainError):
    pass


class ZetaUndefined(DomainError):
    pass


class IntegrationError(QgError):
    pass


class CertificateError(QgError):
    pass
