"""Exception hierarchy.

Every domain error carries a short machine-parsable ``reason`` used by the
CLI (exit status 1, ``error: <reason>: <message>``).
"""


class SdrKmsError(Exception):
    reason = "error"


class ParameterError(SdrKmsError, ValueError):
    reason = "parameter"


class FormatError(SdrKmsError, ValueError):
    reason = "parse"


# -- cryptosuite -------------------------------------------------------------

class CapacityExhausted(SdrKmsError):
    reason = "signer-exhausted"


class DecapsulationError(SdrKmsError):
    reason = "decapsulation-rejected"


class RekeyError(SdrKmsError):
    reason = "rekey"


class SuiteConflict(SdrKmsError):
    reason = "suite-conflict"


class SuiteNotFound(SdrKmsError, KeyError):
    reason = "suite-not-found"

    def __str__(self):
        return Exception.__str__(self)


# -- identity ----------------------------------------------------------------

class CapabilityDenied(SdrKmsError, PermissionError):
    reason = "capability-denied"


class CertificateError(SdrKmsError):
    reason = "certificate-invalid"

    def __init__(self, message, cause=None):
        super().__init__(message)
        self.cause = cause


class AuthenticationError(SdrKmsError):
    reason = "authentication"


class WrongPassword(AuthenticationError):
    reason = "wrong-password"


class DongleLocked(AuthenticationError):
    reason = "dongle-locked"


class DongleAbsent(AuthenticationError):
    reason = "dongle-absent"


# -- container ---------------------------------------------------------------

class ContainerError(SdrKmsError):
    reason = "container"


class NestingError(ContainerError, FormatError):
    reason = "nesting"


class ArchiveError(ContainerError, FormatError):
    reason = "archive-invalid"


class RoutingError(ContainerError):
    reason = "routing"


class HeaderSignatureError(ContainerError):
    reason = "header-signature-invalid"


class ContainerSignatureError(ContainerError):
    reason = "signature-invalid"


class HeaderDecapsulationError(ContainerError):
    reason = "decapsulation-rejected"


# -- nodes / lifecycle -------------------------------------------------------

class ClearanceError(SdrKmsError):
    reason = "clearance"


class CompartmentError(SdrKmsError, KeyError):
    reason = "compartment"

    def __str__(self):
        return Exception.__str__(self)


class TopologyError(SdrKmsError):
    reason = "topology"


class ChannelBusy(SdrKmsError):
    reason = "channel-busy"


class JoinAborted(SdrKmsError):
    reason = "join-aborted"

    def __init__(self, message, transcript=(), step=0):
        super().__init__(message)
        self.transcript = list(transcript)
        self.step = step


class UnrecoverableCompromise(SdrKmsError):
    reason = "unrecoverable-compromise"


class KeyStateError(SdrKmsError):
    reason = "key-state"


# -- simharness --------------------------------------------------------------

class ConfigError(SdrKmsError):
    reason = "config"

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InvariantViolation(SdrKmsError):
    reason = "invariant"


class TrafficError(SdrKmsError):
    reason = "traffic-rejected"
