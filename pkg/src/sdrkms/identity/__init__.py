"""Certificates, trust anchoring, capability white lists, operator dongles."""

from .capabilities import ROLES, CapabilityList, check_capability, default_capabilities
from .certificates import (Certificate, Issuer, Rejection, SubjectInfo, TrustStore, Verdict,
                           issue_certificate, verify_certificate)
from .dongle import Dongle, OperatorSession, authenticate_operator, provision_dongle

__all__ = [
    "ROLES", "CapabilityList", "Certificate", "Dongle", "Issuer", "OperatorSession", "Rejection",
    "SubjectInfo", "TrustStore", "Verdict", "authenticate_operator", "check_capability",
    "default_capabilities", "issue_certificate", "provision_dongle", "verify_certificate",
]
