"""The root security management station: the only node that packages updates."""

from dataclasses import dataclass, field

from ..container import FullContainer, RecipientHeader
from ..cryptosuite.registry import SuiteRegistry
from ..errors import CapacityExhausted
from ..identity.capabilities import CapabilityList, default_capabilities
from ..identity.certificates import Certificate, TrustStore
from ..rng import Drbg
from .base import NodeIdentity
from .packaging import seal_for_recipients


@dataclass
class RsmsState:
    identity: NodeIdentity
    registry: SuiteRegistry
    trust_store: TrustStore
    rng: Drbg
    caps: CapabilityList = field(default_factory=default_capabilities)
    issued: list = field(default_factory=list)  # container ids, hex

    @property
    def node_id(self) -> str:
        return self.identity.node_id


def rsms_package_update(rsms, entries, recipients: list[Certificate],
                        now: int | None = None) -> tuple[FullContainer, list[RecipientHeader]]:
    """Seal ``entries`` once and issue one header per recipient.

    Consumes 1 + len(recipients) signer leaves.  Any caller whose role lacks
    ``package_update`` is refused before a leaf is spent.
    """
    rsms.caps.require(rsms.identity.role, "package_update")
    needed = 1 + len(recipients)
    if rsms.identity.issuer.keys.remaining < needed:
        raise CapacityExhausted(f"signer has {rsms.identity.issuer.keys.remaining} leaves, needs {needed}")
    container, headers = seal_for_recipients(rsms.identity.issuer, rsms.registry.active, entries,
                                             recipients, rsms.rng,
                                             rsms.trust_store if now is not None else None, now)
    rsms.issued.append(container.container_id.hex())
    return container, headers
