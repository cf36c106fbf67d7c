"""On-disk node key file: identity, suite and both private key pairs.

The signing key is stateful, so every tool that signs must write the file
back afterwards (see :func:`save_key_file`).
"""

import os
from dataclasses import dataclass

from .cryptosuite.cramer_shoup import EncapsKeyPair
from .cryptosuite.gmr import SignatureKeyPair
from .cryptosuite.suite import AlgorithmSuite
from .encoding import Reader, Writer
from .errors import FormatError
from .identity.certificates import Issuer

KEYFILE_MAGIC = b"SKEY"


@dataclass
class NodeKeyFile:
    node_id: str
    role: str
    suite: AlgorithmSuite
    sig: SignatureKeyPair
    encaps: EncapsKeyPair

    @property
    def issuer(self) -> Issuer:
        return Issuer(self.node_id, self.role, self.sig)

    def to_bytes(self) -> bytes:
        w = Writer().raw(KEYFILE_MAGIC).u16(1).text(self.node_id).text(self.role)
        w.blob(self.suite.to_bytes()).blob(self.sig.to_bytes()).blob(self.encaps.to_bytes())
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "NodeKeyFile":
        r = Reader(data)
        r.expect(KEYFILE_MAGIC)
        if r.u16() != 1:
            raise FormatError("unsupported key file version")
        kf = cls(r.text(), r.text(), AlgorithmSuite.from_bytes(r.blob()),
                 SignatureKeyPair.from_bytes(r.blob()), EncapsKeyPair.from_bytes(r.blob()))
        r.done()
        return kf


def load_key_file(path) -> NodeKeyFile:
    with open(path, "rb") as fh:
        return NodeKeyFile.from_bytes(fh.read())


def save_key_file(path, kf: NodeKeyFile) -> None:
    """Atomic rewrite, so a crash never rolls the signer's leaf counter back."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(kf.to_bytes())
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
