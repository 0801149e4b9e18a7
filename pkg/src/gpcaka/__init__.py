"""Pairing-free certificateless two-party authenticated key agreement.

The package splits into the protocol core (curves, keys, protocol), the
deployable layer (wire, keystore, service, cli), and the evaluation layer
(symbolic, attributes, spdl, bench).
"""

from .curves import (
    CURVES,
    CurveParams,
    IDENTITY,
    InvalidPointError,
    P256,
    Point,
    PointDecodeError,
    Scalar,
    TOY17,
    UnknownCurveError,
    decode_point,
    encode_point,
    get_curve,
    hash_to_scalar,
    is_on_curve,
    point_add,
    point_neg,
    random_scalar,
    scalar_mul,
    tagged_hash,
)
from .keys import (
    FullPrivateKey,
    Identity,
    InconsistentKeyError,
    MasterKey,
    PartialPrivateKey,
    PublicRecord,
    SystemParams,
    extract_partial_private_key,
    identity_binding,
    set_private_key,
    set_public_key,
    set_secret_value,
    setup,
    verify_partial_private_key,
)
from .protocol import (
    DegenerateSessionError,
    HandshakeMessage,
    InvalidPeerError,
    OpCount,
    Phase,
    Role,
    SessionKey,
    SessionState,
    SessionStateError,
    confirm_tag,
    derive_shared_point,
    kdf_session_key,
    read_op_count,
    session_complete,
    session_init,
)

__version__ = "0.1.0"
