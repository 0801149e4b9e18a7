"""One-round authenticated key agreement between two registered principals.

Each side sends exactly one handshake message (ID, domain, P_pub, R, T) with
a fresh ephemeral point T = t*P, then computes

    sigma = t + D + x                         (mod q)
    V     = T_peer + P_peer + R_peer + H1(ID_peer, R_peer, P_peer) * P0_peer
    K     = sigma * V

Both sides land on (t_A + D_A + x_A)(t_B + D_B + x_B) * P, so the 32-byte
session key, a tagged hash over (ID_init, ID_resp, T_init, T_resp, K) with
the initiator's values first, matches bit for bit.

Cross-domain sessions work the same way as long as both domains share a
curve: V is computed under the *peer's* domain parameters, since the peer's
partial key is bound to its own KGC's P0.

Per-session operation counters track the online cost: after completion each
entity has spent 3 point multiplications, 3 point additions, 2 scalar
additions, 2 hashes, and 1 message.  Transcript fingerprints and the
optional confirmation tag are bookkeeping on top of the protocol and are
not counted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .curves import (
    HASH_TAG_CONFIRM,
    HASH_TAG_H2,
    HASH_TAG_TRANSCRIPT,
    Point,
    Scalar,
    encode_point,
    is_on_curve,
    point_add,
    random_scalar,
    scalar_mul,
    tagged_hash,
)
from .keys import FullPrivateKey, Identity, SystemParams, identity_binding


class InvalidPeerError(ValueError):
    """Peer handshake message fails validation."""


class DegenerateSessionError(ValueError):
    """sigma == 0 or V == O; abort rather than derive a structureless key."""


class SessionStateError(RuntimeError):
    """Operation not allowed in the session's current phase."""


class Role(enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"


class Phase(enum.Enum):
    FRESH = "fresh"
    SENT = "sent"
    COMPLETE = "complete"


@dataclass
class OpCount:
    """Online operation counters, monotone within a session."""

    point_mults: int = 0
    point_adds: int = 0
    scalar_adds: int = 0
    hashes: int = 0
    messages_sent: int = 0

    def snapshot(self) -> "OpCount":
        return OpCount(
            self.point_mults,
            self.point_adds,
            self.scalar_adds,
            self.hashes,
            self.messages_sent,
        )


@dataclass(frozen=True, slots=True)
class HandshakeMessage:
    """The single message each side sends."""

    id: Identity
    domain_id: str
    p_pub: Point
    r_point: Point
    t_point: Point

    def __post_init__(self) -> None:
        for pt in (self.p_pub, self.r_point, self.t_point):
            if pt.is_identity:
                raise InvalidPeerError("handshake points must not be O")


@dataclass(frozen=True, slots=True)
class SessionKey:
    key: bytes
    transcript_hash: bytes


@dataclass
class SessionState:
    """Single-owner state of one protocol run.  Not thread-safe."""

    role: Role
    own_keys: FullPrivateKey
    params: SystemParams
    ephemeral: Scalar | None = field(default=None, repr=False)
    own_t_point: Point | None = None
    phase: Phase = Phase.FRESH
    op_count: OpCount = field(default_factory=OpCount)


def session_init(
    role: Role, own_keys: FullPrivateKey, params: SystemParams, rng
) -> tuple[SessionState, HandshakeMessage]:
    """Pick the ephemeral, build the outgoing message, move to SENT."""
    if own_keys.record.domain_id != params.domain_id:
        raise ValueError("keys belong to a different domain")
    st = SessionState(role=role, own_keys=own_keys, params=params)
    t = random_scalar(rng, params.curve)
    t_point = scalar_mul(t, params.curve.gen, params.curve)
    st.op_count.point_mults += 1
    st.ephemeral = t
    st.own_t_point = t_point
    st.phase = Phase.SENT
    st.op_count.messages_sent += 1
    rec = own_keys.record
    msg = HandshakeMessage(
        id=rec.id,
        domain_id=rec.domain_id,
        p_pub=rec.p_pub,
        r_point=rec.r_point,
        t_point=t_point,
    )
    return st, msg


def _validate_peer(peer: HandshakeMessage, params: SystemParams) -> None:
    curve = params.curve
    for name, pt in (("P_pub", peer.p_pub), ("R", peer.r_point), ("T", peer.t_point)):
        if pt.is_identity or not is_on_curve(pt, curve):
            raise InvalidPeerError(f"peer {name} invalid for curve {curve.curve_id}")


def derive_shared_point(
    st: SessionState, peer: HandshakeMessage, peer_params: SystemParams | None = None
) -> Point:
    """sigma * V for this session; peer_params defaults to the own domain."""
    if st.phase is not Phase.SENT:
        raise SessionStateError(f"cannot derive in phase {st.phase.value}")
    peer_params = peer_params or st.params
    curve = st.params.curve
    if peer_params.curve != curve:
        raise InvalidPeerError("peer domain uses a different curve")
    _validate_peer(peer, peer_params)

    q_peer = identity_binding(peer_params, peer.id, peer.r_point, peer.p_pub)
    st.op_count.hashes += 1
    v = scalar_mul(q_peer, peer_params.p0, curve)
    st.op_count.point_mults += 1
    for term in (peer.t_point, peer.p_pub, peer.r_point):
        v = point_add(v, term, curve)
        st.op_count.point_adds += 1
    if v.is_identity:
        raise DegenerateSessionError("peer aggregate V is the identity")

    sigma = st.ephemeral + st.own_keys.partial.d
    sigma = sigma + st.own_keys.x
    st.op_count.scalar_adds += 2
    if sigma.is_zero:
        raise DegenerateSessionError("own aggregate sigma is zero")
    shared = scalar_mul(sigma, v, curve)
    st.op_count.point_mults += 1
    return shared


def kdf_session_key(
    initiator_id: Identity,
    responder_id: Identity,
    t_init: Point,
    t_resp: Point,
    shared: Point,
    params: SystemParams,
) -> SessionKey:
    """32-byte session key over the role-ordered transcript plus K."""
    if shared.is_identity:
        raise DegenerateSessionError("shared point is the identity")
    curve = params.curve
    transcript = [
        initiator_id.encode(),
        responder_id.encode(),
        encode_point(t_init, curve),
        encode_point(t_resp, curve),
    ]
    key = tagged_hash(HASH_TAG_H2, transcript + [encode_point(shared, curve)])
    transcript_hash = tagged_hash(HASH_TAG_TRANSCRIPT, transcript)
    return SessionKey(key=key, transcript_hash=transcript_hash)


def session_complete(
    st: SessionState, peer: HandshakeMessage, peer_params: SystemParams | None = None
) -> SessionKey:
    """Derive the session key and erase the ephemeral."""
    if st.phase is Phase.COMPLETE:
        raise SessionStateError("session already complete")
    shared = derive_shared_point(st, peer, peer_params)
    if st.role is Role.INITIATOR:
        ids = (st.own_keys.record.id, peer.id)
        t_points = (st.own_t_point, peer.t_point)
    else:
        ids = (peer.id, st.own_keys.record.id)
        t_points = (peer.t_point, st.own_t_point)
    session_key = kdf_session_key(ids[0], ids[1], t_points[0], t_points[1], shared, st.params)
    st.op_count.hashes += 1
    st.phase = Phase.COMPLETE
    st.ephemeral = None
    return session_key


def read_op_count(st: SessionState) -> OpCount:
    """Copy of the session's counters."""
    return st.op_count.snapshot()


def confirm_tag(session_key: SessionKey, role: Role) -> bytes:
    """Key-confirmation tag; differs per role so the two directions differ."""
    role_byte = b"\x01" if role is Role.INITIATOR else b"\x02"
    return tagged_hash(
        HASH_TAG_CONFIRM, [session_key.key, session_key.transcript_hash, role_byte]
    )
