"""Certificateless key lifecycle.

A trust domain is run by one key generation center (KGC) holding a master
scalar s with public point P0 = s*P.  Each principal owns a secret value x
(public half P_pub = x*P) and a KGC-issued partial private key (R, D) where

    R = r*P,   Q = H1(ID, R, P_pub),   D = r + s*Q  (mod q)

The public key P_pub is hashed into Q, so a partial key is bound to one
exact (identity, public key) pair; replacing either invalidates it.  The
binding is checked pairing-free via D*P == R + Q*P0, which anyone holding
the domain's P0 can evaluate.

Key material is created in this order: the principal picks x and P_pub
first, then the KGC extracts (R, D) against them.  The KGC forgets r after
extraction; only (R, D) leave it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .curves import (
    HASH_TAG_H1,
    CurveParams,
    InvalidPointError,
    Point,
    Scalar,
    encode_point,
    get_curve,
    hash_to_scalar,
    is_on_curve,
    point_add,
    random_scalar,
    scalar_mul,
)


class InconsistentKeyError(ValueError):
    """Key material pieces do not belong together."""


MAX_DN_BYTES = 512


@dataclass(frozen=True, slots=True)
class Identity:
    """Distinguished name: hierarchical path string, unique within a domain.

    Limited to 512 UTF-8 bytes with no control characters so identities
    survive the line-oriented keystore format and wire framing unmangled.
    """

    dn: str

    def __post_init__(self) -> None:
        if not self.dn:
            raise ValueError("empty distinguished name")
        if len(self.dn.encode()) > MAX_DN_BYTES:
            raise ValueError(f"distinguished name exceeds {MAX_DN_BYTES} bytes")
        if any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in self.dn):
            raise ValueError("distinguished name contains control characters")

    def encode(self) -> bytes:
        return self.dn.encode()


@dataclass(frozen=True, slots=True)
class SystemParams:
    """Public domain state: curve profile, KGC public point, domain name."""

    curve: CurveParams
    p0: Point
    domain_id: str

    def __post_init__(self) -> None:
        if self.p0.is_identity or not is_on_curve(self.p0, self.curve):
            raise InvalidPointError("domain public point must be on-curve and not O")
        if not self.domain_id:
            raise ValueError("empty domain_id")


@dataclass(frozen=True, slots=True)
class MasterKey:
    s: Scalar

    def __post_init__(self) -> None:
        if self.s.is_zero:
            raise ValueError("master key must be nonzero")


@dataclass(frozen=True, slots=True)
class PublicRecord:
    """Everything a peer needs to know about one principal."""

    id: Identity
    p_pub: Point
    r_point: Point
    domain_id: str

    def __post_init__(self) -> None:
        if self.p_pub.is_identity or self.r_point.is_identity:
            raise InvalidPointError("public record points must not be O")


@dataclass(frozen=True, slots=True)
class PartialPrivateKey:
    r_point: Point
    d: Scalar


@dataclass(frozen=True, slots=True)
class FullPrivateKey:
    x: Scalar
    partial: PartialPrivateKey
    record: PublicRecord


def identity_binding(
    params: SystemParams, id: Identity, r_point: Point, p_pub: Point
) -> Scalar:
    """Q = H1(ID, R, P_pub): the scalar binding a partial key to its owner."""
    curve = params.curve
    return hash_to_scalar(
        HASH_TAG_H1,
        [id.encode(), encode_point(r_point, curve), encode_point(p_pub, curve)],
        curve,
    )


def setup(curve_id: str, domain_id: str, rng) -> tuple[SystemParams, MasterKey]:
    """Create a fresh KGC domain: master scalar s and public P0 = s*P."""
    curve = get_curve(curve_id)
    s = random_scalar(rng, curve)
    p0 = scalar_mul(s, curve.gen, curve)
    return SystemParams(curve=curve, p0=p0, domain_id=domain_id), MasterKey(s=s)


def set_secret_value(rng, params: SystemParams) -> Scalar:
    """The principal's own secret x, uniform in [1, q)."""
    return random_scalar(rng, params.curve)


def set_public_key(x: Scalar, params: SystemParams) -> Point:
    """P_pub = x*P."""
    return scalar_mul(x, params.curve.gen, params.curve)


def extract_partial_private_key(
    mk: MasterKey, params: SystemParams, id: Identity, p_pub: Point, rng
) -> PartialPrivateKey:
    """KGC side: issue (R, D) for an already-chosen public key.

    The fresh r is dropped on return; reconstructing it from (R, D) would
    require solving a discrete log.
    """
    curve = params.curve
    if p_pub.is_identity or not is_on_curve(p_pub, curve):
        raise InvalidPointError("public key must be on-curve and not O")
    r = random_scalar(rng, curve)
    r_point = scalar_mul(r, curve.gen, curve)
    q_bind = identity_binding(params, id, r_point, p_pub)
    d = r + mk.s * q_bind
    return PartialPrivateKey(r_point=r_point, d=d)


def verify_partial_private_key(
    params: SystemParams, id: Identity, p_pub: Point, ppk: PartialPrivateKey
) -> bool:
    """Check D*P == R + Q*P0.  False (never raises) on malformed inputs."""
    curve = params.curve
    try:
        if p_pub.is_identity or ppk.r_point.is_identity:
            return False
        q_bind = identity_binding(params, id, ppk.r_point, p_pub)
        lhs = scalar_mul(ppk.d, curve.gen, curve)
        rhs = point_add(
            ppk.r_point, scalar_mul(q_bind, params.p0, curve), curve
        )
    except (InvalidPointError, ValueError):
        return False
    return lhs == rhs


def set_private_key(
    params: SystemParams, x: Scalar, ppk: PartialPrivateKey, record: PublicRecord
) -> FullPrivateKey:
    """Assemble the full private key, refusing mismatched pieces."""
    curve = params.curve
    if scalar_mul(x, curve.gen, curve) != record.p_pub:
        raise InconsistentKeyError("secret value does not match public key")
    if ppk.r_point != record.r_point:
        raise InconsistentKeyError("partial key R differs from public record")
    if record.domain_id != params.domain_id:
        raise InconsistentKeyError("public record belongs to another domain")
    if not verify_partial_private_key(params, record.id, record.p_pub, ppk):
        raise InconsistentKeyError("partial private key fails verification")
    return FullPrivateKey(x=x, partial=ppk, record=record)
