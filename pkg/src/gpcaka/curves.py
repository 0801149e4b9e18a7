"""Prime-field elliptic curve arithmetic for the key agreement stack.

Short Weierstrass curves y^2 = x^3 + ax + b over F_p, restricted to the two
fixed profiles the rest of the package uses:

``TOY17``
    y^2 = x^3 + 2x + 2 over F_17, generator (5, 1), group order 19.  Small
    enough that every brute-force oracle (repeated addition, exhaustive
    group-law checks, discrete logs) is practical.  Not constant time, not
    secure, test-only.

``P256``
    The NIST P-256 parameters (FIPS 186).  Used for realistic runs.  Scalar
    multiplication uses Jacobian coordinates internally so a full handshake
    stays in the low-millisecond range in pure Python; constant-time
    execution is a goal, not a tested guarantee.

Points are immutable affine values (the identity is ``Point(None, None)``),
scalars are immutable elements of Z_q, and all operations are pure
functions, so everything here is safe to share between threads.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Optional, Sequence


class UnknownCurveError(LookupError):
    """Requested curve_id is not in the registry."""


class InvalidPointError(ValueError):
    """A point fails the curve equation (or is the identity where forbidden)."""


class PointDecodeError(ValueError):
    """A byte string is not a canonical point encoding."""


@dataclass(frozen=True, slots=True)
class Point:
    """Affine curve point; ``Point(None, None)`` is the identity O."""

    x: Optional[int]
    y: Optional[int]

    @property
    def is_identity(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        if self.is_identity:
            return "Point(O)"
        return f"Point({self.x:#x}, {self.y:#x})"


IDENTITY = Point(None, None)


@dataclass(frozen=True, slots=True)
class Scalar:
    """Element of Z_q.  Arithmetic is defined only between scalars of equal q."""

    value: int
    q: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.q:
            raise ValueError(f"scalar {self.value} out of range [0, {self.q})")

    def _same_field(self, other: "Scalar") -> None:
        if self.q != other.q:
            raise ValueError("scalars from different fields")

    def __add__(self, other: "Scalar") -> "Scalar":
        if not isinstance(other, Scalar):
            return NotImplemented
        self._same_field(other)
        return Scalar((self.value + other.value) % self.q, self.q)

    def __sub__(self, other: "Scalar") -> "Scalar":
        if not isinstance(other, Scalar):
            return NotImplemented
        self._same_field(other)
        return Scalar((self.value - other.value) % self.q, self.q)

    def __mul__(self, other: "Scalar") -> "Scalar":
        if not isinstance(other, Scalar):
            return NotImplemented
        self._same_field(other)
        return Scalar((self.value * other.value) % self.q, self.q)

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value % self.q, self.q)

    def inv(self) -> "Scalar":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar(pow(self.value, -1, self.q), self.q)

    @property
    def is_zero(self) -> bool:
        return self.value == 0

    def to_bytes(self) -> bytes:
        """Canonical encoding: fixed-width big-endian, width = byte length of q."""
        return self.value.to_bytes((self.q.bit_length() + 7) // 8, "big")


def _is_probable_prime(n: int, rounds: int = 32) -> bool:
    """Miller-Rabin with fixed small bases plus random ones."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    rng = random.Random(0xC0FFEE)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True, slots=True)
class CurveParams:
    """Domain parameters of one curve profile.

    Validated on construction: non-singular (4a^3 + 27b^2 != 0 mod p),
    generator on the curve, q probably prime, and q * gen == O.
    """

    curve_id: str
    p: int
    a: int
    b: int
    q: int
    gen: Point
    cofactor: int = 1

    def __post_init__(self) -> None:
        if (4 * self.a**3 + 27 * self.b**2) % self.p == 0:
            raise ValueError(f"{self.curve_id}: singular curve (zero discriminant)")
        if self.cofactor < 1:
            raise ValueError(f"{self.curve_id}: cofactor must be positive")
        if not _is_probable_prime(self.q):
            raise ValueError(f"{self.curve_id}: group order q is not prime")
        if not is_on_curve(self.gen, self) or self.gen.is_identity:
            raise ValueError(f"{self.curve_id}: generator not on curve")
        if not _scalar_mul_raw(self.q, self.gen, self).is_identity:
            raise ValueError(f"{self.curve_id}: q * gen != O")

    @property
    def point_width(self) -> int:
        """Byte width of an x coordinate in the compressed encoding."""
        return (self.p.bit_length() + 7) // 8

    def scalar(self, value: int) -> Scalar:
        return Scalar(value % self.q, self.q)


def is_on_curve(pt: Point, params: CurveParams) -> bool:
    """True iff pt is the identity or satisfies y^2 = x^3 + ax + b mod p."""
    if pt.is_identity:
        return True
    x, y = pt.x, pt.y
    if not (0 <= x < params.p and 0 <= y < params.p):
        return False
    return (y * y - (x * x * x + params.a * x + params.b)) % params.p == 0


def _require_on_curve(pt: Point, params: CurveParams) -> None:
    if not is_on_curve(pt, params):
        raise InvalidPointError(f"point {pt!r} not on curve {params.curve_id}")


def _affine_add(lhs: Point, rhs: Point, params: CurveParams) -> Point:
    p = params.p
    if lhs.is_identity:
        return rhs
    if rhs.is_identity:
        return lhs
    if lhs.x == rhs.x:
        if (lhs.y + rhs.y) % p == 0:
            return IDENTITY
        # doubling (y1 == y2 != 0 here, since y1 == -y2 was handled above)
        lam = (3 * lhs.x * lhs.x + params.a) * pow(2 * lhs.y, -1, p) % p
    else:
        lam = (rhs.y - lhs.y) * pow(rhs.x - lhs.x, -1, p) % p
    x3 = (lam * lam - lhs.x - rhs.x) % p
    y3 = (lam * (lhs.x - x3) - lhs.y) % p
    return Point(x3, y3)


def point_add(lhs: Point, rhs: Point, params: CurveParams) -> Point:
    """Chord-and-tangent sum of two validated points."""
    _require_on_curve(lhs, params)
    _require_on_curve(rhs, params)
    return _affine_add(lhs, rhs, params)


def point_neg(pt: Point, params: CurveParams) -> Point:
    _require_on_curve(pt, params)
    if pt.is_identity:
        return pt
    return Point(pt.x, -pt.y % params.p)


# Jacobian coordinates (X, Y, Z) with x = X/Z^2, y = Y/Z^3; identity has Z = 0.

def _jac_double(P, params):
    X1, Y1, Z1 = P
    p = params.p
    if Z1 == 0 or Y1 == 0:
        return (1, 1, 0)
    YY = Y1 * Y1 % p
    S = 4 * X1 * YY % p
    ZZ = Z1 * Z1 % p
    M = (3 * X1 * X1 + params.a * ZZ % p * ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y1 * Z1 % p
    return (X3, Y3, Z3)


def _jac_add(P, Q, params):
    p = params.p
    X1, Y1, Z1 = P
    X2, Y2, Z2 = Q
    if Z1 == 0:
        return Q
    if Z2 == 0:
        return P
    Z1_2 = Z1 * Z1 % p
    Z2_2 = Z2 * Z2 % p
    U1 = X1 * Z2_2 % p
    U2 = X2 * Z1_2 % p
    S1 = Y1 * Z2_2 % p * Z2 % p
    S2 = Y2 * Z1_2 % p * Z1 % p
    if U1 == U2:
        if S1 != S2:
            return (1, 1, 0)
        return _jac_double(P, params)
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    H2 = H * H % p
    H3 = H2 * H % p
    U1H2 = U1 * H2 % p
    X3 = (R * R - H3 - 2 * U1H2) % p
    Y3 = (R * (U1H2 - X3) - S1 * H3) % p
    Z3 = H * Z1 % p * Z2 % p
    return (X3, Y3, Z3)


def _jac_to_affine(P, params) -> Point:
    X, Y, Z = P
    if Z == 0:
        return IDENTITY
    p = params.p
    zinv = pow(Z, -1, p)
    zinv2 = zinv * zinv % p
    return Point(X * zinv2 % p, Y * zinv2 % p * zinv % p)


def _scalar_mul_raw(k: int, pt: Point, params: CurveParams) -> Point:
    """Double-and-add on the unreduced non-negative integer k."""
    if k == 0 or pt.is_identity:
        return IDENTITY
    base = (pt.x, pt.y, 1)
    acc = (1, 1, 0)
    for bit in bin(k)[2:]:
        acc = _jac_double(acc, params)
        if bit == "1":
            acc = _jac_add(acc, base, params)
    return _jac_to_affine(acc, params)


def scalar_mul(k: Scalar, pt: Point, params: CurveParams) -> Point:
    """k-fold sum of pt (double-and-add over Jacobian coordinates)."""
    if k.q != params.q:
        raise ValueError("scalar does not belong to this curve's field")
    _require_on_curve(pt, params)
    return _scalar_mul_raw(k.value, pt, params)


def _mod_sqrt(n: int, p: int) -> Optional[int]:
    """Tonelli-Shanks; None when n is a non-residue."""
    n %= p
    if n == 0:
        return 0
    if pow(n, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(n, (p + 1) // 4, p)
    # general case
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t = t * c % p
        r = r * b % p
    return r


TAG_IDENTITY = 0x00
TAG_EVEN = 0x02
TAG_ODD = 0x03


def encode_point(pt: Point, params: CurveParams) -> bytes:
    """Compressed encoding: 0x00 for O, else parity tag + fixed-width x."""
    if pt.is_identity:
        return bytes([TAG_IDENTITY])
    _require_on_curve(pt, params)
    tag = TAG_ODD if pt.y & 1 else TAG_EVEN
    return bytes([tag]) + pt.x.to_bytes(params.point_width, "big")


def decode_point(data: bytes, params: CurveParams) -> Point:
    """Inverse of encode_point; rejects anything that is not canonical."""
    if len(data) == 0:
        raise PointDecodeError("empty point encoding")
    tag = data[0]
    if tag == TAG_IDENTITY:
        if len(data) != 1:
            raise PointDecodeError("identity encoding must be a single byte")
        return IDENTITY
    if tag not in (TAG_EVEN, TAG_ODD):
        raise PointDecodeError(f"unknown point tag {tag:#04x}")
    if len(data) != 1 + params.point_width:
        raise PointDecodeError(
            f"expected {1 + params.point_width} bytes, got {len(data)}"
        )
    x = int.from_bytes(data[1:], "big")
    if x >= params.p:
        raise PointDecodeError("x coordinate out of field range")
    rhs = (x * x * x + params.a * x + params.b) % params.p
    y = _mod_sqrt(rhs, params.p)
    if y is None:
        raise PointDecodeError("x is not on the curve")
    want_odd = tag == TAG_ODD
    if y & 1 != want_odd:
        y = params.p - y
    if y & 1 != want_odd:
        # only possible for y == 0, where no odd representative exists
        raise PointDecodeError("no point with requested y parity")
    return Point(x, y)


# Domain-separation tags for every hash use in the stack.
HASH_TAG_H1 = 0x01  # identity binding Q = H1(ID, R, P_pub)
HASH_TAG_H2 = 0x02  # session key derivation
HASH_TAG_TRANSCRIPT = 0x03  # public transcript fingerprint
HASH_TAG_CONFIRM = 0x04  # optional key-confirmation tag

_MAX_CHUNK = 0xFFFF


def tagged_hash(tag: int, chunks: Sequence[bytes]) -> bytes:
    """SHA-256 over tag byte followed by length-prefixed chunks.

    Each chunk is framed as a 2-byte big-endian length plus the bytes, so
    distinct chunk boundaries always hash distinct preimages.
    """
    if not 0 <= tag <= 0xFF:
        raise ValueError("tag must be a single byte")
    h = hashlib.sha256()
    h.update(bytes([tag]))
    for chunk in chunks:
        if len(chunk) > _MAX_CHUNK:
            raise ValueError("chunk too long for 2-byte length prefix")
        h.update(len(chunk).to_bytes(2, "big"))
        h.update(chunk)
    return h.digest()


def hash_to_scalar(tag: int, chunks: Sequence[bytes], params: CurveParams) -> Scalar:
    """tagged_hash reduced into Z_q."""
    return Scalar(int.from_bytes(tagged_hash(tag, chunks), "big") % params.q, params.q)


def random_scalar(rng, params: CurveParams) -> Scalar:
    """Uniform scalar in [1, q); zero is excluded to avoid degenerate keys.

    ``rng`` is any object with ``randrange`` (``random.Random`` for seeded
    tests, ``random.SystemRandom`` for real key material).
    """
    return Scalar(rng.randrange(1, params.q), params.q)


TOY17 = CurveParams(
    curve_id="TOY17",
    p=17,
    a=2,
    b=2,
    q=19,
    gen=Point(5, 1),
    cofactor=1,
)

P256 = CurveParams(
    curve_id="P256",
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFC,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    q=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
    gen=Point(
        0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
        0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    ),
    cofactor=1,
)

CURVES = {c.curve_id: c for c in (TOY17, P256)}


def get_curve(curve_id: str) -> CurveParams:
    try:
        return CURVES[curve_id]
    except KeyError:
        raise UnknownCurveError(f"unknown curve {curve_id!r}") from None
