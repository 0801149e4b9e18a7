"""Line-oriented text files for key material and domain trust anchors.

All files share one shape: UTF-8, LF line endings, one ``key = value`` pair
per line, and a leading ``version = 1`` line.  Point and scalar values are
lower-case hex of their canonical encodings.

keystore (a principal's full private key)::

    version = 1
    curve = P256
    domain = grid-a
    id = /grid/a/up1
    x = <hex scalar>
    R = <hex point>
    D = <hex scalar>
    Ppub = <hex point>

trust file (a domain anchor, the pinned KGC public point)::

    version = 1
    curve = P256
    domain = grid-a
    P0 = <hex point>

master file (KGC-side secret; same shape, key ``s``).

Writes go through a temp file plus rename, so a reader never observes a
torn file.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .curves import (
    PointDecodeError,
    Scalar,
    decode_point,
    encode_point,
    get_curve,
    scalar_mul,
)
from .keys import (
    FullPrivateKey,
    Identity,
    InconsistentKeyError,
    MasterKey,
    PartialPrivateKey,
    PublicRecord,
    SystemParams,
    verify_partial_private_key,
)

FORMAT_VERSION = "1"


class KeystoreError(ValueError):
    """Base for unreadable key files."""


class KeystoreVersionError(KeystoreError):
    """File carries an unsupported version."""


class KeystoreFormatError(KeystoreError):
    """File is structurally malformed (lines, keys, hex)."""


def _render(pairs: list[tuple[str, str]]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in pairs)


def _parse(text: str, expected_keys: tuple[str, ...], path: object) -> dict[str, str]:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line:
            continue
        if " = " not in line:
            raise KeystoreFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split(" = ", 1)
        if key in fields:
            raise KeystoreFormatError(f"{path}:{lineno}: duplicate key {key!r}")
        fields[key] = value
    if "version" not in fields:
        raise KeystoreFormatError(f"{path}: missing version line")
    if not text.startswith("version = "):
        raise KeystoreFormatError(f"{path}: version line must come first")
    if fields["version"] != FORMAT_VERSION:
        raise KeystoreVersionError(
            f"{path}: unsupported version {fields['version']!r}"
        )
    missing = [key for key in expected_keys if key not in fields]
    extra = [key for key in fields if key not in expected_keys]
    if missing or extra:
        raise KeystoreFormatError(
            f"{path}: wrong field set (missing {missing}, unexpected {extra})"
        )
    return fields


def _scalar_from_hex(value: str, q: int, what: str, path: object) -> Scalar:
    width = (q.bit_length() + 7) // 8
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise KeystoreFormatError(f"{path}: {what} is not valid hex") from None
    if len(raw) != width or value != value.lower():
        raise KeystoreFormatError(f"{path}: {what} is not a canonical scalar encoding")
    n = int.from_bytes(raw, "big")
    if n >= q:
        raise KeystoreFormatError(f"{path}: {what} out of scalar range")
    return Scalar(n, q)


def _point_from_hex(value: str, curve, what: str, path: object):
    try:
        raw = bytes.fromhex(value)
    except ValueError:
        raise KeystoreFormatError(f"{path}: {what} is not valid hex") from None
    if value != value.lower():
        raise KeystoreFormatError(f"{path}: {what} must be lower-case hex")
    try:
        return decode_point(raw, curve)
    except PointDecodeError as exc:
        raise KeystoreFormatError(f"{path}: {what}: {exc}") from None


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


KEYSTORE_KEYS = ("version", "curve", "domain", "id", "x", "R", "D", "Ppub")
TRUST_KEYS = ("version", "curve", "domain", "P0")
MASTER_KEYS = ("version", "curve", "domain", "s")


def render_keystore(keys: FullPrivateKey, curve) -> str:
    rec = keys.record
    return _render(
        [
            ("version", FORMAT_VERSION),
            ("curve", curve.curve_id),
            ("domain", rec.domain_id),
            ("id", rec.id.dn),
            ("x", keys.x.to_bytes().hex()),
            ("R", encode_point(keys.partial.r_point, curve).hex()),
            ("D", keys.partial.d.to_bytes().hex()),
            ("Ppub", encode_point(rec.p_pub, curve).hex()),
        ]
    )


def keystore_store(path: Path, keys: FullPrivateKey, curve) -> None:
    atomic_write_text(Path(path), render_keystore(keys, curve))


def keystore_load(path: Path, params: SystemParams | None = None) -> FullPrivateKey:
    """Load and validate a keystore.

    Always enforces x*P == Ppub; when the domain's SystemParams are supplied
    (the pinned P0), additionally verifies the partial key against it.
    """
    path = Path(path)
    fields = _parse(path.read_text(encoding="utf-8"), KEYSTORE_KEYS, path)
    curve = get_curve(fields["curve"])
    x = _scalar_from_hex(fields["x"], curve.q, "x", path)
    d = _scalar_from_hex(fields["D"], curve.q, "D", path)
    r_point = _point_from_hex(fields["R"], curve, "R", path)
    p_pub = _point_from_hex(fields["Ppub"], curve, "Ppub", path)
    record = PublicRecord(
        id=Identity(fields["id"]),
        p_pub=p_pub,
        r_point=r_point,
        domain_id=fields["domain"],
    )
    if scalar_mul(x, curve.gen, curve) != p_pub:
        raise InconsistentKeyError(f"{path}: x does not match Ppub")
    ppk = PartialPrivateKey(r_point=r_point, d=d)
    if params is not None:
        if params.curve != curve or params.domain_id != record.domain_id:
            raise InconsistentKeyError(f"{path}: keystore is for another domain")
        if not verify_partial_private_key(params, record.id, p_pub, ppk):
            raise InconsistentKeyError(f"{path}: partial key fails verification")
    return FullPrivateKey(x=x, partial=ppk, record=record)


def render_trust(params: SystemParams) -> str:
    return _render(
        [
            ("version", FORMAT_VERSION),
            ("curve", params.curve.curve_id),
            ("domain", params.domain_id),
            ("P0", encode_point(params.p0, params.curve).hex()),
        ]
    )


def trust_store(path: Path, params: SystemParams) -> None:
    atomic_write_text(Path(path), render_trust(params))


def trust_load(path: Path) -> SystemParams:
    path = Path(path)
    fields = _parse(path.read_text(encoding="utf-8"), TRUST_KEYS, path)
    curve = get_curve(fields["curve"])
    p0 = _point_from_hex(fields["P0"], curve, "P0", path)
    return SystemParams(curve=curve, p0=p0, domain_id=fields["domain"])


def master_store(path: Path, params: SystemParams, mk: MasterKey) -> None:
    text = _render(
        [
            ("version", FORMAT_VERSION),
            ("curve", params.curve.curve_id),
            ("domain", params.domain_id),
            ("s", mk.s.to_bytes().hex()),
        ]
    )
    atomic_write_text(Path(path), text)


def master_load(path: Path) -> tuple[SystemParams, MasterKey]:
    path = Path(path)
    fields = _parse(path.read_text(encoding="utf-8"), MASTER_KEYS, path)
    curve = get_curve(fields["curve"])
    s = _scalar_from_hex(fields["s"], curve.q, "s", path)
    if s.is_zero:
        raise KeystoreFormatError(f"{path}: master scalar must be nonzero")
    p0 = scalar_mul(s, curve.gen, curve)
    return SystemParams(curve=curve, p0=p0, domain_id=fields["domain"]), MasterKey(s=s)
