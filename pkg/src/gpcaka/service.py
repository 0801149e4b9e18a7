"""Deployable layer: KGC registration daemon, registration client, handshake
peers, domain registry with DN routing, and configuration.

Trust model
-----------
Clients never take a domain's public point P0 from the network.  Each host
keeps a directory of trust files (one per domain, written by ``trust_import``
or exported from a KGC) and pins (domain_id, P0) from there.  A registration
response whose P0 or domain differs from the pinned anchor is rejected
before any key material is persisted.

The transport is a plaintext TCP byte stream.  Registration responses carry
the partial private key D in the clear by the protocol's own definition, so
the daemon and client both log a loud warning; production deployments are
expected to wrap the registration channel in a secure transport of their
choosing.  Handshake traffic carries only public values.
"""

from __future__ import annotations

import logging
import random
import socket
import socketserver
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import wire
from .curves import is_on_curve
from .keys import (
    FullPrivateKey,
    Identity,
    MasterKey,
    PublicRecord,
    SystemParams,
    extract_partial_private_key,
    set_private_key,
    set_public_key,
    set_secret_value,
    verify_partial_private_key,
)
from .keystore import keystore_store, trust_load, trust_store
from .protocol import (
    Role,
    SessionKey,
    confirm_tag,
    session_complete,
    session_init,
)

logger = logging.getLogger("gpcaka.service")

Transcript = list[tuple[str, bytes]]


class UnknownDomainError(LookupError):
    """domain_id not present in the registry."""


class UnresolvableDnError(LookupError):
    """No DN routing rule matches."""


class DomainConflictError(ValueError):
    """Trust import clashes with an existing anchor for the same domain."""


class RegistrationError(ValueError):
    """KGC refused the registration or answered inconsistently."""

    def __init__(self, message: str, code: wire.ErrorCode | None = None):
        super().__init__(message)
        self.code = code


class RejectedPartialKeyError(RegistrationError):
    """The returned partial key fails verification against the pinned P0."""


class HandshakeError(ValueError):
    """Peer misbehaved during the handshake."""


class AuthenticationFailureError(HandshakeError):
    """Key-confirmation tags do not match."""


@dataclass
class DomainRegistry:
    """Known trust domains plus ordered DN-prefix routing rules."""

    entries: dict[str, SystemParams] = field(default_factory=dict)
    dn_rules: list[tuple[str, str]] = field(default_factory=list)

    def add_domain(self, params: SystemParams) -> None:
        existing = self.entries.get(params.domain_id)
        if existing is not None:
            if existing.p0 != params.p0 or existing.curve != params.curve:
                raise DomainConflictError(
                    f"domain {params.domain_id!r} already pinned with different parameters"
                )
            return  # idempotent re-import
        self.entries[params.domain_id] = params

    def add_rule(self, prefix: str, domain_id: str) -> None:
        if domain_id not in self.entries:
            raise UnknownDomainError(f"rule targets unknown domain {domain_id!r}")
        self.dn_rules.append((prefix, domain_id))

    def get(self, domain_id: str) -> SystemParams:
        try:
            return self.entries[domain_id]
        except KeyError:
            raise UnknownDomainError(f"unknown domain {domain_id!r}") from None


def dn_resolve(registry: DomainRegistry, dn: Identity) -> str:
    """First matching prefix rule wins."""
    for prefix, domain_id in registry.dn_rules:
        if dn.dn.startswith(prefix):
            return domain_id
    raise UnresolvableDnError(f"no routing rule matches {dn.dn!r}")


def trust_import(registry: DomainRegistry, path: Path) -> DomainRegistry:
    """Add a trust file's domain to the registry (conflict-checked)."""
    registry.add_domain(trust_load(path))
    return registry


@dataclass
class ServiceConfig:
    """Runtime configuration shared by the CLI entry points."""

    domain: str = "default"
    curve: str = "P256"
    listen: str = "127.0.0.1:7700"
    kgc: str = "127.0.0.1:7700"
    keystore: Path = Path("gpca.keys")
    master: Path = Path("gpca.master")
    trust_dir: Path = Path("trust")
    dn_rules: tuple[tuple[str, str], ...] = ()
    confirm: bool = False
    log_level: str = "info"

    def with_overrides(self, **kwargs) -> "ServiceConfig":
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates)


_CONFIG_PATHS = {"keystore", "master", "trust_dir"}


def load_config(path: Path) -> ServiceConfig:
    """Parse a ``key = value`` config file; ``dn_rule`` may repeat."""
    cfg = ServiceConfig()
    rules: list[tuple[str, str]] = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if " = " not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split(" = ", 1)
        if key == "dn_rule":
            if " -> " not in value:
                raise ValueError(f"{path}:{lineno}: dn_rule needs 'prefix -> domain'")
            prefix, domain_id = value.split(" -> ", 1)
            rules.append((prefix, domain_id))
        elif key == "confirm":
            cfg = replace(cfg, confirm=value.lower() in ("1", "true", "yes", "on"))
        elif key in _CONFIG_PATHS:
            cfg = replace(cfg, **{key: Path(value)})
        elif key in ("domain", "curve", "listen", "kgc", "log_level"):
            cfg = replace(cfg, **{key: value})
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return replace(cfg, dn_rules=tuple(rules))


def load_registry(cfg: ServiceConfig, extra: SystemParams | None = None) -> DomainRegistry:
    """Registry from every ``*.trust`` file under cfg.trust_dir plus rules."""
    registry = DomainRegistry()
    if extra is not None:
        registry.add_domain(extra)
    trust_dir = Path(cfg.trust_dir)
    if trust_dir.is_dir():
        for path in sorted(trust_dir.glob("*.trust")):
            trust_import(registry, path)
    for prefix, domain_id in cfg.dn_rules:
        registry.add_rule(prefix, domain_id)
    return registry


def parse_address(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be host:port, got {addr!r}")
    return host or "127.0.0.1", int(port)


def _send_frame(sock: socket.socket, frame: wire.WireFrame, transcript: Transcript) -> None:
    raw = wire.pack_frame(frame)
    sock.sendall(raw)
    transcript.append(("sent", raw))


def _recv_frame(sock: socket.socket, transcript: Transcript) -> wire.WireFrame:
    reader = sock.makefile("rb")
    try:
        header = reader.read(wire.HEADER.size)
        if len(header) != wire.HEADER.size:
            raise wire.FrameError("connection closed mid-header")
        _, _, _, length = wire.HEADER.unpack(header)
        if length > wire.MAX_PAYLOAD:
            raise wire.FrameError("declared payload exceeds 64 KiB limit")
        raw = header + reader.read(length)
    finally:
        reader.close()
    frame = wire.parse_frame(raw)
    transcript.append(("recv", raw))
    return frame


def _raise_if_error(frame: wire.WireFrame) -> wire.WireFrame:
    if frame.msg_type is wire.MsgType.ERROR:
        code, message = wire.decode_error(frame.payload)
        raise HandshakeError(f"peer error {code.name}: {message}")
    return frame


# ---------------------------------------------------------------------------
# KGC registration daemon


class _KgcHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        server: KgcServer = self.server  # type: ignore[assignment]
        while True:
            try:
                frame = wire.read_frame(self.rfile)
            except wire.FrameError:
                return  # malformed traffic: close without a response
            try:
                response = server.process(frame)
            except wire.FrameError:
                return
            self.wfile.write(wire.pack_frame(response))
            self.wfile.flush()


class KgcServer(socketserver.ThreadingTCPServer):
    """Answers REGISTER_REQ frames; one thread per connection."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(
        self,
        params: SystemParams,
        mk: MasterKey,
        listen: str = "127.0.0.1:0",
        rng_factory=None,
    ):
        self.params = params
        self.master_key = mk
        self._rng_factory = rng_factory or random.SystemRandom
        self._dns: set[str] = set()
        self._dns_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        super().__init__(parse_address(listen), _KgcHandler)
        logger.warning(
            "KGC %s serving on plaintext TCP %s: registration responses carry "
            "partial private keys in the clear (dev transport)",
            params.domain_id,
            self.address,
        )

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def process(self, frame: wire.WireFrame) -> wire.WireFrame:
        """Pure request processing; shared by the socket loop and tests."""
        if frame.msg_type is not wire.MsgType.REGISTER_REQ:
            return wire.encode_error(wire.ErrorCode.BAD_REQUEST, "expected REGISTER_REQ")
        curve = self.params.curve
        try:
            id, p_pub = wire.decode_register_req(frame.payload, curve)
        except wire.FrameError as exc:
            if "Ppub" in str(exc):
                return wire.encode_error(wire.ErrorCode.INVALID_POINT, str(exc))
            return wire.encode_error(wire.ErrorCode.BAD_REQUEST, str(exc))
        if p_pub.is_identity or not is_on_curve(p_pub, curve):
            return wire.encode_error(wire.ErrorCode.INVALID_POINT, "Ppub rejected")
        with self._dns_lock:
            if id.dn in self._dns:
                return wire.encode_error(
                    wire.ErrorCode.DUPLICATE_DN, f"{id.dn!r} already registered"
                )
            self._dns.add(id.dn)
        try:
            ppk = extract_partial_private_key(
                self.master_key, self.params, id, p_pub, self._rng_factory()
            )
        except Exception:
            with self._dns_lock:
                self._dns.discard(id.dn)
            raise
        return wire.encode_register_resp(ppk, self.params)

    def start(self) -> str:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self.address

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "KgcServer":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def kgc_serve(cfg: ServiceConfig, params: SystemParams, mk: MasterKey) -> KgcServer:
    """Build and start the daemon for the CLI; caller owns shutdown."""
    server = KgcServer(params, mk, listen=cfg.listen)
    server.start()
    return server


def register_client(
    cfg: ServiceConfig,
    id: Identity,
    rng,
    registry: DomainRegistry | None = None,
) -> FullPrivateKey:
    """Generate (x, P_pub), register with the KGC, verify, persist, return.

    The response is checked against the locally pinned (domain, P0); any
    mismatch or verification failure aborts with nothing persisted.
    Network failures (OSError, timeouts) propagate as-is.
    """
    registry = registry if registry is not None else load_registry(cfg)
    pinned = registry.get(cfg.domain)
    curve = pinned.curve
    if curve.curve_id != cfg.curve:
        raise RegistrationError(
            f"pinned domain uses {curve.curve_id}, config says {cfg.curve}"
        )
    x = set_secret_value(rng, pinned)
    p_pub = set_public_key(x, pinned)
    logger.warning("registering %s over plaintext TCP (dev transport)", id.dn)
    transcript: Transcript = []
    with socket.create_connection(parse_address(cfg.kgc), timeout=10) as sock:
        _send_frame(sock, wire.encode_register_req(id, p_pub, curve), transcript)
        frame = _recv_frame(sock, transcript)
    if frame.msg_type is wire.MsgType.ERROR:
        code, message = wire.decode_error(frame.payload)
        raise RegistrationError(f"KGC refused: {message}", code=code)
    if frame.msg_type is not wire.MsgType.REGISTER_RESP:
        raise RegistrationError(f"unexpected response {frame.msg_type.name}")
    ppk, p0, domain_id = wire.decode_register_resp(frame.payload, curve)
    if domain_id != pinned.domain_id or p0 != pinned.p0:
        raise RegistrationError("response does not match pinned trust anchor")
    if not verify_partial_private_key(pinned, id, p_pub, ppk):
        raise RejectedPartialKeyError("partial key fails verification; discarding")
    record = PublicRecord(id=id, p_pub=p_pub, r_point=ppk.r_point, domain_id=domain_id)
    keys = set_private_key(pinned, x, ppk, record)
    keystore_store(cfg.keystore, keys, curve)
    return keys


# ---------------------------------------------------------------------------
# Handshake peers


def resolve_peer_domain(
    registry: DomainRegistry, own_domain: str, peer_hint: str | None
) -> SystemParams:
    """Map a peer hint (domain_id, DN starting with '/', or None) to params."""
    if peer_hint is None:
        domain_id = own_domain
    elif peer_hint.startswith("/"):
        domain_id = dn_resolve(registry, Identity(peer_hint))
    else:
        domain_id = peer_hint
    return registry.get(domain_id)


def initiator_start(keys: FullPrivateKey, params: SystemParams, rng):
    """Build the HS_INIT frame; returns (session state, frame)."""
    st, msg = session_init(Role.INITIATOR, keys, params, rng)
    return st, wire.encode_handshake(msg, params.curve, wire.MsgType.HS_INIT)


def responder_handle_init(
    frame: wire.WireFrame,
    keys: FullPrivateKey,
    own_params: SystemParams,
    registry: DomainRegistry,
    rng,
) -> tuple[wire.WireFrame, SessionKey]:
    """Process HS_INIT, answer HS_RESP, derive the key.  Raises on anything
    invalid; the socket wrapper turns raises into an ERROR frame."""
    if frame.msg_type is not wire.MsgType.HS_INIT:
        raise HandshakeError(f"expected HS_INIT, got {frame.msg_type.name}")
    peer_msg = wire.decode_handshake(frame.payload, own_params.curve)
    peer_params = registry.get(peer_msg.domain_id)
    st, own_msg = session_init(Role.RESPONDER, keys, own_params, rng)
    key = session_complete(st, peer_msg, peer_params)
    return wire.encode_handshake(own_msg, own_params.curve, wire.MsgType.HS_RESP), key


def initiator_finish(st, frame: wire.WireFrame, peer_params: SystemParams) -> SessionKey:
    """Process HS_RESP against the expected peer domain."""
    _raise_if_error(frame)
    if frame.msg_type is not wire.MsgType.HS_RESP:
        raise HandshakeError(f"expected HS_RESP, got {frame.msg_type.name}")
    peer_msg = wire.decode_handshake(frame.payload, peer_params.curve)
    if peer_msg.domain_id != peer_params.domain_id:
        raise HandshakeError(
            f"peer claims domain {peer_msg.domain_id!r}, expected {peer_params.domain_id!r}"
        )
    return session_complete(st, peer_msg, peer_params)


class HandshakeListener:
    """Accepts one handshake per call; used by `gpca listen` and the tests."""

    def __init__(
        self,
        cfg: ServiceConfig,
        keys: FullPrivateKey,
        registry: DomainRegistry | None = None,
    ):
        self.cfg = cfg
        self.keys = keys
        self.registry = registry if registry is not None else load_registry(cfg)
        self.own_params = self.registry.get(cfg.domain)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind(parse_address(cfg.listen))
        self._sock.listen(4)

    @property
    def address(self) -> str:
        host, port = self._sock.getsockname()[:2]
        return f"{host}:{port}"

    def accept_one(self, rng=None, timeout: float | None = 30) -> tuple[SessionKey, Transcript]:
        rng = rng or random.SystemRandom()
        self._sock.settimeout(timeout)
        conn, _ = self._sock.accept()
        transcript: Transcript = []
        with conn:
            conn.settimeout(timeout)
            try:
                frame = _recv_frame(conn, transcript)
                resp, key = responder_handle_init(
                    frame, self.keys, self.own_params, self.registry, rng
                )
            except (wire.FrameError, HandshakeError, UnknownDomainError, ValueError) as exc:
                code = (
                    wire.ErrorCode.UNKNOWN_DOMAIN
                    if isinstance(exc, UnknownDomainError)
                    else wire.ErrorCode.INVALID_POINT
                )
                _send_frame(conn, wire.encode_error(code, str(exc)), transcript)
                raise HandshakeError(f"handshake rejected: {exc}") from exc
            _send_frame(conn, resp, transcript)
            if self.cfg.confirm:
                tag_frame = _raise_if_error(_recv_frame(conn, transcript))
                if tag_frame.msg_type is not wire.MsgType.CONFIRM:
                    raise HandshakeError("expected CONFIRM")
                expected = confirm_tag(key, Role.INITIATOR)
                if wire.decode_confirm(tag_frame.payload) != expected:
                    _send_frame(
                        conn,
                        wire.encode_error(wire.ErrorCode.CONFIRM_MISMATCH, "bad tag"),
                        transcript,
                    )
                    raise AuthenticationFailureError("initiator confirm tag mismatch")
                _send_frame(
                    conn, wire.encode_confirm(confirm_tag(key, Role.RESPONDER)), transcript
                )
        return key, transcript

    def close(self) -> None:
        self._sock.close()

    def __enter__(self) -> "HandshakeListener":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def handshake_listen(
    cfg: ServiceConfig,
    keys: FullPrivateKey,
    registry: DomainRegistry | None = None,
    rng=None,
) -> tuple[SessionKey, Transcript]:
    """Wait for one inbound handshake and return the agreed key."""
    with HandshakeListener(cfg, keys, registry) as listener:
        return listener.accept_one(rng=rng)


def handshake_connect(
    cfg: ServiceConfig,
    keys: FullPrivateKey,
    peer_addr: str,
    peer_domain: str | None = None,
    registry: DomainRegistry | None = None,
    rng=None,
) -> tuple[SessionKey, Transcript]:
    """Run the initiator side against peer_addr.

    peer_domain may be a domain_id, a DN (routed through the registry's
    prefix rules), or None for the own domain.  The peer's domain must be
    resolvable before anything is sent.
    """
    rng = rng or random.SystemRandom()
    registry = registry if registry is not None else load_registry(cfg)
    own_params = registry.get(cfg.domain)
    peer_params = resolve_peer_domain(registry, cfg.domain, peer_domain)
    if peer_params.curve != own_params.curve:
        raise HandshakeError("peer domain uses a different curve")
    st, init_frame = initiator_start(keys, own_params, rng)
    transcript: Transcript = []
    with socket.create_connection(parse_address(peer_addr), timeout=30) as sock:
        _send_frame(sock, init_frame, transcript)
        key = initiator_finish(st, _recv_frame(sock, transcript), peer_params)
        if cfg.confirm:
            _send_frame(sock, wire.encode_confirm(confirm_tag(key, Role.INITIATOR)), transcript)
            tag_frame = _raise_if_error(_recv_frame(sock, transcript))
            if tag_frame.msg_type is not wire.MsgType.CONFIRM:
                raise HandshakeError("expected CONFIRM")
            if wire.decode_confirm(tag_frame.payload) != confirm_tag(key, Role.RESPONDER):
                raise AuthenticationFailureError("responder confirm tag mismatch")
    return key, transcript


def export_trust(params: SystemParams, trust_dir: Path) -> Path:
    """Write the domain's trust anchor into a trust directory."""
    trust_dir = Path(trust_dir)
    trust_dir.mkdir(parents=True, exist_ok=True)
    path = trust_dir / f"{params.domain_id}.trust"
    if path.exists():
        trust_import(DomainRegistry(entries={params.domain_id: params}), path)
    trust_store(path, params)
    return path
