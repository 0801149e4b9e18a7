"""`gpca` command line: one binary for the KGC, clients, and the lab.

Subcommands: kgc, register, listen, connect, trust-import, bench, spdl,
security-report.  Configuration comes from --config (or $GPCA_CONFIG),
with individual flags overriding file values.  --seed switches every
randomness source to a deterministic stream and exists for tests only.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from pathlib import Path

from . import bench, spdl
from .attributes import run_security_report
from .keys import Identity, setup
from .keystore import keystore_load, master_load, master_store, trust_load
from .service import (
    DomainRegistry,
    HandshakeListener,
    ServiceConfig,
    export_trust,
    handshake_connect,
    kgc_serve,
    load_config,
    load_registry,
    register_client,
    trust_import,
)

logger = logging.getLogger("gpcaka.cli")


def _make_rng(seed: int | None):
    if seed is None:
        return random.SystemRandom()
    logger.warning("deterministic --seed %d in use; test mode only", seed)
    return random.Random(seed)


def _resolve_config(args) -> ServiceConfig:
    path = args.config or os.environ.get("GPCA_CONFIG")
    cfg = load_config(Path(path)) if path else ServiceConfig()
    cfg = cfg.with_overrides(
        curve=args.curve,
        keystore=Path(args.keystore) if args.keystore else None,
        domain=getattr(args, "domain", None),
        listen=getattr(args, "listen", None),
        kgc=getattr(args, "kgc", None),
    )
    if getattr(args, "confirm", False):
        cfg = cfg.with_overrides(confirm=True)
    return cfg


def cmd_kgc(args) -> int:
    cfg = _resolve_config(args)
    master_path = Path(cfg.master)
    if master_path.exists():
        params, mk = master_load(master_path)
        if params.domain_id != cfg.domain or params.curve.curve_id != cfg.curve:
            print(
                f"error: master file {master_path} is for "
                f"{params.domain_id}/{params.curve.curve_id}",
                file=sys.stderr,
            )
            return 2
    else:
        params, mk = setup(cfg.curve, cfg.domain, _make_rng(args.seed))
        master_store(master_path, params, mk)
        print(f"generated master key for domain {cfg.domain!r} -> {master_path}")
    trust_path = export_trust(params, cfg.trust_dir)
    print(f"trust anchor exported -> {trust_path}")
    if args.export_trust:
        export_path = Path(args.export_trust)
        export_path.parent.mkdir(parents=True, exist_ok=True)
        export_path.write_text(trust_path.read_text())
        print(f"trust anchor copied -> {export_path}")
    server = kgc_serve(cfg, params, mk)
    print(f"KGC {cfg.domain!r} listening on {server.address} (Ctrl-C to stop)")
    try:
        server._thread.join()
    except KeyboardInterrupt:
        print("shutting down")
        server.stop()
    return 0


def cmd_register(args) -> int:
    cfg = _resolve_config(args)
    keys = register_client(cfg, Identity(args.id), _make_rng(args.seed))
    print(f"registered {keys.record.id.dn!r} in domain {cfg.domain!r}")
    print(f"keystore written -> {cfg.keystore}")
    return 0


def cmd_listen(args) -> int:
    cfg = _resolve_config(args)
    registry = load_registry(cfg)
    keys = keystore_load(cfg.keystore, registry.get(cfg.domain))
    with HandshakeListener(cfg, keys, registry) as listener:
        print(f"listening on {listener.address} as {keys.record.id.dn!r}")
        while True:
            key, transcript = listener.accept_one(rng=_make_rng(args.seed))
            print(
                f"handshake complete: transcript={key.transcript_hash.hex()} "
                f"frames={len(transcript)}"
            )
            if args.show_key:
                print(f"session key: {key.key.hex()}")
            if args.once:
                return 0


def cmd_connect(args) -> int:
    cfg = _resolve_config(args)
    registry = load_registry(cfg)
    keys = keystore_load(cfg.keystore, registry.get(cfg.domain))
    key, transcript = handshake_connect(
        cfg,
        keys,
        args.peer,
        peer_domain=args.peer_domain,
        registry=registry,
        rng=_make_rng(args.seed),
    )
    print(
        f"handshake complete: transcript={key.transcript_hash.hex()} "
        f"frames={len(transcript)}"
    )
    if args.show_key:
        print(f"session key: {key.key.hex()}")
    return 0


def cmd_trust_import(args) -> int:
    cfg = _resolve_config(args)
    registry = load_registry(cfg)
    imported = trust_load(Path(args.file))
    trust_import(registry, Path(args.file))
    dest = export_trust(imported, cfg.trust_dir)
    print(f"imported domain {imported.domain_id!r} -> {dest}")
    return 0


def cmd_bench(args) -> int:
    report = bench.bench_handshake(
        args.curve or "P256", args.runs, rng=_make_rng(args.seed), threads=args.threads
    )
    if args.json:
        print(json.dumps(report.to_json()))
    else:
        print(bench.render_report(report, bench.reference_table()))
    return 0


def cmd_spdl(args) -> int:
    text = spdl.emit_spdl()
    if args.output:
        Path(args.output).write_bytes(text.encode())
        print(f"SPDL model written -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_security_report(args) -> int:
    verdicts = run_security_report()
    if args.json:
        for verdict in verdicts:
            print(json.dumps(verdict.to_json()))
    else:
        print(f"{'protocol':<18} {'attribute':<22} {'holds':<6} kind")
        for verdict in verdicts:
            print(
                f"{verdict.protocol:<18} {verdict.attribute:<22} "
                f"{str(verdict.holds):<6} {verdict.kind}"
            )
    failing = [v for v in verdicts if v.protocol == "gpc_aka" and not v.holds]
    return 1 if failing else 0


def _add_common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # present on the main parser and on every subcommand; SUPPRESS keeps a
    # subcommand from clobbering a value given before the subcommand name
    kwargs = {"default": argparse.SUPPRESS} if suppress else {"default": None}
    parser.add_argument("--config", help="config file (fallback: $GPCA_CONFIG)", **kwargs)
    parser.add_argument("--curve", help="curve profile id (TOY17 or P256)", **kwargs)
    parser.add_argument("--keystore", help="keystore path override", **kwargs)
    parser.add_argument(
        "--seed", type=int, help="deterministic RNG seed (tests only)", **kwargs
    )
    parser.add_argument(
        "--log-level", help="logging level (debug/info/warning/error)", **kwargs
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpca",
        description="certificateless authenticated key agreement tools",
    )
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        _add_common(p, suppress=True)
        return p

    p = add_parser("kgc", help="run the key generation center daemon")
    p.add_argument("--domain", help="trust domain id")
    p.add_argument("--listen", help="host:port to serve on")
    p.add_argument("--export-trust", help="also copy the trust anchor to this path")
    p.set_defaults(func=cmd_kgc)

    p = add_parser("register", help="register an identity with the KGC")
    p.add_argument("--id", required=True, help="distinguished name to register")
    p.add_argument("--domain", help="trust domain id")
    p.add_argument("--kgc", help="KGC address host:port")
    p.set_defaults(func=cmd_register)

    p = add_parser("listen", help="answer inbound handshakes")
    p.add_argument("--domain", help="trust domain id")
    p.add_argument("--listen", help="host:port to listen on")
    p.add_argument("--once", action="store_true", help="exit after one handshake")
    p.add_argument("--show-key", action="store_true", help="print the session key")
    p.add_argument("--confirm", action="store_true", help="require key confirmation")
    p.set_defaults(func=cmd_listen)

    p = add_parser("connect", help="initiate a handshake")
    p.add_argument("--peer", required=True, help="peer address host:port")
    p.add_argument(
        "--peer-domain",
        help="peer domain id, or a DN routed via dn_rule prefixes (default: own domain)",
    )
    p.add_argument("--domain", help="trust domain id")
    p.add_argument("--show-key", action="store_true", help="print the session key")
    p.add_argument("--confirm", action="store_true", help="require key confirmation")
    p.set_defaults(func=cmd_connect)

    p = add_parser("trust-import", help="pin another domain's trust anchor")
    p.add_argument("--file", required=True, help="trust file to import")
    p.set_defaults(func=cmd_trust_import)

    p = add_parser("bench", help="handshake micro-benchmark")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--threads", type=int, default=1, help="parallel runs (throughput)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = add_parser("spdl", help="emit the Scyther SPDL model")
    p.add_argument("-o", "--output", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_spdl)

    p = add_parser("security-report", help="attribute checks for both protocol models")
    p.add_argument("--json", action="store_true", help="JSON-lines output")
    p.set_defaults(func=cmd_security_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = (args.log_level or "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except (ValueError, LookupError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
