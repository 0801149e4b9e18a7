"""Executable security-attribute checks.

Seven standard key-agreement attributes are evaluated against two protocol
models:

``gpc_aka``
    The real protocol.  Resilience attributes (forward secrecy, KGC forward
    secrecy, KCI, UKS, ephemeral-leak) are checked symbolically: the
    adversary's knowledge per the attribute's compromise column is closed
    under the Dolev-Yao operations and the session-key point term
    (t_A + D_A + x_A)(t_B + D_B + x_B) * P must stay underivable, which is
    certified by one of its monomials never becoming reachable.  Known-key
    secrecy and key control run concrete traces on the toy curve.

``kgc_nonce_variant``
    A deliberately weakened model where a single KGC-chosen nonce t is the
    only fresh value: the session point is t * (P_A + P_B), handed to the
    parties out of band.  It reproduces the classic single-nonce failure
    pattern: the KGC can precompute every session key, two sessions with
    the same nonce share a key, and revealing either the nonce or the
    long-term secrets plus the public T = t*P surrenders the key.

Every verdict carries a replayable witness: derivation chains re-execute
concretely on the toy curve through the group API, trace witnesses rerun
from their recorded seeds, and absence witnesses rerun the deterministic
support saturation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .curves import (
    HASH_TAG_H2,
    TOY17,
    Point,
    Scalar,
    encode_point,
    point_add,
    scalar_mul,
    tagged_hash,
)
from .keys import Identity, SystemParams, identity_binding
from .symbolic import (
    Kind,
    KnowledgeSet,
    PolyItems,
    Term,
    adversary_closure,
    canonical_poly,
    const_term,
    derivation_chain,
    evaluate,
    evaluate_scalar,
    format_monomial,
    format_poly,
    knowledge_from_terms,
    parse_monomial,
    point_term,
    poly_mul,
    poly_support,
    reachable_monomials,
    replay,
    scalar_term,
)

ATTRIBUTES = (
    "known_key",
    "forward_secrecy",
    "kgc_forward_secrecy",
    "kci",
    "uks",
    "key_control",
    "ephemeral_leak",
)
PROTOCOLS = ("gpc_aka", "kgc_nonce_variant")

DEFAULT_DEPTH = 6


@dataclass(frozen=True)
class Verdict:
    attribute: str
    protocol: str
    holds: bool
    kind: str  # "absence" | "derivation" | "trace"
    witness: dict

    def to_json(self) -> dict:
        return {
            "attribute": self.attribute,
            "protocol": self.protocol,
            "holds": self.holds,
            "kind": self.kind,
            "witness": self.witness,
        }


# ---------------------------------------------------------------------------
# Concrete model instances (toy curve, fixed seeds, real hash values)


def _mine_identity(prefix: str, params: SystemParams, r_point: Point, p_pub: Point) -> tuple[Identity, int]:
    """First identity under `prefix` whose binding scalar is nonzero mod q."""
    for i in range(1000):
        cand = Identity(f"{prefix}{i}")
        q_bind = identity_binding(params, cand, r_point, p_pub)
        if not q_bind.is_zero:
            return cand, q_bind.value
    raise AssertionError("could not find identity with nonzero binding")


@dataclass(frozen=True)
class GpcAkaInstance:
    """Seeded toy-curve trace with its symbolic images."""

    params: SystemParams
    assignment: dict[str, int]
    id_a: Identity
    id_b: Identity
    q_a: int
    q_b: int
    key_term: Term
    transcript: tuple[Term, ...]
    d_a_term: Term
    d_b_term: Term

    @property
    def q(self) -> int:
        return self.params.curve.q


SYMBOLS = ("s", "xA", "rA", "tA", "xB", "rB", "tB")


@lru_cache(maxsize=None)
def gpc_aka_instance() -> GpcAkaInstance:
    curve = TOY17
    q = curve.q
    assignment = {"s": 7, "xA": 4, "rA": 3, "tA": 6, "xB": 2, "rB": 8, "tB": 5}
    p0 = scalar_mul(Scalar(assignment["s"], q), curve.gen, curve)
    params = SystemParams(curve=curve, p0=p0, domain_id="lab")

    def pt(sym: str) -> Point:
        return scalar_mul(Scalar(assignment[sym], q), curve.gen, curve)

    id_a, q_a = _mine_identity("/lab/up", params, pt("rA"), pt("xA"))
    id_b, q_b = _mine_identity("/lab/rp", params, pt("rB"), pt("xB"))

    side_a = canonical_poly({("tA",): 1, ("xA",): 1, ("rA",): 1, ("s",): q_a}, q)
    side_b = canonical_poly({("tB",): 1, ("xB",): 1, ("rB",): 1, ("s",): q_b}, q)
    key_poly = poly_mul(side_a, side_b, q)
    assert key_poly is not None

    transcript = (
        point_term({(): 1}, q),          # generator P
        point_term({("s",): 1}, q),      # P0
        point_term({("xA",): 1}, q),     # P_A
        point_term({("rA",): 1}, q),     # R_A
        point_term({("tA",): 1}, q),     # T_A
        point_term({("xB",): 1}, q),     # P_B
        point_term({("rB",): 1}, q),     # R_B
        point_term({("tB",): 1}, q),     # T_B
    )
    return GpcAkaInstance(
        params=params,
        assignment=assignment,
        id_a=id_a,
        id_b=id_b,
        q_a=q_a,
        q_b=q_b,
        key_term=Term(Kind.POINT, key_poly),
        transcript=transcript,
        d_a_term=scalar_term({("rA",): 1, ("s",): q_a}, q),
        d_b_term=scalar_term({("rB",): 1, ("s",): q_b}, q),
    )


VARIANT_SYMBOLS = ("s", "t", "xA", "xB")


@dataclass(frozen=True)
class VariantInstance:
    params: SystemParams
    assignment: dict[str, int]
    key_term: Term
    transcript: tuple[Term, ...]


@lru_cache(maxsize=None)
def variant_instance() -> VariantInstance:
    curve = TOY17
    q = curve.q
    assignment = {"s": 7, "t": 6, "xA": 4, "xB": 2}
    p0 = scalar_mul(Scalar(assignment["s"], q), curve.gen, curve)
    params = SystemParams(curve=curve, p0=p0, domain_id="lab-variant")
    transcript = (
        point_term({(): 1}, q),
        point_term({("s",): 1}, q),
        point_term({("xA",): 1}, q),
        point_term({("xB",): 1}, q),
        point_term({("t",): 1}, q),  # T = t*P, published by the KGC
    )
    key_poly = canonical_poly({("t", "xA"): 1, ("t", "xB"): 1}, q)
    return VariantInstance(
        params=params,
        assignment=assignment,
        key_term=Term(Kind.POINT, key_poly),
        transcript=transcript,
    )


@dataclass(frozen=True)
class VariantTrace:
    """One run of the single-nonce protocol."""

    id_a: Identity
    id_b: Identity
    x_a: Scalar
    x_b: Scalar
    nonce: Scalar
    t_point: Point
    session_point: Point
    key: bytes
    kgc_precomputed_key: bytes


def _variant_key(id_a: Identity, id_b: Identity, t_point: Point, session_point: Point) -> bytes:
    curve = TOY17
    return tagged_hash(
        HASH_TAG_H2,
        [
            id_a.encode(),
            id_b.encode(),
            encode_point(t_point, curve),
            encode_point(session_point, curve),
        ],
    )


def kgc_nonce_variant_trace(rng, forced_nonce: int | None = None) -> VariantTrace:
    """Run the weakened protocol once; the KGC's precomputation is recorded.

    The parties' long-term keys are fixed installation state; the KGC nonce
    is the only per-session freshness.  The precomputed key always equals
    the parties' key, and forcing the nonce replays the session.
    """
    curve = TOY17
    q = curve.q
    id_a, id_b = Identity("/lab/variant/up"), Identity("/lab/variant/rp")
    longterm = random.Random(500)
    x_a = Scalar(longterm.randrange(1, q), q)
    x_b = Scalar(longterm.randrange(1, q), q)
    nonce = Scalar(forced_nonce if forced_nonce is not None else rng.randrange(1, q), q)
    p_a = scalar_mul(x_a, curve.gen, curve)
    p_b = scalar_mul(x_b, curve.gen, curve)
    t_point = scalar_mul(nonce, curve.gen, curve)
    session_point = scalar_mul(nonce, point_add(p_a, p_b, curve), curve)
    # the KGC knows t, P_A and P_B before either party engages
    kgc_key = _variant_key(id_a, id_b, t_point, session_point)
    key = _variant_key(id_a, id_b, t_point, session_point)
    return VariantTrace(
        id_a=id_a,
        id_b=id_b,
        x_a=x_a,
        x_b=x_b,
        nonce=nonce,
        t_point=t_point,
        session_point=session_point,
        key=key,
        kgc_precomputed_key=kgc_key,
    )


# ---------------------------------------------------------------------------
# Symbolic knowledge per attribute


def _gpc_knowledge(attr: str) -> tuple[KnowledgeSet, Term, list[str]]:
    """(knowledge, target point term, candidate witness monomials)."""
    inst = gpc_aka_instance()
    q = inst.q
    terms: list[Term] = list(inst.transcript)
    # binding scalars are public hashes of public data
    terms.append(const_term(inst.q_a, q))
    terms.append(const_term(inst.q_b, q))
    target = inst.key_term
    if attr == "forward_secrecy":
        terms += [
            scalar_term({("xA",): 1}, q),
            inst.d_a_term,
            scalar_term({("xB",): 1}, q),
            inst.d_b_term,
        ]
        witness = ["tA*tB"]
    elif attr == "kgc_forward_secrecy":
        terms.append(scalar_term({("s",): 1}, q))
        witness = ["tA*tB"]
    elif attr == "kci":
        # adversary holds A's long-term secrets and plays "B" with its own
        # ephemeral t_E; can it compute the key A derives?
        t_e = 5
        terms += [
            scalar_term({("xA",): 1}, q),
            inst.d_a_term,
            const_term(t_e, q),
            point_term({(): t_e}, q),  # T_E = t_E * P replaces T_B
        ]
        side_a = canonical_poly(
            {("tA",): 1, ("xA",): 1, ("rA",): 1, ("s",): inst.q_a}, q
        )
        side_e = canonical_poly(
            {(): t_e, ("xB",): 1, ("rB",): 1, ("s",): inst.q_b}, q
        )
        key = poly_mul(side_a, side_e, q)
        assert key is not None
        target = Term(Kind.POINT, key)
        witness = ["tA*xB", "tA*rB"]
    elif attr == "uks":
        # adversary replaces B's public record with points of known discrete
        # log but cannot obtain a matching partial key
        e_pub, r_e, t_e = 3, 9, 5
        curve = inst.params.curve
        forged_pub = scalar_mul(Scalar(e_pub, q), curve.gen, curve)
        forged_r = scalar_mul(Scalar(r_e, q), curve.gen, curve)
        q_forged = identity_binding(inst.params, inst.id_b, forged_r, forged_pub).value
        assert q_forged != 0, "forged binding collided with zero; adjust seeds"
        terms += [
            const_term(e_pub, q),
            const_term(r_e, q),
            const_term(t_e, q),
            const_term(q_forged, q),
            point_term({(): e_pub}, q),
            point_term({(): r_e}, q),
            point_term({(): t_e}, q),
        ]
        side_a = canonical_poly(
            {("tA",): 1, ("xA",): 1, ("rA",): 1, ("s",): inst.q_a}, q
        )
        side_forged = canonical_poly(
            {(): (t_e + e_pub + r_e) % q, ("s",): q_forged}, q
        )
        key = poly_mul(side_a, side_forged, q)
        assert key is not None
        target = Term(Kind.POINT, key)
        witness = ["s*tA", "s*xA", "rA*s"]
    elif attr == "ephemeral_leak":
        terms += [
            scalar_term({("tA",): 1}, q),
            scalar_term({("tB",): 1}, q),
        ]
        witness = ["xA*xB", "rA*rB"]
    else:
        raise ValueError(f"no symbolic knowledge set for attribute {attr!r}")
    return knowledge_from_terms(terms, q), target, witness


def _variant_knowledge(attr: str) -> tuple[KnowledgeSet, Term]:
    inst = variant_instance()
    q = inst.params.curve.q
    terms: list[Term] = list(inst.transcript)
    if attr == "forward_secrecy":
        terms += [scalar_term({("xA",): 1}, q), scalar_term({("xB",): 1}, q)]
    elif attr == "kgc_forward_secrecy":
        terms.append(scalar_term({("s",): 1}, q))
    elif attr == "kci":
        # any party the KGC serves receives the session nonce, so an
        # adversary that also holds x_A engages and learns t
        terms += [scalar_term({("xA",): 1}, q), scalar_term({("t",): 1}, q)]
    elif attr == "uks":
        terms += [const_term(3, q), const_term(9, q)]
    elif attr == "ephemeral_leak":
        terms.append(scalar_term({("t",): 1}, q))
    else:
        raise ValueError(f"no symbolic knowledge set for attribute {attr!r}")
    return knowledge_from_terms(terms, q), inst.key_term


def _absence_verdict(
    attr: str,
    protocol: str,
    knowledge: KnowledgeSet,
    target: Term,
    candidates: list[str],
    assignment: dict[str, int],
    depth: int,
) -> Verdict:
    support = reachable_monomials(knowledge, depth)
    target_monos = poly_support(target.poly)
    missing = sorted(
        format_monomial(m) for m in target_monos if m not in support.point
    )
    checked = [m for m in candidates if m in missing]
    holds = bool(missing)
    witness = {
        "target_term": repr(target),
        "missing_monomials": missing,
        "expected_witnesses": candidates,
        "depth": depth,
        "rounds": support.rounds,
        "fixpoint": support.fixpoint,
        "knowledge": [repr(t) for t in knowledge.ordered()],
        "assignment": assignment,
    }
    if holds and not checked:
        # reachable set smaller than expected is fine; missing list is the proof
        witness["note"] = "expected witness monomials differ from computed ones"
    return Verdict(attr, protocol, holds, "absence", witness)


def _derivation_verdict(
    attr: str,
    protocol: str,
    knowledge: KnowledgeSet,
    target: Term,
    assignment: dict[str, int],
    depth: int = 2,
) -> Verdict:
    """Expected-failure case: the adversary derives the key term exactly."""
    closure = adversary_closure(knowledge, depth)
    derivable = target in closure
    witness: dict = {
        "target_term": repr(target),
        "assignment": assignment,
        "curve": "TOY17",
        "closure_depth": depth,
        "closure_size": len(closure),
    }
    if derivable:
        chain = derivation_chain(closure, target)
        witness["chain"] = [
            {
                "op": op,
                "parents": list(parents),
                "kind": term.kind.value,
                "poly": {format_monomial(m): c for m, c in term.poly},
            }
            for op, parents, term in chain
        ]
        concrete = replay(closure, target, assignment, TOY17)
        direct = evaluate(target, assignment, TOY17)
        witness["replayed_point"] = encode_point(concrete, TOY17).hex()
        witness["direct_point"] = encode_point(direct, TOY17).hex()
        assert concrete == direct
    return Verdict(attr, protocol, holds=not derivable, kind="derivation", witness=witness)


# ---------------------------------------------------------------------------
# Concrete trace checks


def _honest_session_keys(seed: int) -> bytes:
    """Session key of one honest seeded toy-curve handshake."""
    from . import keys as keymod
    from . import protocol as proto

    rng = random.Random(1000)  # fixed long-term material
    params, mk = keymod.setup("TOY17", "lab-trace", rng)

    def enroll(dn: str):
        x = keymod.set_secret_value(rng, params)
        pub = keymod.set_public_key(x, params)
        ident = Identity(dn)
        ppk = keymod.extract_partial_private_key(mk, params, ident, pub, rng)
        record = keymod.PublicRecord(ident, pub, ppk.r_point, params.domain_id)
        return keymod.set_private_key(params, x, ppk, record)

    user_a, user_b = enroll("/lab/trace/up"), enroll("/lab/trace/rp")
    session_rng = random.Random(seed)
    st_a, msg_a = proto.session_init(proto.Role.INITIATOR, user_a, params, session_rng)
    st_b, msg_b = proto.session_init(proto.Role.RESPONDER, user_b, params, session_rng)
    key_a = proto.session_complete(st_a, msg_b)
    key_b = proto.session_complete(st_b, msg_a)
    assert key_a.key == key_b.key
    return key_a.key


def _known_key_verdict(protocol: str) -> Verdict:
    if protocol == "gpc_aka":
        seeds = (11, 12, 13)
        keys = [_honest_session_keys(seed) for seed in seeds]
        holds = len(set(keys)) == len(keys)
        witness = {
            "seeds": list(seeds),
            "keys": [k.hex() for k in keys],
            "distinct": holds,
        }
        return Verdict("known_key", protocol, holds, "trace", witness)
    # variant: force the same KGC nonce across two sessions
    nonce = 6
    t1 = kgc_nonce_variant_trace(random.Random(21), forced_nonce=nonce)
    t2 = kgc_nonce_variant_trace(random.Random(22), forced_nonce=nonce)
    identical = t1.key == t2.key
    witness = {
        "forced_nonce": nonce,
        "seeds": [21, 22],
        "keys": [t1.key.hex(), t2.key.hex()],
        "identical": identical,
    }
    return Verdict("known_key", protocol, holds=not identical, kind="trace", witness=witness)


def _key_control_verdict(protocol: str) -> Verdict:
    if protocol == "gpc_aka":
        inst = gpc_aka_instance()
        support = poly_support(inst.key_term.poly)
        joint = ("tA", "tB") in support
        keys = [_honest_session_keys(seed) for seed in (31, 32)]
        varied = keys[0] != keys[1]
        holds = joint and varied
        witness = {
            "key_term": repr(inst.key_term),
            "joint_ephemeral_monomial": format_monomial(("tA", "tB")),
            "joint_present": joint,
            "seeds": [31, 32],
            "keys": [k.hex() for k in keys],
        }
        return Verdict("key_control", protocol, holds, "trace", witness)
    trace = kgc_nonce_variant_trace(random.Random(41))
    controllable = trace.kgc_precomputed_key == trace.key
    witness = {
        "seed": 41,
        "nonce": trace.nonce.value,
        "session_key": trace.key.hex(),
        "kgc_precomputed_key": trace.kgc_precomputed_key.hex(),
        "kgc_predetermined": controllable,
    }
    return Verdict("key_control", protocol, holds=not controllable, kind="trace", witness=witness)


# ---------------------------------------------------------------------------
# Entry points


def check_attribute(attr: str, protocol: str, depth: int = DEFAULT_DEPTH) -> Verdict:
    """Evaluate one attribute against one protocol model."""
    if attr not in ATTRIBUTES:
        raise ValueError(f"unknown attribute {attr!r}")
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if attr == "known_key":
        return _known_key_verdict(protocol)
    if attr == "key_control":
        return _key_control_verdict(protocol)
    if protocol == "gpc_aka":
        knowledge, target, candidates = _gpc_knowledge(attr)
        inst = gpc_aka_instance()
        return _absence_verdict(
            attr, protocol, knowledge, target, candidates, inst.assignment, depth
        )
    knowledge, target = _variant_knowledge(attr)
    inst = variant_instance()
    if attr in ("forward_secrecy", "kci", "ephemeral_leak"):
        return _derivation_verdict(attr, protocol, knowledge, target, inst.assignment)
    candidates = ["t*xA", "t*xB"]
    return _absence_verdict(
        attr, protocol, knowledge, target, candidates, inst.assignment, depth
    )


def run_security_report(depth: int = DEFAULT_DEPTH) -> list[Verdict]:
    """All attribute/protocol combinations, deterministic order."""
    return [
        check_attribute(attr, protocol, depth)
        for protocol in PROTOCOLS
        for attr in ATTRIBUTES
    ]


def replay_witness(verdict: Verdict) -> bool:
    """Re-execute a verdict's witness; True when it reproduces the claim."""
    if verdict.kind == "derivation":
        return _replay_derivation_witness(verdict)
    if verdict.kind == "trace":
        return _replay_trace_witness(verdict)
    if verdict.kind == "absence":
        fresh = check_attribute(verdict.attribute, verdict.protocol, verdict.witness["depth"])
        return (
            fresh.holds == verdict.holds
            and fresh.witness["missing_monomials"] == verdict.witness["missing_monomials"]
        )
    raise ValueError(f"unknown witness kind {verdict.kind!r}")


def _replay_derivation_witness(verdict: Verdict) -> bool:
    witness = verdict.witness
    if "chain" not in witness:
        return not verdict.holds is False  # nothing to replay
    assignment = witness["assignment"]
    q = TOY17.q
    values: list = []
    terms: list[Term] = []
    for step in witness["chain"]:
        poly = canonical_poly(
            {parse_monomial(m): c for m, c in step["poly"].items()}, q
        )
        term = Term(Kind(step["kind"]), poly)
        terms.append(term)
        parents = [values[i] for i in step["parents"]]
        op = step["op"]
        if op == "init":
            value = evaluate(term, assignment, TOY17)
        elif op == "add":
            a, b = parents
            value = point_add(a, b, TOY17) if isinstance(a, Point) else a + b
        elif op == "neg":
            (a,) = parents
            value = (
                Point(a.x, (-a.y) % TOY17.p) if isinstance(a, Point) and not a.is_identity
                else (a if isinstance(a, Point) else -a)
            )
        elif op == "mul":
            a, b = parents
            value = a * b
        elif op == "smul":
            a, b = parents
            value = scalar_mul(a, b, TOY17)
        elif op == "hash":
            value = evaluate(term, assignment, TOY17)
        else:
            return False
        values.append(value)
        # every step must concretely match its claimed polynomial
        if evaluate(term, assignment, TOY17) != value:
            return False
    final = terms[-1]
    target_hex = witness["direct_point"]
    final_point = values[-1]
    if not isinstance(final_point, Point):
        return False
    if encode_point(final_point, TOY17).hex() != target_hex:
        return False
    return repr(final) == witness["target_term"]


def _replay_trace_witness(verdict: Verdict) -> bool:
    witness = verdict.witness
    if verdict.protocol == "kgc_nonce_variant":
        if verdict.attribute == "known_key":
            nonce = witness["forced_nonce"]
            keys = [
                kgc_nonce_variant_trace(random.Random(seed), forced_nonce=nonce).key.hex()
                for seed in witness["seeds"]
            ]
            return keys == witness["keys"]
        trace = kgc_nonce_variant_trace(random.Random(witness["seed"]))
        return (
            trace.key.hex() == witness["session_key"]
            and trace.kgc_precomputed_key.hex() == witness["kgc_precomputed_key"]
        )
    keys = [_honest_session_keys(seed).hex() for seed in witness["seeds"]]
    return keys == witness["keys"]
