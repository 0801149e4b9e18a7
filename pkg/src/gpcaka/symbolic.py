"""Symbolic adversary engine over the protocol's algebra.

Terms are formal polynomials over a fixed set of unknown scalar symbols
(the principals' and KGC's secrets), with integer coefficients mod q and
total degree at most 2 per monomial.  A term is either scalar-valued (a
polynomial f) or point-valued (f * P).  The session key's shared point is
degree 2 in the unknowns, which is why the representation stops there:
operations whose true result would exceed degree 2 fall outside the algebra
and are skipped, never truncated.

A network adversary closes its knowledge under:

  * point + point, point negation
  * scalar arithmetic (add, neg, mul) on known scalars
  * known-scalar * known-point
  * hashing tuples of known terms (outputs are opaque fresh constants)

Two closure strategies are provided:

``adversary_closure``
    Exact breadth-first closure, term for term, with a derivation chain per
    term.  Exponential in depth; intended for small initial sets, where it
    is cross-checked against brute-force enumeration and replayed
    concretely on the toy curve.

``reachable_monomials``
    Sound overapproximation tracking only which monomials can occur in any
    derivable term (a fixpoint over a 2^|monomials| lattice, reached within
    a few rounds).  Every exact operation's result support is contained in
    the abstract result, so a monomial absent here is absent from the exact
    closure at any depth; this is what the resilience checks rely on.
"""

from __future__ import annotations

import enum
import hashlib
import itertools
from dataclasses import dataclass, field

from .curves import CurveParams, Point, Scalar, point_add, point_neg, scalar_mul

Monomial = tuple[str, ...]
PolyItems = tuple[tuple[Monomial, int], ...]

MAX_DEGREE = 2
ONE: Monomial = ()


class ClosureBudgetError(RuntimeError):
    """Exact closure exceeded its term budget; use the support analysis."""


class Kind(enum.Enum):
    SCALAR = "scalar"
    POINT = "point"


def canonical_poly(coeffs: dict[Monomial, int], q: int) -> PolyItems:
    """Sorted monomials, coefficients reduced mod q, zeros dropped."""
    items = []
    for mono, coeff in coeffs.items():
        if len(mono) > MAX_DEGREE:
            raise ValueError(f"monomial degree above {MAX_DEGREE}: {mono}")
        mono = tuple(sorted(mono))
        coeff %= q
        if coeff:
            items.append((mono, coeff))
    merged: dict[Monomial, int] = {}
    for mono, coeff in items:
        merged[mono] = (merged.get(mono, 0) + coeff) % q
    return tuple(sorted((m, c) for m, c in merged.items() if c))


def poly_add(a: PolyItems, b: PolyItems, q: int) -> PolyItems:
    out = dict(a)
    for mono, coeff in b:
        out[mono] = (out.get(mono, 0) + coeff) % q
    return tuple(sorted((m, c) for m, c in out.items() if c))


def poly_neg(a: PolyItems, q: int) -> PolyItems:
    return tuple((m, (-c) % q) for m, c in a)


def poly_mul(a: PolyItems, b: PolyItems, q: int) -> PolyItems | None:
    """Product, or None when any result monomial would exceed the degree cap."""
    out: dict[Monomial, int] = {}
    for mono_a, coeff_a in a:
        for mono_b, coeff_b in b:
            if len(mono_a) + len(mono_b) > MAX_DEGREE:
                return None
            mono = tuple(sorted(mono_a + mono_b))
            out[mono] = (out[mono] + coeff_a * coeff_b) % q if mono in out else (
                coeff_a * coeff_b % q
            )
    return tuple(sorted((m, c) for m, c in out.items() if c))


def poly_support(a: PolyItems) -> frozenset[Monomial]:
    return frozenset(m for m, _ in a)


def format_monomial(mono: Monomial) -> str:
    return "*".join(mono) if mono else "1"


def parse_monomial(text: str) -> Monomial:
    return () if text == "1" else tuple(sorted(text.split("*")))


def format_poly(a: PolyItems) -> str:
    if not a:
        return "0"
    parts = []
    for mono, coeff in a:
        name = format_monomial(mono)
        if mono and coeff == 1:
            parts.append(name)
        elif mono:
            parts.append(f"{coeff}*{name}")
        else:
            parts.append(str(coeff))
    return " + ".join(parts)


@dataclass(frozen=True, slots=True)
class Term:
    """One symbolic value: a scalar polynomial or that polynomial times P."""

    kind: Kind
    poly: PolyItems

    def __repr__(self) -> str:
        inner = format_poly(self.poly)
        return f"({inner})*P" if self.kind is Kind.POINT else inner

    def sort_key(self):
        return (self.kind.value, self.poly)


def scalar_term(coeffs: dict[Monomial, int], q: int) -> Term:
    return Term(Kind.SCALAR, canonical_poly(coeffs, q))


def point_term(coeffs: dict[Monomial, int], q: int) -> Term:
    return Term(Kind.POINT, canonical_poly(coeffs, q))


def const_term(value: int, q: int) -> Term:
    return scalar_term({ONE: value}, q)


def _opaque_hash_value(parents: tuple[Term, ...], q: int) -> int:
    """Deterministic stand-in for a random-oracle output on known inputs."""
    h = hashlib.sha256(b"opaque-scalar")
    for t in parents:
        h.update(repr(t).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "big") % q


@dataclass(frozen=True, slots=True)
class Derivation:
    op: str  # "init", "add", "neg", "mul", "smul", "hash"
    parents: tuple[Term, ...]


@dataclass
class KnowledgeSet:
    """Deduplicated canonical terms plus how each was derived."""

    q: int
    terms: dict[Term, Derivation] = field(default_factory=dict)
    depth: int = 0

    def add(self, term: Term, derivation: Derivation) -> bool:
        if term in self.terms:
            return False
        self.terms[term] = derivation
        return True

    def __contains__(self, term: Term) -> bool:
        return term in self.terms

    def __len__(self) -> int:
        return len(self.terms)

    def ordered(self) -> list[Term]:
        return sorted(self.terms, key=Term.sort_key)


def knowledge_from_terms(terms, q: int) -> KnowledgeSet:
    ks = KnowledgeSet(q=q)
    for t in terms:
        ks.add(t, Derivation("init", ()))
    return ks


def _apply_ops(known: list[Term], q: int, hash_arities: tuple[int, ...]):
    """All one-step results over `known` (deterministic order)."""
    scalars = [t for t in known if t.kind is Kind.SCALAR]
    points = [t for t in known if t.kind is Kind.POINT]
    for t in known:
        yield Term(t.kind, poly_neg(t.poly, q)), Derivation("neg", (t,))
    for bucket in (scalars, points):
        for a, b in itertools.combinations_with_replacement(bucket, 2):
            yield Term(a.kind, poly_add(a.poly, b.poly, q)), Derivation("add", (a, b))
    for a, b in itertools.combinations_with_replacement(scalars, 2):
        prod = poly_mul(a.poly, b.poly, q)
        if prod is not None:
            yield Term(Kind.SCALAR, prod), Derivation("mul", (a, b))
    for s, p in itertools.product(scalars, points):
        prod = poly_mul(s.poly, p.poly, q)
        if prod is not None:
            yield Term(Kind.POINT, prod), Derivation("smul", (s, p))
    for arity in hash_arities:
        for combo in itertools.product(known, repeat=arity):
            yield (
                const_term(_opaque_hash_value(combo, q), q),
                Derivation("hash", combo),
            )


def adversary_closure(
    init: KnowledgeSet,
    depth: int,
    max_terms: int = 200_000,
    hash_arities: tuple[int, ...] = (),
) -> KnowledgeSet:
    """Exact closure to the given derivation height.

    Returns a fresh KnowledgeSet; stops early at a fixpoint.  Term count
    grows roughly squared per round, so keep initial sets and depths small
    (the budget guard raises rather than silently dropping terms).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out = KnowledgeSet(q=init.q, depth=depth)
    for term, deriv in init.terms.items():
        out.add(term, deriv)
    for _ in range(depth):
        frontier = out.ordered()
        added = False
        for term, deriv in _apply_ops(frontier, out.q, hash_arities):
            if out.add(term, deriv):
                added = True
                if len(out) > max_terms:
                    raise ClosureBudgetError(
                        f"closure exceeded {max_terms} terms; "
                        "use reachable_monomials for large instances"
                    )
        if not added:
            break
    return out


@dataclass(frozen=True)
class SupportClosure:
    """Which monomials any derivable term can mention, by term kind."""

    scalar: frozenset[Monomial]
    point: frozenset[Monomial]
    rounds: int
    fixpoint: bool


def reachable_monomials(init: KnowledgeSet, depth: int) -> SupportClosure:
    """Monomial-support saturation; a superset of the exact closure's supports.

    The constant monomial is always seeded into the scalar side (an
    adversary can form arbitrary public constants), which only widens the
    overapproximation.
    """
    scalar_m: set[Monomial] = {ONE}
    point_m: set[Monomial] = set()
    for term in init.terms:
        target = scalar_m if term.kind is Kind.SCALAR else point_m
        target.update(poly_support(term.poly))
    fixpoint = False
    rounds = 0
    for rounds in range(1, depth + 1):
        new_scalar = {
            tuple(sorted(a + b))
            for a in scalar_m
            for b in scalar_m
            if len(a) + len(b) <= MAX_DEGREE
        }
        new_point = {
            tuple(sorted(a + b))
            for a in scalar_m
            for b in point_m
            if len(a) + len(b) <= MAX_DEGREE
        }
        if new_scalar <= scalar_m and new_point <= point_m:
            fixpoint = True
            break
        scalar_m |= new_scalar
        point_m |= new_point
    return SupportClosure(
        scalar=frozenset(scalar_m),
        point=frozenset(point_m),
        rounds=rounds,
        fixpoint=fixpoint,
    )


# ---------------------------------------------------------------------------
# Concrete instantiation on a real curve


def evaluate_scalar(poly: PolyItems, assignment: dict[str, int], params: CurveParams) -> Scalar:
    total = 0
    for mono, coeff in poly:
        value = coeff
        for sym in mono:
            value *= assignment[sym]
        total += value
    return Scalar(total % params.q, params.q)


def evaluate(term: Term, assignment: dict[str, int], params: CurveParams):
    """Direct evaluation of the polynomial under a concrete assignment."""
    value = evaluate_scalar(term.poly, assignment, params)
    if term.kind is Kind.SCALAR:
        return value
    return scalar_mul(value, params.gen, params)


def replay(
    ks: KnowledgeSet, term: Term, assignment: dict[str, int], params: CurveParams
):
    """Recompute a term's concrete value by replaying its derivation chain.

    Initial terms evaluate directly (the adversary holds those values);
    derived terms use only the public group operations, i.e. exactly what a
    concrete adversary could execute.
    """
    deriv = ks.terms[term]
    if deriv.op == "init":
        return evaluate(term, assignment, params)
    parents = [replay(ks, p, assignment, params) for p in deriv.parents]
    if deriv.op == "neg":
        (v,) = parents
        return point_neg(v, params) if isinstance(v, Point) else -v
    if deriv.op == "add":
        a, b = parents
        return point_add(a, b, params) if isinstance(a, Point) else a + b
    if deriv.op == "mul":
        a, b = parents
        return a * b
    if deriv.op == "smul":
        s, p = parents
        return scalar_mul(s, p, params)
    if deriv.op == "hash":
        # opaque constant: its value is a function of the (known) inputs
        return Scalar(_opaque_hash_value(deriv.parents, params.q), params.q)
    raise ValueError(f"unknown derivation op {deriv.op!r}")


def derivation_chain(ks: KnowledgeSet, term: Term) -> list[tuple[str, tuple[int, ...], Term]]:
    """Topologically ordered steps producing `term`.

    Each step is (op, parent step indices, resulting term); initial terms
    have no parents.
    """
    order: list[tuple[str, tuple[int, ...], Term]] = []
    index: dict[Term, int] = {}

    def visit(t: Term) -> int:
        if t in index:
            return index[t]
        deriv = ks.terms[t]
        parent_ids = tuple(visit(p) for p in deriv.parents)
        index[t] = len(order)
        order.append((deriv.op, parent_ids, t))
        return index[t]

    visit(term)
    return order
