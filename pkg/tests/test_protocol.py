from __future__ import annotations

import random

import pytest

from conftest import TOY_DN_CONTRIB, TOY_SEEDS, ScriptedRng, enroll_toy_user
from gpcaka.curves import IDENTITY, TOY17, Point, Scalar, encode_point, is_on_curve, scalar_mul, tagged_hash
from gpcaka.keys import Identity, identity_binding
from gpcaka.protocol import (
    DegenerateSessionError,
    HandshakeMessage,
    InvalidPeerError,
    Phase,
    Role,
    SessionStateError,
    derive_shared_point,
    kdf_session_key,
    read_op_count,
    session_complete,
    session_init,
)

# frozen from the seeded fixture (s=7, xA=4, rA=3, tA=6, xB=2, rB=8, tB=5):
# Q_A=11 -> D_A=4, Q_B=2 -> D_B=3, sigma_A=14, sigma_B=10, shared = 7*G
FROZEN_SESSION_KEY = "7dd54c42ec8c9165cf5074803611b36787305ee91cec233ece8fb2dd0bc6be84"


def run_toy_session(toy_users, t_a=TOY_SEEDS["tA"], t_b=TOY_SEEDS["tB"]):
    params, user_a, user_b = toy_users
    st_a, msg_a = session_init(Role.INITIATOR, user_a, params, ScriptedRng([t_a]))
    st_b, msg_b = session_init(Role.RESPONDER, user_b, params, ScriptedRng([t_b]))
    return st_a, msg_a, st_b, msg_b


class TestSessionInit:
    def test_message_points_on_curve(self, toy_users):
        params, user_a, _ = toy_users
        _, msg = session_init(Role.INITIATOR, user_a, params, random.Random(1))
        for pt in (msg.p_pub, msg.r_point, msg.t_point):
            assert is_on_curve(pt, TOY17) and not pt.is_identity

    def test_seeded_ephemeral_point(self, toy_users, toy_table):
        params, user_a, _ = toy_users
        st, msg = session_init(Role.INITIATOR, user_a, params, ScriptedRng([6]))
        assert msg.t_point == toy_table[6]
        assert st.phase is Phase.SENT
        assert st.ephemeral.value == 6

    def test_distinct_ephemerals(self, p256_users):
        params, user_a, _ = p256_users
        rng = random.Random(2)
        _, m1 = session_init(Role.INITIATOR, user_a, params, rng)
        _, m2 = session_init(Role.INITIATOR, user_a, params, rng)
        assert m1.t_point != m2.t_point

    def test_init_counts(self, toy_users):
        params, user_a, _ = toy_users
        st, _ = session_init(Role.INITIATOR, user_a, params, random.Random(3))
        oc = read_op_count(st)
        assert (oc.point_mults, oc.messages_sent) == (1, 1)
        assert (oc.point_adds, oc.scalar_adds, oc.hashes) == (0, 0, 0)

    def test_wrong_domain_keys_rejected(self, toy_users):
        params, user_a, _ = toy_users
        from gpcaka.keys import SystemParams

        other = SystemParams(curve=params.curve, p0=params.p0, domain_id="elsewhere")
        with pytest.raises(ValueError):
            session_init(Role.INITIATOR, user_a, other, random.Random(1))


class TestDeriveSharedPoint:
    def test_seeded_trace_matches_scalar_side_oracle(self, toy_users, toy_table):
        # independent scalar-side computation: both sides must land on
        # ((tA + DA + xA) * (tB + DB + xB) mod 19) * G with DA=4, DB=3
        st_a, msg_a, st_b, msg_b = run_toy_session(toy_users)
        sigma_a = (6 + 4 + 4) % 19
        sigma_b = (5 + 3 + 2) % 19
        expected = toy_table[sigma_a * sigma_b % 19]
        assert derive_shared_point(st_a, msg_b) == expected
        assert derive_shared_point(st_b, msg_a) == expected

    def test_counts_after_derive(self, toy_users):
        st_a, _, _, msg_b = run_toy_session(toy_users)
        derive_shared_point(st_a, msg_b)
        oc = read_op_count(st_a)
        assert oc.point_mults == 3  # 1 init + 2 online
        assert oc.point_adds == 3
        assert oc.scalar_adds == 2
        assert oc.hashes == 1

    def test_identity_peer_point_rejected_at_construction(self, toy_users):
        _, _, _, msg_b = run_toy_session(toy_users)
        with pytest.raises(InvalidPeerError):
            HandshakeMessage(
                id=msg_b.id,
                domain_id=msg_b.domain_id,
                p_pub=msg_b.p_pub,
                r_point=msg_b.r_point,
                t_point=IDENTITY,
            )

    def test_off_curve_peer_point_rejected(self, toy_users):
        st_a, _, _, msg_b = run_toy_session(toy_users)
        forged = HandshakeMessage(
            id=msg_b.id,
            domain_id=msg_b.domain_id,
            p_pub=msg_b.p_pub,
            r_point=msg_b.r_point,
            t_point=Point(5, 2),
        )
        with pytest.raises(InvalidPeerError):
            derive_shared_point(st_a, forged)

    def test_wrong_phase(self, toy_users):
        st_a, _, st_b, msg_b = run_toy_session(toy_users)
        session_complete(st_a, msg_b)
        with pytest.raises(SessionStateError):
            derive_shared_point(st_a, msg_b)

    def test_degenerate_aborts_are_symmetric(self, toy_users):
        # sigma_A = tA + DA + xA = tA + 8; tA = 11 makes A's sigma zero and
        # B's aggregate V_A the identity, so both sides abort
        st_a, msg_a, st_b, msg_b = run_toy_session(toy_users, t_a=11)
        with pytest.raises(DegenerateSessionError, match="sigma"):
            derive_shared_point(st_a, msg_b)
        with pytest.raises(DegenerateSessionError, match="identity"):
            derive_shared_point(st_b, msg_a)


class TestKdf:
    def test_both_roles_equal_bytes(self, toy_users):
        st_a, msg_a, st_b, msg_b = run_toy_session(toy_users)
        key_a = session_complete(st_a, msg_b)
        key_b = session_complete(st_b, msg_a)
        assert key_a.key == key_b.key
        assert key_a.transcript_hash == key_b.transcript_hash
        assert len(key_a.key) == 32

    def test_frozen_regression_vector(self, toy_users):
        st_a, _, _, msg_b = run_toy_session(toy_users)
        assert session_complete(st_a, msg_b).key.hex() == FROZEN_SESSION_KEY

    def test_shared_point_bitflip_changes_key(self, toy_users, toy_table):
        # statistical: flipping any single bit of the shared-point chunk in
        # the KDF preimage must change the output
        base_chunks = [b"/a", b"/b", b"\x02\x03", b"\x02\x04", encode_point(toy_table[7], TOY17)]
        base = tagged_hash(0x02, base_chunks)
        rng = random.Random(99)
        for _ in range(1000):
            mutated = bytearray(base_chunks[-1])
            bit = rng.randrange(len(mutated) * 8)
            mutated[bit // 8] ^= 1 << (bit % 8)
            flipped = tagged_hash(0x02, base_chunks[:-1] + [bytes(mutated)])
            assert flipped != base

    def test_identity_shared_point_rejected(self, toy_users, toy_table):
        params, user_a, user_b = toy_users
        with pytest.raises(DegenerateSessionError):
            kdf_session_key(
                user_a.record.id,
                user_b.record.id,
                toy_table[6],
                toy_table[5],
                IDENTITY,
                params,
            )


class TestSessionComplete:
    def test_consistency_sweep_over_ephemeral_grid(self, toy_users, toy_table):
        # every non-degenerate (tA, tB) pair agrees on both sides and equals
        # the scalar-side formula; degenerate pairs abort on both sides
        params, user_a, user_b = toy_users
        aborts = 0
        for t_a in range(1, 19):
            for t_b in range(1, 19):
                st_a, msg_a, st_b, msg_b = run_toy_session(toy_users, t_a, t_b)
                sigma_a = (t_a + 4 + 4) % 19
                sigma_b = (t_b + 3 + 2) % 19
                if sigma_a == 0 or sigma_b == 0:
                    with pytest.raises(DegenerateSessionError):
                        session_complete(st_a, msg_b)
                    with pytest.raises(DegenerateSessionError):
                        session_complete(st_b, msg_a)
                    aborts += 1
                    continue
                key_a = session_complete(st_a, msg_b)
                key_b = session_complete(st_b, msg_a)
                assert key_a.key == key_b.key
                shared = toy_table[sigma_a * sigma_b % 19]
                expected = kdf_session_key(
                    user_a.record.id,
                    user_b.record.id,
                    msg_a.t_point,
                    msg_b.t_point,
                    shared,
                    params,
                )
                assert key_a.key == expected.key
        assert aborts == 18 + 18 - 1  # one degenerate row, one column

    def test_ephemeral_erased_after_completion(self, toy_users):
        st_a, _, _, msg_b = run_toy_session(toy_users)
        assert st_a.ephemeral is not None
        session_complete(st_a, msg_b)
        assert st_a.ephemeral is None
        assert st_a.phase is Phase.COMPLETE

    def test_ephemeral_not_in_repr(self, toy_users):
        st_a, _, _, _ = run_toy_session(toy_users)
        assert "ephemeral" not in repr(st_a)

    def test_double_complete_rejected(self, toy_users):
        st_a, _, _, msg_b = run_toy_session(toy_users)
        session_complete(st_a, msg_b)
        with pytest.raises(SessionStateError):
            session_complete(st_a, msg_b)

    def test_total_counts(self, toy_users):
        st_a, msg_a, st_b, msg_b = run_toy_session(toy_users)
        session_complete(st_a, msg_b)
        session_complete(st_b, msg_a)
        for st in (st_a, st_b):
            oc = read_op_count(st)
            assert oc.point_mults == 3
            assert oc.point_adds == 3
            assert oc.scalar_adds == 2
            assert oc.hashes == 2
            assert oc.messages_sent == 1

    def test_freshness_different_ephemerals_different_keys(self, toy_users):
        st1_a, _, _, msg1_b = run_toy_session(toy_users, t_a=6, t_b=5)
        st2_a, _, _, msg2_b = run_toy_session(toy_users, t_a=9, t_b=12)
        key1 = session_complete(st1_a, msg1_b)
        key2 = session_complete(st2_a, msg2_b)
        assert key1.key != key2.key


class TestContributiveness:
    def test_varying_own_ephemeral_sweeps_all_shared_points(self, toy_domain, toy_users):
        # identity mined so D + x == 0 (mod 19): sigma_A == tA, so the sweep
        # never aborts and must produce 18 distinct shared points
        params, mk = toy_domain
        _, _, user_b = toy_users
        user_c = enroll_toy_user(params, mk, TOY_DN_CONTRIB, TOY_SEEDS["xA"], TOY_SEEDS["rA"])
        assert (user_c.partial.d + user_c.x).value == 0
        _, _, st_b, msg_b = run_toy_session((params, user_c, user_b))
        shared_points = set()
        for t_a in range(1, 19):
            st_c, _ = session_init(Role.INITIATOR, user_c, params, ScriptedRng([t_a]))
            shared_points.add(derive_shared_point(st_c, msg_b))
        assert len(shared_points) == 18


class TestImplicitAuthentication:
    def test_forged_public_key_without_partial_key_fails(self, toy_users, toy_table):
        # adversary replaces B's record with points of known discrete log
        # (e, r', t') but holds no matching D; its best computable guess
        # (t' + e + r') * (T_A + P_A + R_A + Q_A*P0) misses the Q'*s*P term,
        # so it differs from the victim's key for every ephemeral pair
        # (as long as Q' != 0, excluded by construction; a zero Q' is the
        # 1/q hash-collision break documented with the fixture)
        params, user_a, _ = toy_users
        e_pub, r_e = 9, 13
        forged_id = Identity("/grid/test/forger")
        forged = {
            "p_pub": toy_table[e_pub],
            "r_point": toy_table[r_e],
        }
        q_forged = identity_binding(params, forged_id, forged["r_point"], forged["p_pub"])
        assert not q_forged.is_zero
        q_a = identity_binding(
            params, user_a.record.id, user_a.partial.r_point, user_a.record.p_pub
        )
        assert q_a.value == 11
        for t_a in range(1, 19):
            sigma_a = (t_a + 4 + 4) % 19
            if sigma_a == 0:
                continue  # victim aborts; nothing to compare
            st_a, msg_a = session_init(
                Role.INITIATOR, user_a, params, ScriptedRng([t_a])
            )
            for t_e in range(1, 19):
                forged_msg = HandshakeMessage(
                    id=forged_id,
                    domain_id=params.domain_id,
                    p_pub=forged["p_pub"],
                    r_point=forged["r_point"],
                    t_point=toy_table[t_e],
                )
                victim_point = derive_shared_point(
                    SessionStateCopy(st_a), forged_msg
                )
                # adversary's computable value: dlog-known scalars times A's
                # public aggregate, with no D' available
                adv_scalar = (t_e + e_pub + r_e) % 19
                adv_point = scalar_mul(
                    Scalar(adv_scalar, 19),
                    _aggregate_of_a(params, user_a, msg_a.t_point, q_a),
                    TOY17,
                )
                assert adv_point != victim_point


def _aggregate_of_a(params, user_a, t_point, q_a):
    from gpcaka.curves import point_add

    agg = scalar_mul(q_a, params.p0, TOY17)
    for term in (t_point, user_a.record.p_pub, user_a.partial.r_point):
        agg = point_add(agg, term, TOY17)
    return agg


def SessionStateCopy(st):
    """Fresh SENT-phase state with the same secrets, for repeated derives."""
    from gpcaka.protocol import SessionState

    return SessionState(
        role=st.role,
        own_keys=st.own_keys,
        params=st.params,
        ephemeral=st.ephemeral,
        own_t_point=st.own_t_point,
        phase=Phase.SENT,
    )


class TestCrossDomain:
    def test_peers_from_two_domains_agree(self, toy_domain):
        from gpcaka.keys import setup as setup2

        params_a, mk_a = toy_domain
        params_b, mk_b = setup2("TOY17", "grid-two", ScriptedRng([5]))
        user_a = enroll_toy_user(params_a, mk_a, "/grid/test/xa", 4, 3)
        user_b = enroll_toy_user(params_b, mk_b, "/grid/two/xb", 2, 8)
        st_a, msg_a = session_init(Role.INITIATOR, user_a, params_a, ScriptedRng([6]))
        st_b, msg_b = session_init(Role.RESPONDER, user_b, params_b, ScriptedRng([9]))
        key_a = session_complete(st_a, msg_b, peer_params=params_b)
        key_b = session_complete(st_b, msg_a, peer_params=params_a)
        assert key_a.key == key_b.key

    def test_mismatched_curve_rejected(self, toy_users, p256_users):
        params_toy, user_a, _ = toy_users
        params_p256, _, user_p = p256_users
        st_a, _ = session_init(Role.INITIATOR, user_a, params_toy, ScriptedRng([6]))
        _, msg_p = session_init(Role.RESPONDER, user_p, params_p256, random.Random(1))
        with pytest.raises(InvalidPeerError):
            derive_shared_point(st_a, msg_p, peer_params=params_p256)
