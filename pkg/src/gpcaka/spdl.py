"""Scyther model of the protocol in SPDL.

The listing models the KGC publishing the public parameters and the two
proxies exchanging R and T, with session-key-secrecy (SKR) claims on the
KDF expression both roles compute.  The text is emitted character for
character as a stable artifact (one trailing newline) so external Scyther
runs always see the identical model; a golden copy ships as package data
at ``gpcaka/data/gpc_aka.spdl``.

The wire implementation collapses the model's separate R and T sends into
the single handshake message each side transmits; the split here is an
artifact of tool-friendly modeling, not of the protocol's message count.
"""

from __future__ import annotations

from importlib import resources

GOLDEN_RESOURCE = "data/gpc_aka.spdl"

SPDL_LISTING = """\
/*
 * Proposed Pairing-free CL-AKA for Grid (GPC-AKA)
 */
// Hash functions
hashfunction KDF,H;
// Addition, multiplication, simply hashes
hashfunction mult,add;
// The protocol description
protocol GPC-AKA(KGC,UP,RP)
// UP = Initiator, RP = Responder
{
const rA,rB,P;
role KGC // Key Generation Center
{
send_1(KGC,UP,P); // Publish public params
send_2(KGC,RP,P);
}
role UP // User Proxy
{
fresh tA: Nonce; // Ephemeral Secret
var TB: Ticket;
var RB;
recv_1(KGC,UP,P);
send_3(UP,RP,mult(rA,P)); // Send RA
recv_4(RP,UP,RP);
send_5(UP,RP, mult(tA,P)); // Send TA
recv_6(RP,UP,RP);
// Secret Session Key
claim(UP,SKR,KDF(UP,RP,mult(tA,P),TB,mult
(add(tA,sk(UP,KGC),sk(UP)),add(TB,pk(RP),
RB,mult(H(RP,RP,pk(RP))),pk(KGC)))));
}
role RP // Resource Proxy
{
fresh tB: Nonce; // Ephemeral Secret
var TA: Ticket;
var RA;
recv_2(KGC,RP,P);
recv_3(UP,RP,RA);
send_4(RP,UP,mult(rB,P)); // Send RB
recv_5(UP,RP,TA);
send_6(RP,UP,mult(tB,P)); // Send TB
// Secret Session Key
claim(RP,SKR,KDF(UP,RP,TA,mult(tB,P),mult
(add(tB,sk(RP,KGC),sk(RP)),add(TA,pk(UP),
RA,mult(H(UP,RA,pk(UP))),pk(KGC)))));
}
}
"""


def emit_spdl() -> str:
    """The SPDL model text, exactly as shipped."""
    return SPDL_LISTING


def golden_bytes() -> bytes:
    """The checked-in golden copy from package data."""
    return resources.files("gpcaka").joinpath(GOLDEN_RESOURCE).read_bytes()
