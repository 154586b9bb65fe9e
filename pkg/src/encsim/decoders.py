"""Noisy error-suppression engines.

gb_iteration runs one hard-decision message-passing iteration over the
E = d_v*N-bit copy register (check rule: XOR of the other d_c-1 edge
messages; variable rule: threshold b = floor((d_v+1)/2) over the other
d_v-1 incoming messages, exact ties broken by a fair stream bit).

pbf_iteration runs one parallel bit-flipping iteration on an N-bit word:
flip every variable with more than d_v/2 unsatisfied checks, randomize the
exact-tie case.  Both accept probabilistic noise (per-activation flips) or
a permanent defect placement; pbf_decode_noiseless is the exact repeated
decode whose operations are tallied separately as noiseless work.

All updates are synchronous and fully vectorized; the gate tallies are the
proof-exact counts (2E per message-passing iteration, P XOR + N MAJ per
bit-flipping iteration).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import gf2
from .noise import apply_modes


@dataclass
class MessageState:
    """Edge messages in variable-major edge order (edge e = v*d_v + j)."""

    v2c: np.ndarray
    c2v: np.ndarray = None

    def copy(self):
        return MessageState(self.v2c.copy(),
                            None if self.c2v is None else self.c2v.copy())


def state_from_copies(graph, register):
    """Bind copy j of variable v to port j: the register is v2c verbatim."""
    register = gf2.as_bits(register)
    if register.shape != (graph.E,):
        raise gf2.DimensionError(f"register length {register.shape} != E={graph.E}")
    return MessageState(v2c=register.copy())


def extract_word(graph, state, stream):
    """Per variable, read one uniformly random port's copy (tallied free)."""
    v2c = state.v2c.reshape(graph.N, graph.d_v)
    picks = stream.integers(0, graph.d_v, size=graph.N)
    return v2c[np.arange(graph.N), picks].astype(np.uint8)


def gb_iteration(graph, state, noise, stream, tally=None):
    """One noisy Gallager-B iteration; returns the new MessageState.

    Tally: E XOR gates of fan-in d_c-1 (check rule) + E threshold gates of
    fan-in d_v-1 (variable rule).
    """
    d_v, d_c = graph.d_v, graph.d_c
    N, P, E = graph.N, graph.P, graph.E
    v2c = state.v2c
    if v2c.shape != (E,):
        raise gf2.DimensionError(f"state length {v2c.shape} != E={E}")
    b = (d_v + 1) // 2

    # check rule: m_{c->v} = XOR of the other d_c-1 messages on the check
    at_checks = v2c[graph.check_edges]                      # (P, d_c)
    parity = np.bitwise_xor.reduce(at_checks, axis=1)       # (P,)
    c2v_cm = parity[:, None] ^ at_checks                    # exclude own port
    c2v = np.empty(E, dtype=np.uint8)
    c2v[graph.check_edges.ravel()] = c2v_cm.ravel()
    if noise is not None and noise.p_xor > 0.0:
        c2v ^= stream.flips(noise.p_xor, E)

    # variable rule: agree with value held by >= b of the other d_v-1 messages
    inc = c2v.reshape(N, d_v).astype(np.int64)
    tot_ones = inc.sum(axis=1)
    ones_excl = tot_ones[:, None] - inc                     # (N, d_v)
    zeros_excl = (d_v - 1) - ones_excl
    new = np.where(ones_excl >= b, 1, 0).astype(np.uint8)
    tie = (ones_excl < b) & (zeros_excl < b)
    if tie.any():
        new[tie] = stream.bits(int(tie.sum()))
    new = new.ravel()
    if noise is not None and noise.p_maj > 0.0:
        new ^= stream.flips(noise.p_maj, E)

    if tally is not None:
        tally.add("xor", d_c - 1, E)
        tally.add("maj", d_v - 1, E)
    return MessageState(v2c=new, c2v=c2v)


def pbf_iteration(graph, word, noise, defects, stream, tally=None,
                  tie_rule="random"):
    """One parallel bit-flipping iteration on an N-bit word.

    noise=None and defects=None gives the exact rule.  Defect instance
    identity: XOR instance c computes check c's parity, MAJ instance v
    emits variable v's decision, on every call (permanent defects).
    Tally: P XOR gates of fan-in d_c + N decision gates of fan-in d_v.

    tie_rule governs variables with exactly d_v/2 unsatisfied checks (even
    d_v only): "random" sets them to a fair bit, "keep" leaves them alone.
    The random rule is self-defeating under sustained gate noise: clean
    variables reach the tie with probability ~C(d_v,d_v/2) q^(d_v/2) (q the
    per-check unsatisfied probability), so at d_v=4 the rule injects errors
    quadratically in the ambient error rate and the staged schemes diverge;
    "keep" removes that source and only weakens the correction of bits that
    were already wrong.
    """
    d_v, d_c = graph.d_v, graph.d_c
    N, P = graph.N, graph.P
    word = gf2.as_bits(word)
    if word.shape != (N,):
        raise gf2.DimensionError(f"word length {word.shape} != N={N}")

    parity = np.bitwise_xor.reduce(word[graph.check_vars()], axis=1)
    if defects is not None and "xor" in defects.modes:
        parity = apply_modes(parity, defects.modes["xor"][:P])
    if noise is not None and noise.p_xor > 0.0:
        parity ^= stream.flips(noise.p_xor, P)

    if tie_rule not in ("random", "keep"):
        raise ValueError(f"unknown tie rule {tie_rule!r}")
    unsat = parity[graph.var_checks()].astype(np.int64).sum(axis=1)
    new = word.copy()
    new[unsat * 2 > d_v] ^= 1
    if tie_rule == "random" and d_v % 2 == 0:
        tie = unsat * 2 == d_v
        if tie.any():
            new[tie] = stream.bits(int(tie.sum()))
    if defects is not None and "maj" in defects.modes:
        new = apply_modes(new, defects.modes["maj"][:N])
    if noise is not None and noise.p_maj > 0.0:
        new ^= stream.flips(noise.p_maj, N)

    if tally is not None:
        tally.add("xor", d_c, P)
        tally.add("maj", d_v, N)
    return new


def pbf_decode_noiseless(graph, word, c_e, stream, noiseless_tally=None):
    """ceil(c_e * ln N) exact bit-flipping iterations (tie bits still random).

    Operations go to noiseless_tally only; they are never mixed into the
    unreliable gate accounting.
    """
    if c_e <= 0:
        raise ValueError("c_e must be positive")
    iters = math.ceil(c_e * math.log(graph.N))
    for _ in range(iters):
        word = pbf_iteration(graph, word, None, None, stream,
                             tally=noiseless_tally)
    return word, iters
