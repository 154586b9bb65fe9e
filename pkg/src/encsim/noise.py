"""Unreliable gate primitives, defect placements, operation tallies, energy curves.

Two failure models are supported: probabilistic per-activation output flips
(NoiseSpec) and permanent defects (DefectPlacement) where a fixed fraction of
gate instances invert or stick their output forever.

Random bits used for tie-breaking and copy selection come from the same
NoiseStream but are tallied as zero operations -- that accounting choice is
deliberate and documented (their true hardware cost is unmodeled here).
"""

import math
from dataclasses import dataclass, field

import numpy as np

MODE_OK = 0
MODE_NOT = 1
MODE_STUCK0 = 2
MODE_STUCK1 = 3

MODE_NAMES = {MODE_OK: "ok", MODE_NOT: "not", MODE_STUCK0: "stuck-0", MODE_STUCK1: "stuck-1"}
MODE_IDS = {v: k for k, v in MODE_NAMES.items()}


class FanInError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Gate Model I: independent output-flip probabilities per gate kind."""

    p_and: float = 0.0
    p_xor: float = 0.0
    p_maj: float = 0.0

    def __post_init__(self):
        for name in ("p_and", "p_xor", "p_maj"):
            p = getattr(self, name)
            if not (0.0 <= p < 0.5):
                raise ValueError(f"{name}={p} outside [0, 0.5)")

    def flip_prob(self, kind):
        return {"and": self.p_and, "xor": self.p_xor, "maj": self.p_maj}[kind]

    @property
    def is_zero(self):
        return self.p_and == 0.0 and self.p_xor == 0.0 and self.p_maj == 0.0


ZERO_NOISE = NoiseSpec()


class NoiseStream:
    """Seeded randomness with independent per-trial substreams.

    Substreams are derived by spawning numpy SeedSequences from
    (master seed, trial index), so trial results do not depend on how
    trials are scheduled across workers.
    """

    def __init__(self, seed, trial=None):
        if trial is None:
            ss = np.random.SeedSequence(seed)
        else:
            ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
        self.seed = seed
        self.trial = trial
        self.rng = np.random.Generator(np.random.Philox(ss))

    def flips(self, p, size):
        """Bernoulli(p) uint8 array; avoids drawing when p == 0."""
        if p == 0.0:
            return np.zeros(size, dtype=np.uint8)
        return (self.rng.random(size) < p).astype(np.uint8)

    def bits(self, size):
        """Fair random bits."""
        return self.rng.integers(0, 2, size=size, dtype=np.uint8)

    def bit(self):
        return int(self.rng.integers(0, 2))

    def integers(self, low, high, size=None):
        return self.rng.integers(low, high, size=size)

    def permutation(self, n):
        return self.rng.permutation(n)


class GateTally:
    """Exact activation counts keyed by (gate kind, fan-in)."""

    def __init__(self):
        self.counts = {}

    def add(self, kind, fan_in, n=1):
        if n:
            key = (kind, int(fan_in))
            self.counts[key] = self.counts.get(key, 0) + int(n)

    def merge(self, other):
        for key, n in other.counts.items():
            self.counts[key] = self.counts.get(key, 0) + n

    def total(self):
        return sum(self.counts.values())

    def per_bit(self, K):
        from fractions import Fraction

        return Fraction(self.total(), K)

    def effective(self):
        """Sum of fan-in * count (two-input-gate equivalent workload)."""
        return sum(fan_in * n for (_, fan_in), n in self.counts.items())

    def by_kind_fanin(self):
        return dict(sorted(self.counts.items()))

    def copy(self):
        t = GateTally()
        t.counts = dict(self.counts)
        return t

    def __eq__(self, other):
        return isinstance(other, GateTally) and self.counts == other.counts

    def __repr__(self):
        items = ", ".join(f"{k}-{f}:{n}" for (k, f), n in sorted(self.counts.items()))
        return f"GateTally({items})"


def _truth(kind, inputs, stream=None):
    if kind == "and":
        out = 1
        for b in inputs:
            out &= int(b)
        return out
    if kind == "xor":
        out = 0
        for b in inputs:
            out ^= int(b)
        return out
    if kind == "maj":
        ones = sum(int(b) for b in inputs)
        zeros = len(inputs) - ones
        if ones > zeros:
            return 1
        if ones < zeros:
            return 0
        if stream is None:
            raise ValueError("majority tie requires a stream for the fair bit")
        return stream.bit()
    raise ValueError(f"unknown gate kind {kind!r}")


def noisy_gate(kind, inputs, flip_prob, stream, tally=None, max_fan_in=None):
    """One unreliable gate activation: boolean function XOR Bernoulli flip.

    MAJ with an even fan-in resolves an exact tie with a fair bit from the
    stream before the noise flip is applied.
    """
    if not inputs:
        raise FanInError(f"{kind} gate with empty input")
    if max_fan_in is not None and len(inputs) > max_fan_in:
        raise FanInError(f"{kind} fan-in {len(inputs)} exceeds bound {max_fan_in}")
    if not (0.0 <= flip_prob < 0.5):
        raise ValueError(f"flip_prob={flip_prob} outside [0, 0.5)")
    out = _truth(kind, inputs, stream)
    if flip_prob > 0.0 and stream.rng.random() < flip_prob:
        out ^= 1
    if tally is not None:
        tally.add(kind, len(inputs))
    return out


def defective_gate(kind, inputs, mode, stream=None, tally=None):
    """Gate Model II activation: the defect mode rewrites the correct output."""
    out = _truth(kind, inputs, stream)
    if mode == MODE_NOT:
        out ^= 1
    elif mode == MODE_STUCK0:
        out = 0
    elif mode == MODE_STUCK1:
        out = 1
    if tally is not None:
        tally.add(kind, len(inputs))
    return out


def apply_modes(correct, modes):
    """Vectorized Model-II output rewrite for arrays of gate instances."""
    out = np.where(modes == MODE_NOT, correct ^ 1, correct)
    out = np.where(modes == MODE_STUCK0, 0, out)
    out = np.where(modes == MODE_STUCK1, 1, out)
    return out.astype(np.uint8)


@dataclass
class DefectPlacement:
    """Permanent defect assignment: per gate kind, instance count and modes.

    modes[kind] is a uint8 array of length counts[kind] holding MODE_* codes.
    """

    counts: dict
    modes: dict = field(default_factory=dict)

    def __post_init__(self):
        for kind, n in self.counts.items():
            if kind not in self.modes:
                self.modes[kind] = np.zeros(n, dtype=np.uint8)
            if len(self.modes[kind]) != n:
                raise ValueError(f"mode array for {kind} has wrong length")

    def defective_indices(self, kind):
        return np.nonzero(self.modes[kind] != MODE_OK)[0]

    @property
    def is_clean(self):
        return all((m == MODE_OK).all() for m in self.modes.values())


def sample_defects(counts, fractions, mode_mix=None, seed=0):
    """Uniformly place floor(alpha_i * n_i) defects of each gate kind.

    mode_mix maps mode name -> weight for sampling defect modes (default
    uniform over NOT / stuck-0 / stuck-1).  Reproducible from seed.
    """
    stream = NoiseStream(seed)
    if mode_mix is None:
        mode_mix = {"not": 1.0, "stuck-0": 1.0, "stuck-1": 1.0}
    mode_ids = np.array([MODE_IDS[name] for name in mode_mix], dtype=np.uint8)
    weights = np.array([mode_mix[name] for name in mode_mix], dtype=float)
    weights = weights / weights.sum()
    placement = DefectPlacement(counts=dict(counts))
    for kind, n in counts.items():
        alpha = fractions.get(kind, 0.0)
        if not (0.0 <= alpha < 1.0):
            raise ValueError(f"fraction for {kind} outside [0,1)")
        m = int(math.floor(alpha * n))
        if m == 0:
            continue
        idx = stream.rng.choice(n, size=m, replace=False)
        picks = stream.rng.choice(mode_ids, size=m, p=weights)
        placement.modes[kind][idx] = picks
    return placement


def write_defects(path, placement):
    """Defect placement file: lines of 'gate_kind index mode'."""
    with open(path, "w") as fh:
        for kind in sorted(placement.counts):
            fh.write(f"# {kind} instances {placement.counts[kind]}\n")
            for idx in placement.defective_indices(kind):
                fh.write(f"{kind} {idx} {MODE_NAMES[int(placement.modes[kind][idx])]}\n")


def read_defects(path, counts):
    placement = DefectPlacement(counts=dict(counts))
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            kind, idx, mode = line.split()
            placement.modes[kind][int(idx)] = MODE_IDS[mode]
    return placement


def xor_chain_error_prob(probs):
    """Pr(an odd number of independent Bernoulli flips) = (1 - prod(1-2p))/2."""
    prod = 1.0
    for p in probs:
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability {p} outside [0,1]")
        prod *= 1.0 - 2.0 * p
    return 0.5 * (1.0 - prod)


@dataclass(frozen=True)
class EnergyModel:
    """Gate energy-reliability curve eps(E), strictly decreasing in E.

    kinds: exponential eps = exp(-c E); polynomial eps = E^-c;
    subexponential eps = exp(-c sqrt(E)).  Natural log throughout.
    """

    kind: str
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "polynomial", "subexponential"):
            raise ValueError(f"unknown energy model kind {self.kind!r}")
        if self.c <= 0:
            raise ValueError("rate c must be positive")

    def error(self, E):
        """energy -> flip probability."""
        if E <= 0:
            raise ValueError("energy must be positive")
        if self.kind == "exponential":
            return math.exp(-self.c * E)
        if self.kind == "polynomial":
            return E ** (-self.c)
        return math.exp(-self.c * math.sqrt(E))

    def energy(self, p):
        """flip probability -> required energy."""
        if not (0.0 < p < 0.5):
            raise ValueError(f"target probability {p} outside (0, 0.5)")
        if self.kind == "exponential":
            return math.log(1.0 / p) / self.c
        if self.kind == "polynomial":
            return p ** (-1.0 / self.c)
        return (math.log(1.0 / p) / self.c) ** 2


def error_to_energy(model, p):
    return model.energy(p)


def energy_to_error(model, E):
    return model.error(E)
