"""The computation schemes.

Every scheme computes r = s*A (L-input, K-output binary linear transform)
out of unreliable AND / XOR / majority gates, differing in how (or whether)
errors are suppressed along the way:

  run_encoded     staged accumulation on an N-bit codeword register with one
                  noisy decoder iteration per stage (message-passing or
                  bit-flipping, configured)
  run_encoded_t   tree of copy registers, one noisy message-passing decode
                  per non-leaf node
  run_encoded_f   grouped stages (d_s-1 rows at a time) with one noisy
                  bit-flipping iteration per stage; supports permanent-defect
                  hardware (Gate Model II)
  run_encoded_v   run_encoded_f at d_s=2 under a two-phase per-stage noise /
                  energy schedule
  run_uncoded     plain noisy dot products (no coding)
  run_distributed_voting
                  t_m replicated pipelines cross-voting every stage
  run_with_noiseless_cleanup
                  run_encoded_f followed by an exact bit-flipping decode,
                  tallied separately

Gate evaluation is vectorized; tallies are exact activation counts and are
asserted against the closed-form operation counts in the tests.  BER traces
compare the live register against a noiseless shadow trajectory.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis, decoders, gf2
from .noise import (DefectPlacement, GateTally, NoiseSpec, NoiseStream,
                    apply_modes)


@dataclass
class TreeNode:
    id: int
    level: int
    # children: list of ("node", node_id) or ("leaf", row_index)
    children: list = field(default_factory=list)


@dataclass
class TreePlan:
    L: int
    d_T: int
    M: int
    nodes: list
    root: int = 0

    @property
    def nonleaf_count(self):
        return len(self.nodes)

    def processing_order(self):
        """Non-leaf node ids deepest level first (children before parents)."""
        return sorted(range(len(self.nodes)),
                      key=lambda i: -self.nodes[i].level)


def plan_tree(L, d_T):
    """Lay out the accumulation tree: complete down to level M-1, bottom
    level sized so the leaf count is exactly L, leaves numbered left to
    right in depth-first order."""
    if L < 2:
        raise ValueError("tree layout needs L >= 2")
    if d_T < 2:
        raise ValueError("branch width d_T must be >= 2")
    # M-1 = smallest integer with d_T^(M-1) >= L, by exact integer arithmetic
    depth, power = 0, 1
    while power < L:
        power *= d_T
        depth += 1
    M = depth + 1

    nodes = [TreeNode(id=0, level=1)]
    level_nodes = [0]
    for level in range(1, M - 1):
        nxt = []
        for nid in level_nodes:
            for _ in range(d_T):
                child = TreeNode(id=len(nodes), level=level + 1)
                nodes.append(child)
                node_children = nodes[nid].children
                node_children.append(("node", child.id))
                nxt.append(child.id)
        level_nodes = nxt

    # level M-1 nodes: convert the first t to internal nodes holding leaves,
    # the rest are themselves leaves (rows of the transform)
    base = len(level_nodes)
    need = L - base
    keep = []
    if need > 0:
        t = -(-need // (d_T - 1))
        for idx, nid in enumerate(level_nodes):
            if idx < t - 1:
                n_child = d_T
            elif idx == t - 1:
                n_child = (need - (t - 1) * (d_T - 1)) + 1
            else:
                keep.append(nid)
                continue
            for _ in range(n_child):
                nodes[nid].children.append(("leaf", None))
    elif need < 0:
        raise AssertionError("level sizing bug")  # cannot happen with exact M

    # nodes at level M-1 that stayed leaves: replace their entry in the
    # parent's child list with a leaf reference
    if M > 2 and keep:
        keep_set = set(keep)
        for node in nodes:
            node.children = [("leaf", None) if (k == "node" and r in keep_set)
                             else (k, r) for (k, r) in node.children]
        id_map = {}
        survivors = []
        for node in nodes:
            if node.id in keep_set:
                continue
            id_map[node.id] = len(survivors)
            survivors.append(node)
        for node in survivors:
            node.id = id_map[node.id]
            node.children = [(k, id_map[r] if k == "node" else r)
                             for (k, r) in node.children]
        nodes = survivors

    # assign leaf rows in depth-first left-to-right order
    counter = [0]

    def assign(nid):
        node = nodes[nid]
        out = []
        for kind, ref in node.children:
            if kind == "leaf":
                out.append(("leaf", counter[0]))
                counter[0] += 1
            else:
                out.append(("node", ref))
                assign(ref)
        node.children = out

    assign(0)
    if counter[0] != L:
        raise AssertionError(f"leaf assignment bug: {counter[0]} != {L}")
    expected = -(-(L - 1) // (d_T - 1))
    if len(nodes) != expected:
        raise AssertionError(f"non-leaf count {len(nodes)} != {expected}")
    return TreePlan(L=L, d_T=d_T, M=M, nodes=nodes)


@dataclass
class StageSchedule:
    """Two-phase voltage schedule: a long first phase at budget lam, then
    L_vs boosted stages at strictly decreasing budgets lambdas[i]."""

    L_vs: int
    lam: float
    lambdas: list
    energies: list = None  # per boosted stage, per-activation energy

    def stage_lambda(self, i, L):
        """Noise budget of 1-based stage i out of L total."""
        if i <= L - self.L_vs:
            return self.lam
        return self.lambdas[i - (L - self.L_vs) - 1]


@dataclass
class SchemeConfig:
    scheme: str
    A: np.ndarray
    code: object = None            # CodeSpec or None for uncoded/voting
    noise: NoiseSpec = None
    defects: DefectPlacement = None
    d_T: int = 2
    C: int = 1
    d_s: int = 2
    d_sp: int = 8
    t_m: int = 3
    c_e: float = 2.0
    decoder: str = "pbf"           # per-stage decoder for run_encoded
    pbf_tie_rule: str = "random"   # bit-flipping tie handling (or "keep")
    energy_model: object = None
    p_tar: float = None
    alpha0: float = None
    theta: float = None
    lvs_variant: str = "main-text"
    max_fan_in: int = None
    seed: int = 0

    def __post_init__(self):
        self.A = gf2.as_bits(self.A)
        if self.d_s < 2:
            raise ValueError("d_s must be >= 2")
        if self.C < 1:
            raise ValueError("decoder iteration count C must be >= 1")
        if self.pbf_tie_rule not in ("random", "keep"):
            raise ValueError(f"unknown tie rule {self.pbf_tie_rule!r}")
        if self.max_fan_in is not None:
            for name, val in (("d_T", self.d_T), ("d_s", self.d_s),
                              ("d_sp", self.d_sp), ("t_m", self.t_m)):
                if val > self.max_fan_in:
                    raise ValueError(f"{name}={val} exceeds fan-in bound "
                                     f"D={self.max_fan_in}")
            if self.code is not None:
                g = self.code.graph
                if g.d_v > self.max_fan_in or g.d_c > self.max_fan_in:
                    raise ValueError("code degrees exceed fan-in bound")
        self._Gt = None

    @property
    def L(self):
        return self.A.shape[0]

    @property
    def K(self):
        return self.A.shape[1]

    def coded_rows(self):
        """G~ = A*G, the L codeword rows accumulated by the coded schemes."""
        if self._Gt is None:
            if self.code is None:
                raise ValueError("scheme requires a code")
            if self.code.K != self.K:
                raise gf2.DimensionError(
                    f"A has {self.K} columns but code carries K={self.code.K}")
            self._Gt = gf2.mat_mat(self.A, self.code.G)
        return self._Gt


@dataclass
class StagePoint:
    label: str
    ber: float
    n_bits: int


@dataclass
class RunResult:
    scheme: str
    r_hat: np.ndarray
    x_hat: np.ndarray
    trace: list
    tally: GateTally
    noiseless_tally: GateTally = None
    energy: float = None
    stage_energies: list = None
    block_error: bool = None
    error_fraction: float = None
    extra: dict = field(default_factory=dict)


def _stream_for(config, trial):
    return NoiseStream(config.seed, trial)


def _finish(config, scheme, s, r_hat, x_hat, trace, tally, **kw):
    r_true = gf2.mat_vec(s, config.A)
    frac = float(np.mean(r_hat != r_true))
    return RunResult(scheme=scheme, r_hat=r_hat, x_hat=x_hat, trace=trace,
                     tally=tally, block_error=bool(frac > 0),
                     error_fraction=frac, **kw)


# ---------------------------------------------------------------------------
# staged codeword-register scheme (one decoder iteration per input row)

def run_encoded(config, s, trial=0, inject_add_flips=None):
    """Accumulate one row of G~ per stage on an N-bit codeword register,
    decoding after every add.  inject_add_flips is a test/diagnostic hook:
    {stage index: flip mask} applied after that stage's add."""
    s = gf2.as_bits(s)
    stream = _stream_for(config, trial)
    spec = config.code
    graph = spec.graph
    Gt = config.coded_rows()
    noise = config.noise
    tally = GateTally()
    N = spec.N
    x = np.zeros(N, dtype=np.uint8)
    ref = np.zeros(N, dtype=np.uint8)
    trace = []
    p_and = noise.p_and if noise else 0.0
    p_xor = noise.p_xor if noise else 0.0
    for l in range(config.L):
        correct = (s[l] & Gt[l]).astype(np.uint8)
        prod = correct ^ stream.flips(p_and, N)
        tally.add("and", 2, N)
        x = x ^ prod ^ stream.flips(p_xor, N)
        tally.add("xor", 2, N)
        if inject_add_flips and l in inject_add_flips:
            x = x ^ gf2.as_bits(inject_add_flips[l])
        ref = ref ^ correct
        trace.append(StagePoint(f"S{l}-add", float(np.mean(x != ref)), N))
        if config.decoder == "pbf":
            x = decoders.pbf_iteration(graph, x, noise, None, stream, tally,
                                       tie_rule=config.pbf_tie_rule)
        elif config.decoder == "gb":
            state = decoders.MessageState(v2c=np.repeat(x, graph.d_v))
            for _ in range(config.C):
                state = decoders.gb_iteration(graph, state, noise, stream, tally)
            x = decoders.extract_word(graph, state, stream)
        else:
            raise ValueError(f"unknown decoder {config.decoder!r}")
        trace.append(StagePoint(f"S{l}-dec", float(np.mean(x != ref)), N))
    r_hat = x[spec.sys_cols]
    return _finish(config, "encoded", s, r_hat, x, trace, tally)


# ---------------------------------------------------------------------------
# tree scheme

def _leaf_register(s_l, row, d_v, p_and, stream, tally):
    """d_v copies of s_l AND row, one noisy AND per copy bit."""
    correct = (s_l & row).astype(np.uint8)
    reg = np.repeat(correct, d_v)
    reg ^= stream.flips(p_and, reg.shape[0])
    tally.add("and", 2, reg.shape[0])
    return reg, correct


def run_encoded_t(config, s, trial=0):
    """Tree accumulation over E-bit copy registers: leaves are noisy-AND
    copies of the rows, every non-leaf XORs its children copy-wise and runs
    C noisy message-passing iterations; the root output is read by random
    copy selection."""
    s = gf2.as_bits(s)
    stream = _stream_for(config, trial)
    spec = config.code
    graph = spec.graph
    Gt = config.coded_rows()
    noise = config.noise
    d_v = graph.d_v
    E = graph.E
    plan = plan_tree(config.L, config.d_T)
    tally = GateTally()
    p_and = noise.p_and if noise else 0.0
    p_xor = noise.p_xor if noise else 0.0

    regs = {}
    refs = {}
    # per-level accumulators: sums of post-xor / post-decode BER over nodes
    lv_xor = {}
    lv_dec = {}
    lv_n = {}
    for nid in plan.processing_order():
        node = plan.nodes[nid]
        child_regs = []
        ref = np.zeros(spec.N, dtype=np.uint8)
        for kind, r in node.children:
            if kind == "leaf":
                reg, cref = _leaf_register(s[r], Gt[r], d_v, p_and, stream, tally)
            else:
                reg = regs.pop(r)
                cref = refs.pop(r)
            child_regs.append(reg)
            ref ^= cref
        acc = child_regs[0]
        for reg in child_regs[1:]:
            acc = acc ^ reg
        acc = acc ^ stream.flips(p_xor, E)
        tally.add("xor", len(node.children), E)
        ref_edges = np.repeat(ref, d_v)
        lv = node.level
        lv_xor[lv] = lv_xor.get(lv, 0.0) + float(np.mean(acc != ref_edges))
        state = decoders.MessageState(v2c=acc)
        for _ in range(config.C):
            state = decoders.gb_iteration(graph, state, noise, stream, tally)
        acc = state.v2c
        lv_dec[lv] = lv_dec.get(lv, 0.0) + float(np.mean(acc != ref_edges))
        lv_n[lv] = lv_n.get(lv, 0) + 1
        regs[nid] = acc
        refs[nid] = ref

    root_state = decoders.MessageState(v2c=regs[plan.root])
    x_hat = decoders.extract_word(graph, root_state, stream)
    r_hat = x_hat[spec.sys_cols]
    trace = []
    for lv in sorted(lv_n, reverse=True):  # bottom level first
        n = lv_n[lv]
        trace.append(StagePoint(f"L{lv}-xor", lv_xor[lv] / n, n * E))
        trace.append(StagePoint(f"L{lv}-dec", lv_dec[lv] / n, n * E))
    res = _finish(config, "encoded-t", s, r_hat, x_hat, trace, tally)
    res.extra["tree_levels"] = plan.M
    res.extra["nonleaf_nodes"] = plan.nonleaf_count
    return res


# ---------------------------------------------------------------------------
# grouped-stage scheme (bit-flipping per stage; supports permanent defects)

def _pbf_defect_view(defects, N, P):
    if defects is None:
        return None
    modes = {}
    if "xor" in defects.modes:
        modes["xor"] = defects.modes["xor"][N:N + P]
    if "maj" in defects.modes:
        modes["maj"] = defects.modes["maj"][:N]
    return DefectPlacement(counts={k: len(v) for k, v in modes.items()},
                           modes=modes)


def encoded_f_defect_counts(N, P, d_s):
    """Gate instance pools for Model-II hardware reuse: (d_s-1)*N ANDs,
    N accumulate + P parity XORs, N decision gates."""
    return {"and": (d_s - 1) * N, "xor": N + P, "maj": N}


def run_encoded_f(config, s, trial=0, schedule=None):
    """Grouped staged accumulation: d_s-1 rows of G~ per stage, one noisy
    bit-flipping iteration after each accumulate.  With a DefectPlacement,
    gate instances keep their defect mode across all stages.  schedule (used
    by the voltage-scaled variant) overrides the flip probability per stage
    and charges energy."""
    s = gf2.as_bits(s)
    stream = _stream_for(config, trial)
    spec = config.code
    graph = spec.graph
    Gt = config.coded_rows()
    d_s = config.d_s
    N, P = spec.N, spec.P
    tally = GateTally()
    defects = config.defects
    pbf_defects = _pbf_defect_view(defects, N, P)
    n_stages = -(-config.L // (d_s - 1))
    x = np.zeros(N, dtype=np.uint8)
    ref = np.zeros(N, dtype=np.uint8)
    trace = []
    stage_energies = [] if schedule is not None else None
    total_energy = 0.0 if schedule is not None else None
    for i in range(n_stages):
        a = i * (d_s - 1)
        b = min(config.L, a + (d_s - 1))
        g = b - a
        if schedule is not None:
            lam = schedule.stage_lambda(i + 1, n_stages)
            noise = NoiseSpec(lam, lam, lam)
            e_act = (config.energy_model.energy(lam)
                     if lam > 0 and config.energy_model else math.inf)
            e_stage = (2 * N + (N + P)) * e_act
            stage_energies.append(e_stage)
            total_energy += e_stage
        else:
            noise = config.noise
        p_and = noise.p_and if noise else 0.0
        p_xor = noise.p_xor if noise else 0.0
        correct = (s[a:b, None] & Gt[a:b]).astype(np.uint8)  # (g, N)
        prods = correct
        if defects is not None and "and" in defects.modes:
            modes = defects.modes["and"][:g * N].reshape(g, N)
            prods = apply_modes(prods, modes)
        prods = prods ^ stream.flips(p_and, (g, N))
        tally.add("and", 2, g * N)
        acc = x ^ np.bitwise_xor.reduce(prods, axis=0)
        if defects is not None and "xor" in defects.modes:
            acc = apply_modes(acc, defects.modes["xor"][:N])
        acc = acc ^ stream.flips(p_xor, N)
        tally.add("xor", g + 1, N)
        ref = ref ^ np.bitwise_xor.reduce(correct, axis=0)
        trace.append(StagePoint(f"S{i}-add", float(np.mean(acc != ref)), N))
        x = decoders.pbf_iteration(graph, acc, noise, pbf_defects, stream,
                                   tally, tie_rule=config.pbf_tie_rule)
        trace.append(StagePoint(f"S{i}-dec", float(np.mean(x != ref)), N))
    r_hat = x[spec.sys_cols]
    res = _finish(config, "encoded-f", s, r_hat, x, trace, tally,
                  energy=total_energy, stage_energies=stage_energies)
    res.extra["n_stages"] = n_stages
    return res


# ---------------------------------------------------------------------------
# voltage-scaled variant

def build_schedule(config, zero_noise=False):
    """Two-phase schedule for the voltage-scaled run (d_s = 2: one row per
    stage, L stages total)."""
    if zero_noise:
        return StageSchedule(L_vs=0, lam=0.0, lambdas=[])
    if config.p_tar is None or config.alpha0 is None or config.theta is None:
        raise ValueError("voltage-scaled run needs p_tar, alpha0, theta")
    if config.p_tar >= config.alpha0:
        raise ValueError(
            f"p_tar={config.p_tar} >= alpha0={config.alpha0}: the boosted "
            "phase is degenerate")
    d_c = config.code.graph.d_c
    R = config.code.graph.rate
    L_vs = analysis.l_vs(config.p_tar, config.alpha0, config.theta,
                         variant=config.lvs_variant)
    if L_vs >= config.L:
        raise ValueError(f"boosted phase L_vs={L_vs} needs L > L_vs "
                         f"(have L={config.L})")
    lam = analysis.lambda_first_phase(config.alpha0, config.theta, d_c, R)
    lambdas = [analysis.lambda_schedule(i, config.alpha0, config.theta, d_c, R)
               for i in range(1, L_vs + 1)]
    energies = None
    if config.energy_model is not None:
        energies = [config.energy_model.energy(l) for l in lambdas]
    return StageSchedule(L_vs=L_vs, lam=lam, lambdas=lambdas, energies=energies)


def run_encoded_v(config, s, trial=0, zero_noise=False):
    """Grouped scheme at d_s=2 under the two-phase noise/energy schedule.
    zero_noise forces all flip probabilities to 0 (energies unbounded)."""
    if config.d_s != 2:
        raise ValueError("voltage-scaled runs use d_s = 2")
    schedule = build_schedule(config, zero_noise=zero_noise)
    res = run_encoded_f(config, s, trial=trial, schedule=schedule)
    res.scheme = "encoded-v"
    res.extra["L_vs"] = schedule.L_vs
    res.extra["first_phase_lambda"] = schedule.lam
    return res


# ---------------------------------------------------------------------------
# baselines

def run_uncoded(config, s, trial=0):
    """Plain noisy dot products: per output bit, L AND gates and a balanced
    fan-in-2 XOR reduction (L-1 gates).  Gate flips propagate through XOR
    linearly, so the output equals the true bit XOR the parity of all 2L-1
    per-gate flips regardless of tree wiring; the simulation draws exactly
    those flips."""
    s = gf2.as_bits(s)
    stream = _stream_for(config, trial)
    noise = config.noise
    K, L = config.K, config.L
    correct = gf2.mat_vec(s, config.A)
    p_and = noise.p_and if noise else 0.0
    p_xor = noise.p_xor if noise else 0.0
    and_par = stream.flips(p_and, (K, L)).sum(axis=1) % 2
    xor_par = stream.flips(p_xor, (K, L - 1)).sum(axis=1) % 2 if L > 1 else 0
    r_hat = (correct ^ and_par ^ xor_par).astype(np.uint8)
    tally = GateTally()
    tally.add("and", 2, K * L)
    tally.add("xor", 2, K * (L - 1))
    trace = [StagePoint("S0", float(np.mean(r_hat != correct)), K)]
    return _finish(config, "uncoded", s, r_hat, None, trace, tally)


def run_distributed_voting(config, s, trial=0):
    """t_m replicated accumulation pipelines over the raw K outputs; every
    stage each copy folds in d_sp-1 new product terms, then t_m noisy
    majority gates (one per copy) vote across the copies and each voter
    output seeds one copy's next stage."""
    s = gf2.as_bits(s)
    stream = _stream_for(config, trial)
    noise = config.noise
    t_m, d_sp = config.t_m, config.d_sp
    K, L = config.K, config.L
    p_and = noise.p_and if noise else 0.0
    p_xor = noise.p_xor if noise else 0.0
    p_maj = noise.p_maj if noise else 0.0
    tally = GateTally()
    copies = np.zeros((t_m, K), dtype=np.uint8)
    ref = np.zeros(K, dtype=np.uint8)
    n_stages = -(-L // (d_sp - 1))
    trace = []
    for i in range(n_stages):
        a = i * (d_sp - 1)
        b = min(L, a + (d_sp - 1))
        g = b - a
        correct = (s[a:b, None] & config.A[a:b]).astype(np.uint8)  # (g, K)
        prods = correct[None] ^ stream.flips(p_and, (t_m, g, K))
        tally.add("and", 2, t_m * g * K)
        acc = copies ^ np.bitwise_xor.reduce(prods, axis=1)
        acc = acc ^ stream.flips(p_xor, (t_m, K))
        tally.add("xor", g + 1, t_m * K)
        ones = acc.sum(axis=0)
        vote = np.where(2 * ones > t_m, 1, 0).astype(np.uint8)
        voted = np.broadcast_to(vote, (t_m, K)).copy()
        if t_m % 2 == 0:
            tie = 2 * ones == t_m
            if tie.any():
                voted[:, tie] = stream.bits((t_m, int(tie.sum())))
        voted = voted ^ stream.flips(p_maj, (t_m, K))
        tally.add("maj", t_m, t_m * K)
        copies = voted
        ref = ref ^ np.bitwise_xor.reduce(correct, axis=0)
        trace.append(StagePoint(f"S{i}", float(np.mean(copies != ref)), t_m * K))
    r_hat = copies[0]
    return _finish(config, "voting", s, r_hat, None, trace, tally)


def run_with_noiseless_cleanup(config, s, trial=0):
    """Grouped-stage run followed by a full exact bit-flipping decode; the
    cleanup's operations are tallied separately as noiseless work."""
    res = run_encoded_f(config, s, trial=trial)
    stream = NoiseStream(config.seed, None if trial is None else trial + (1 << 32))
    noiseless = GateTally()
    x_clean, iters = decoders.pbf_decode_noiseless(
        config.code.graph, res.x_hat, config.c_e, stream, noiseless)
    r_hat = x_clean[config.code.sys_cols]
    r_true = gf2.mat_vec(s, config.A)
    frac = float(np.mean(r_hat != r_true))
    res.scheme = "encoded-f+cleanup"
    res.x_hat = x_clean
    res.r_hat = r_hat
    res.noiseless_tally = noiseless
    res.block_error = bool(frac > 0)
    res.error_fraction = frac
    res.extra["cleanup_iterations"] = iters
    res.trace.append(StagePoint("cleanup", float(
        np.mean(x_clean != ldpc_ref(config, s))), config.code.N))
    return res


def ldpc_ref(config, s):
    """Noiseless reference codeword s * G~."""
    return gf2.mat_vec(gf2.as_bits(s), config.coded_rows())


RUNNERS = {
    "encoded": run_encoded,
    "encoded-t": run_encoded_t,
    "encoded-f": run_encoded_f,
    "encoded-v": run_encoded_v,
    "uncoded": run_uncoded,
    "voting": run_distributed_voting,
    "encoded-f+cleanup": run_with_noiseless_cleanup,
}


def run_scheme(config, s, trial=0):
    try:
        runner = RUNNERS[config.scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {config.scheme!r}") from None
    return runner(config, s, trial=trial)
