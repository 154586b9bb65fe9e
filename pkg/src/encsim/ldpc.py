"""(d_v,d_c)-regular LDPC code construction and validation.

Graphs come from a seeded configuration-model matching of variable sockets to
check sockets.  Offending structure (parallel edges, optionally 4-cycles) is
removed by deterministic socket swaps drawn from the same stream: plain
rejection sampling has vanishing acceptance probability at the degrees used
here, so repair is the only sampler that terminates.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .noise import NoiseStream


class SamplerError(RuntimeError):
    pass


@dataclass
class TannerGraph:
    """Bipartite (d_v,d_c)-regular code graph with ordered edge ports.

    Edges are numbered in variable-major order: edge e = v*d_v + j is
    variable v's port j.  check_edges[c, t] is the edge id on check c's
    port t; edge_check[e] is the check of edge e.
    """

    N: int
    P: int
    d_v: int
    d_c: int
    edge_check: np.ndarray
    check_edges: np.ndarray

    @property
    def E(self):
        return self.N * self.d_v

    @property
    def K(self):
        return self.N - self.P

    @property
    def rate(self):
        return (self.N - self.P) / self.N

    @property
    def edge_var(self):
        return np.arange(self.E) // self.d_v

    def var_checks(self):
        """(N, d_v) array: checks adjacent to each variable, port order."""
        return self.edge_check.reshape(self.N, self.d_v)

    def check_vars(self):
        """(P, d_c) array: variables adjacent to each check, port order."""
        return (self.check_edges // self.d_v).astype(np.int64)

    def parity_check_matrix(self):
        H = np.zeros((self.P, self.N), dtype=np.uint8)
        H[self.edge_check, np.arange(self.E) // self.d_v] = 1
        return H


def _find_parallel(edge_var, check_of, P):
    """Edge ids participating in parallel (duplicate) var-check pairs."""
    keys = edge_var.astype(np.int64) * P + check_of
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    dup = np.zeros(len(sk), dtype=bool)
    dup[1:] = sk[1:] == sk[:-1]
    return order[dup]


def _find_4cycle_edges(check_of, N, P, d_v):
    """One edge id per offending variable-pair sharing two checks."""
    cm = np.sort(check_of.reshape(N, d_v), axis=1)
    ii, jj = np.triu_indices(d_v, 1)
    a = cm[:, ii]
    b = cm[:, jj]
    valid = a != b  # equal means parallel edge, handled separately
    pair_keys = (a.astype(np.int64) * P + b)[valid]
    pair_vars = np.broadcast_to(np.arange(N)[:, None], a.shape)[valid]
    pair_a = a[valid]
    order = np.argsort(pair_keys, kind="stable")
    sk = pair_keys[order]
    dup = np.zeros(len(sk), dtype=bool)
    dup[1:] = sk[1:] == sk[:-1]
    bad = order[dup]
    out = []
    cm_orig = check_of.reshape(N, d_v)
    for t in bad:
        v = int(pair_vars[t])
        c = int(pair_a[t])
        j = int(np.nonzero(cm_orig[v] == c)[0][0])
        out.append(v * d_v + j)
    return np.asarray(out, dtype=np.int64)


def sample_regular_code(N, d_v, d_c, seed, max_retries=2000, forbid_4cycles=False):
    """Sample a simple (d_v,d_c)-regular Tanner graph, deterministic in seed.

    max_retries bounds the number of repair sweeps; each sweep swaps one
    random check socket per offending edge.
    """
    E = N * d_v
    if E % d_c != 0:
        raise ValueError(f"d_v*N = {E} not divisible by d_c = {d_c}")
    if d_v < 2 or d_c < 2:
        raise ValueError("degrees must be at least 2")
    P = E // d_c
    stream = NoiseStream(seed)
    pi = stream.permutation(E)  # var socket i <-> check socket pi[i]
    edge_var = np.arange(E) // d_v

    def count_bad(perm):
        check_of = perm // d_c
        bad = _find_parallel(edge_var, check_of, P)
        if forbid_4cycles:
            cyc = _find_4cycle_edges(check_of, N, P, d_v)
            bad = np.unique(np.concatenate([bad, cyc]))
        return bad

    # greedy annealed sweeps: propose one random partner swap per offending
    # edge, keep the sweep only if the offending count does not grow (blind
    # swapping random-walks around the ensemble mean and never reaches zero
    # at the denser parameter points)
    last_bad = count_bad(pi)
    for _ in range(max_retries):
        if last_bad.size == 0:
            break
        # fast path: swap every offending edge with a random partner at once
        trial_pi = pi.copy()
        partners = stream.integers(0, E, size=last_bad.size)
        for e, f in zip(last_bad.tolist(), partners.tolist()):
            trial_pi[e], trial_pi[f] = trial_pi[f], trial_pi[e]
        trial_bad = count_bad(trial_pi)
        if trial_bad.size <= last_bad.size:
            pi = trial_pi
            last_bad = trial_bad
            continue
        # batch rejected: try one single-edge swap (fine-grained descent)
        e = int(last_bad[stream.integers(0, last_bad.size)])
        f = int(stream.integers(0, E))
        pi[e], pi[f] = pi[f], pi[e]
        trial_bad = count_bad(pi)
        if trial_bad.size <= last_bad.size:
            last_bad = trial_bad
        else:
            pi[e], pi[f] = pi[f], pi[e]
    else:
        raise SamplerError(
            f"graph repair did not converge in {max_retries} sweeps "
            f"({last_bad.size} offending edges remain)"
        )
    edge_check = (pi // d_c).astype(np.int64)
    check_edges = np.argsort(pi, kind="stable").reshape(P, d_c)
    return TannerGraph(N=N, P=P, d_v=d_v, d_c=d_c,
                       edge_check=edge_check, check_edges=check_edges)


def girth(graph, cap=None):
    """Length of the shortest cycle by BFS from every variable node.

    Returns the girth as an int, or None when no cycle of length < cap was
    found (report as "girth >= cap").  With cap None the search is exhaustive
    and None means the graph is acyclic.
    """
    N, P = graph.N, graph.P
    vc = graph.var_checks()
    cv = graph.check_vars()
    best = cap if cap is not None else math.inf
    # vertices: 0..N-1 variables, N..N+P-1 checks
    for root in range(N):
        dist = {root: 0}
        parent = {root: -1}
        frontier = [root]
        found = None
        while frontier and found is None:
            nxt = []
            for u in frontier:
                du = dist[u]
                if 2 * du + 1 >= best:
                    break
                nbrs = vc[u] + N if u < N else cv[u - N]
                for w in nbrs:
                    w = int(w)
                    if w == parent[u]:
                        # parent on a simple graph: a single edge, skip once
                        continue
                    if w in dist:
                        cyc = du + dist[w] + 1
                        if found is None or cyc < found:
                            found = cyc
                    else:
                        dist[w] = du + 1
                        parent[w] = u
                        nxt.append(w)
            frontier = nxt
        if found is not None and found < best:
            best = found
            if best == 4:  # bipartite minimum; cannot improve
                break
    if best == (cap if cap is not None else math.inf):
        return None
    # bipartite graphs have even girth; BFS revisit count is exact at the min
    return int(best)


@dataclass
class CodeSpec:
    """A sampled code with its systematic generator and measured girth."""

    graph: TannerGraph
    H: np.ndarray
    G: np.ndarray
    perm: np.ndarray
    girth: object  # int or None ("ge cap")
    girth_cap: object
    seed: object = None

    @property
    def N(self):
        return self.graph.N

    @property
    def P(self):
        return self.graph.P

    @property
    def K(self):
        return self.G.shape[0]

    @property
    def sys_cols(self):
        """Columns carrying the K message bits (identity part of G)."""
        return self.perm[: self.K]

    def girth_text(self):
        if self.girth is None:
            return f">={self.girth_cap}" if self.girth_cap else "acyclic"
        return str(self.girth)


def build_code(graph, girth_cap=16, seed=None):
    """Assemble a CodeSpec: H from the graph, systematic G, measured girth.

    A (d_v even) regular H always has dependent rows (all column sums are
    even), so the generator is derived with rank deficiency allowed and
    truncated to K = N - P rows; the truncation keeps G * H^T = 0.
    """
    H = graph.parity_check_matrix()
    K = graph.N - graph.P
    try:
        G, perm = gf2.systematic_generator(H)
    except gf2.RankDeficiencyError:
        G, perm = gf2.systematic_generator(H, allow_deficient=True)
    if G.shape[0] < K:
        raise gf2.RankDeficiencyError(graph.N - G.shape[0], graph.P)
    G = G[:K]
    g = girth(graph, cap=girth_cap)
    return CodeSpec(graph=graph, H=H, G=G, perm=perm,
                    girth=g, girth_cap=girth_cap, seed=seed)


def sample_code(N, d_v, d_c, seed, forbid_4cycles=True, girth_cap=16, max_retries=2000):
    graph = sample_regular_code(N, d_v, d_c, seed, max_retries=max_retries,
                                forbid_4cycles=forbid_4cycles)
    return build_code(graph, girth_cap=girth_cap, seed=seed)


def encode(spec, r):
    """Message (K bits) -> systematic codeword (N bits)."""
    r = gf2.as_bits(r)
    if r.shape != (spec.K,):
        raise gf2.DimensionError(f"message length {r.shape} != K={spec.K}")
    return gf2.mat_vec(r, spec.G)


def syndrome(spec, x):
    x = gf2.as_bits(x)
    if x.shape != (spec.N,):
        raise gf2.DimensionError(f"word length {x.shape} != N={spec.N}")
    return gf2.mat_vec(x, spec.H.T)


@dataclass
class A3Report:
    """Sampling check of the one-iteration error-reduction property.

    This is a screening measurement over sampled (or exhaustively enumerated)
    error patterns, not a proof about the code.
    """

    weight: int
    samples: int
    exhaustive: bool
    min_reduction: float
    mean_reduction: float
    theta: float
    passed: bool
    vacuous: bool = False


def empirical_a3_check(spec, alpha0, theta, trials=200, seed=0):
    """Apply one noiseless bit-flipping iteration to weight-floor(alpha0*N)
    error patterns and measure the worst-case fractional error reduction."""
    from . import decoders  # local import: decoders has no ldpc dependency

    if not (0.0 < alpha0 < 1.0) or not (0.0 < theta < 1.0):
        raise ValueError("alpha0 and theta must lie in (0,1)")
    N = spec.N
    w = int(math.floor(alpha0 * N))
    if w == 0:
        return A3Report(weight=0, samples=0, exhaustive=True, min_reduction=1.0,
                        mean_reduction=1.0, theta=theta, passed=True, vacuous=True)
    stream = NoiseStream(seed)
    supports = []
    exhaustive = w <= 3 and N <= 40
    if exhaustive:
        from itertools import combinations

        supports = [np.asarray(s, dtype=np.int64) for s in combinations(range(N), w)]
    else:
        for _ in range(trials):
            supports.append(stream.rng.choice(N, size=w, replace=False))
    reductions = []
    for sup in supports:
        word = np.zeros(N, dtype=np.uint8)
        word[sup] = 1  # all-zero codeword plus the error pattern
        after = decoders.pbf_iteration(spec.graph, word, None, None, stream)
        reductions.append((w - int(after.sum())) / w)
    reductions = np.asarray(reductions)
    min_red = float(reductions.min())
    return A3Report(weight=w, samples=len(supports), exhaustive=exhaustive,
                    min_reduction=min_red, mean_reduction=float(reductions.mean()),
                    theta=theta, passed=min_red >= theta)


def girth_bound(N, d_v, d_c):
    """Logarithmic lower-bound target for the girth of a good code:
    l_g > 2 log N / log((d_v-1)(d_c-1)) - 2 c_g."""
    q = (d_v - 1) * (d_c - 1)
    c_g = 1.0 - math.log((d_c * d_v - d_c - d_v) / (2.0 * d_c)) / math.log(q)
    return 2.0 * math.log(N) / math.log(q) - 2.0 * c_g


@dataclass
class CheckEntry:
    name: str
    status: str  # pass / warn / fail
    detail: str


def check_assumptions(spec, D, L=None, d_T=None):
    """Report the structural assumptions: degree bounds, girth target, and
    the tree-depth condition (the last is a warning, not a failure)."""
    g = spec.graph
    entries = []
    ok = g.d_v <= D and g.d_c <= D
    entries.append(CheckEntry(
        "degree-fan-in", "pass" if ok else "fail",
        f"d_v={g.d_v}, d_c={g.d_c} vs gate fan-in bound D={D}"))
    entries.append(CheckEntry(
        "min-variable-degree", "pass" if g.d_v >= 4 else "fail",
        f"d_v={g.d_v} (tree scheme analysis needs d_v >= 4)"))
    bound = girth_bound(g.N, g.d_v, g.d_c)
    if spec.girth is None:
        status = "pass" if (spec.girth_cap or 0) > bound else "warn"
        measured = spec.girth_text()
    else:
        status = "pass" if spec.girth > bound else "warn"
        measured = str(spec.girth)
    entries.append(CheckEntry(
        "girth-target", status, f"measured girth {measured} vs target > {bound:.3f}"))
    if L is not None and d_T is not None:
        depth = math.ceil(math.log(L) / math.log(d_T))
        rhs = math.log(g.N) / (2.0 * math.log((g.d_v - 1) * (g.d_c - 1)))
        entries.append(CheckEntry(
            "tree-depth", "pass" if depth <= rhs else "warn",
            f"ceil(log L/log d_T) = {depth} vs log N/(2 log((d_v-1)(d_c-1))) = {rhs:.3f}"))
    return entries


# ---------------------------------------------------------------------------
# alist I/O (standard sparse parity-check interchange format)

def write_alist(path, H):
    H = gf2.as_bits(H)
    P, N = H.shape
    col_deg = H.sum(axis=0)
    row_deg = H.sum(axis=1)
    lines = [f"{N} {P}", f"{int(col_deg.max())} {int(row_deg.max())}"]
    lines.append(" ".join(str(int(d)) for d in col_deg))
    lines.append(" ".join(str(int(d)) for d in row_deg))
    for n in range(N):
        lines.append(" ".join(str(int(p) + 1) for p in np.nonzero(H[:, n])[0]))
    for p in range(P):
        lines.append(" ".join(str(int(n) + 1) for n in np.nonzero(H[p])[0]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_alist(path):
    with open(path) as fh:
        tokens = fh.read().split("\n")
    rows = [ln.split() for ln in tokens]
    N, P = int(rows[0][0]), int(rows[0][1])
    col_deg = [int(t) for t in rows[2]]
    H = np.zeros((P, N), dtype=np.uint8)
    for n in range(N):
        entries = [int(t) for t in rows[4 + n] if int(t) > 0]
        if len(entries) != col_deg[n]:
            raise ValueError(f"column {n}: degree mismatch")
        for p in entries:
            H[p - 1, n] = 1
    return H


def graph_from_H(H):
    """Build a TannerGraph from a regular parity-check matrix."""
    H = gf2.as_bits(H)
    P, N = H.shape
    col_deg = H.sum(axis=0)
    row_deg = H.sum(axis=1)
    d_v = int(col_deg[0])
    d_c = int(row_deg[0])
    if not ((col_deg == d_v).all() and (row_deg == d_c).all()):
        raise ValueError("matrix is not (d_v,d_c)-regular")
    edge_check = np.zeros(N * d_v, dtype=np.int64)
    for v in range(N):
        checks = np.nonzero(H[:, v])[0]
        edge_check[v * d_v:(v + 1) * d_v] = checks
    # group edges by check, port order = ascending variable
    order = np.argsort(edge_check, kind="stable")
    check_edges = order.reshape(P, d_c)
    return TannerGraph(N=N, P=P, d_v=d_v, d_c=d_c,
                       edge_check=edge_check, check_edges=check_edges)


def write_manifest(path, spec):
    with open(path, "w") as fh:
        fh.write(f"N {spec.N}\n")
        fh.write(f"P {spec.P}\n")
        fh.write(f"K {spec.K}\n")
        fh.write(f"d_v {spec.graph.d_v}\n")
        fh.write(f"d_c {spec.graph.d_c}\n")
        fh.write(f"seed {spec.seed}\n")
        fh.write(f"girth {spec.girth_text()}\n")
        fh.write("permutation " + " ".join(str(int(c)) for c in spec.perm) + "\n")
