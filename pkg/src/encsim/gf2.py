"""Dense linear algebra over GF(2).

Bit vectors and matrices are carried as numpy uint8 arrays holding 0/1
values.  Everything here is exact and deterministic; the only contract is
bit-exactness, so no attempt is made at word-packing tricks.
"""

import numpy as np


class DimensionError(ValueError):
    pass


class RankDeficiencyError(ValueError):
    def __init__(self, rank, rows):
        self.rank = rank
        self.rows = rows
        super().__init__(
            f"parity-check matrix is rank-deficient: rank {rank} < {rows} rows"
        )


def as_bits(a):
    """Coerce to a uint8 0/1 array, validating values."""
    arr = np.asarray(a, dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("entries must be 0 or 1")
    return arr


def mat_vec(s, A):
    """r = s * A over GF(2).  s has length L, A is L x K."""
    s = as_bits(s)
    A = as_bits(A)
    if s.ndim != 1 or A.ndim != 2 or s.shape[0] != A.shape[0]:
        raise DimensionError(f"shape mismatch: s {s.shape} vs A {A.shape}")
    return (s @ A.astype(np.int64) % 2).astype(np.uint8)


def mat_mat(A, G):
    """A * G over GF(2).  A is L x K, G is K x N."""
    A = as_bits(A)
    G = as_bits(G)
    if A.ndim != 2 or G.ndim != 2 or A.shape[1] != G.shape[0]:
        raise DimensionError(f"shape mismatch: A {A.shape} vs G {G.shape}")
    return (A.astype(np.int64) @ G.astype(np.int64) % 2).astype(np.uint8)


def rank(M):
    """GF(2) rank by Gaussian elimination."""
    M = as_bits(M).copy()
    if M.ndim != 2:
        raise DimensionError("rank expects a matrix")
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivots = np.nonzero(M[r:, c])[0]
        if pivots.size == 0:
            continue
        p = r + pivots[0]
        if p != r:
            M[[r, p]] = M[[p, r]]
        hit = np.nonzero(M[:, c])[0]
        hit = hit[hit != r]
        M[hit] ^= M[r]
        r += 1
    return r


def _rref(M):
    """Reduced row echelon form over GF(2); returns (R, pivot column list)."""
    R = as_bits(M).copy()
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(R[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        others = np.nonzero(R[:, c])[0]
        others = others[others != r]
        R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def systematic_generator(H, allow_deficient=False):
    """Systematic generator G with G * H^T = 0.

    Returns (G, perm) where perm is a column permutation of H such that
    G[:, perm] = [I | parity part].  G is returned in H's original column
    order.  If H has rank r < P, a RankDeficiencyError is raised unless
    allow_deficient is set, in which case G has N - r rows (the full dual
    dimension) and callers may truncate.
    """
    H = as_bits(H)
    P, N = H.shape
    R, pivots = _rref(H)
    r = len(pivots)
    if r < P and not allow_deficient:
        raise RankDeficiencyError(r, P)
    pivots = np.asarray(pivots, dtype=np.int64)
    free = np.setdiff1d(np.arange(N), pivots)
    k = N - r
    # codeword with 1 at free column f: pivot column p_i takes R[i, f]
    G = np.zeros((k, N), dtype=np.uint8)
    G[np.arange(k), free] = 1
    if r:
        G[:, pivots] = R[:r, free].T
    perm = np.concatenate([free, pivots]).astype(np.int64)
    return G, perm


def format_matrix(M):
    """Text format: first line 'rows cols', then one 0/1 string per row."""
    M = as_bits(M)
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    for row in M:
        lines.append("".join("1" if b else "0" for b in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text):
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    rows, cols = (int(t) for t in lines[0].split())
    if len(lines) - 1 != rows:
        raise ValueError(f"expected {rows} rows, got {len(lines) - 1}")
    M = np.zeros((rows, cols), dtype=np.uint8)
    for i, ln in enumerate(lines[1:]):
        if len(ln) != cols or set(ln) - {"0", "1"}:
            raise ValueError(f"bad row {i}: {ln!r}")
        M[i] = np.frombuffer(ln.encode(), dtype=np.uint8) - ord("0")
    return M


def write_matrix(path, M):
    with open(path, "w") as fh:
        fh.write(format_matrix(M))


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read())
