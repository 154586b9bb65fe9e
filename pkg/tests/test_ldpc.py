"""Code sampling, girth, generator construction, alist I/O, assumption checks."""

import numpy as np
import pytest

from encsim import gf2, ldpc


def test_sample_degrees_and_handshake():
    graph = ldpc.sample_regular_code(40, 4, 8, seed=1)
    assert graph.N == 40 and graph.P == 20 and graph.E == 160
    H = graph.parity_check_matrix()
    assert (H.sum(axis=0) == 4).all()
    assert (H.sum(axis=1) == 8).all()
    assert graph.N * graph.d_v == graph.P * graph.d_c
    # no parallel edges: every (variable, check) pair appears at most once
    pairs = set(zip(graph.edge_var.tolist(), graph.edge_check.tolist()))
    assert len(pairs) == graph.E
    # port tables are mutually consistent
    assert np.array_equal(np.sort(graph.check_edges.ravel()),
                          np.arange(graph.E))


def test_sample_determinism():
    g1 = ldpc.sample_regular_code(40, 4, 8, seed=6)
    g2 = ldpc.sample_regular_code(40, 4, 8, seed=6)
    g3 = ldpc.sample_regular_code(40, 4, 8, seed=7)
    assert np.array_equal(g1.edge_check, g2.edge_check)
    assert not np.array_equal(g1.edge_check, g3.edge_check)


def test_sample_validation():
    with pytest.raises(ValueError):
        ldpc.sample_regular_code(10, 3, 4, seed=0)  # 30 not divisible by 4
    with pytest.raises(ValueError):
        ldpc.sample_regular_code(8, 1, 2, seed=0)


def test_sample_infeasible_4cycle_free():
    # N*C(d_v,2) pairs cannot all be distinct among C(P,2) check pairs
    with pytest.raises(ldpc.SamplerError):
        ldpc.sample_regular_code(40, 4, 8, seed=0, forbid_4cycles=True,
                                 max_retries=200)


def test_girth_four_cycle_and_cap(code48_girth6):
    # two variables sharing two checks: girth 4
    H = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    assert ldpc.girth(ldpc.graph_from_H(H)) == 4
    g = code48_girth6.graph
    assert ldpc.girth(g) == 6
    assert ldpc.girth(g, cap=6) is None  # only cycles shorter than cap count


def test_girth_matches_networkx(code48, code612, code48_girth6):
    nx = pytest.importorskip("networkx")
    for spec in (code48, code612, code48_girth6):
        g = spec.graph
        G = nx.Graph()
        for v in range(g.N):
            for c in g.var_checks()[v]:
                G.add_edge(("v", v), ("c", int(c)))
        assert ldpc.girth(g) == nx.girth(G)


def test_build_code_generator(code48):
    spec = code48
    assert spec.K == spec.N - spec.P == 16
    assert not gf2.mat_mat(spec.G, spec.H.T).any()
    # systematic: identity on the message columns
    assert np.array_equal(spec.G[:, spec.sys_cols],
                          np.eye(spec.K, dtype=np.uint8))
    assert gf2.rank(spec.G) == spec.K


def test_encode_linearity_and_syndrome(code48, rng):
    spec = code48
    r1 = rng.integers(0, 2, size=spec.K, dtype=np.uint8)
    r2 = rng.integers(0, 2, size=spec.K, dtype=np.uint8)
    assert np.array_equal(ldpc.encode(spec, r1 ^ r2),
                          ldpc.encode(spec, r1) ^ ldpc.encode(spec, r2))
    for k in (0, spec.K - 1):
        e = np.zeros(spec.K, dtype=np.uint8)
        e[k] = 1
        assert np.array_equal(ldpc.encode(spec, e), spec.G[k])
    cw = ldpc.encode(spec, r1)
    assert not ldpc.syndrome(spec, cw).any()
    flipped = cw.copy()
    flipped[5] ^= 1
    assert np.array_equal(ldpc.syndrome(spec, flipped), spec.H[:, 5])
    with pytest.raises(gf2.DimensionError):
        ldpc.encode(spec, np.zeros(spec.K + 1, dtype=np.uint8))


def test_alist_round_trip(tmp_path, code48):
    path = tmp_path / "code.alist"
    ldpc.write_alist(path, code48.H)
    assert np.array_equal(ldpc.read_alist(path), code48.H)


def test_graph_from_H_round_trip(code48):
    g2 = ldpc.graph_from_H(code48.H)
    assert np.array_equal(g2.parity_check_matrix(), code48.H)
    with pytest.raises(ValueError):
        ldpc.graph_from_H(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 0]],
                                   dtype=np.uint8))


def test_a3_check_exhaustive_single_errors():
    # weight-1 patterns, enumerated exhaustively on a 4-cycle-free code:
    # every single error leaves d_v unsatisfied checks and no clean variable
    # sees more than one, so one iteration corrects it exactly
    spec = ldpc.sample_code(30, 3, 6, seed=4, forbid_4cycles=True)
    rep = ldpc.empirical_a3_check(spec, alpha0=0.04, theta=0.9)
    assert rep.exhaustive and rep.weight == 1 and rep.samples == spec.N
    assert rep.min_reduction == 1.0 and rep.passed


def test_a3_check_vacuous_and_validation(code48):
    rep = ldpc.empirical_a3_check(code48, alpha0=0.01, theta=0.5)
    assert rep.vacuous and rep.passed  # floor(alpha0 * N) == 0
    with pytest.raises(ValueError):
        ldpc.empirical_a3_check(code48, alpha0=0.0, theta=0.5)


def test_check_assumptions(code48_girth6):
    entries = {e.name: e for e in
               ldpc.check_assumptions(code48_girth6, D=16, L=64, d_T=2)}
    assert entries["degree-fan-in"].status == "pass"
    assert entries["min-variable-degree"].status == "pass"
    assert "tree-depth" in entries
    assert entries["girth-target"].status in ("pass", "warn")
    # too-small fan-in bound flips the degree check
    entries = {e.name: e for e in ldpc.check_assumptions(code48_girth6, D=3)}
    assert entries["degree-fan-in"].status == "fail"


def test_girth_bound_value():
    # monotone increasing in N, and finite
    b1 = ldpc.girth_bound(1000, 6, 12)
    b2 = ldpc.girth_bound(4000, 6, 12)
    assert 0 < b1 < b2


def test_write_manifest(tmp_path, code48):
    path = tmp_path / "code.manifest"
    ldpc.write_manifest(path, code48)
    text = path.read_text()
    assert f"N {code48.N}" in text and f"K {code48.K}" in text
    assert "girth" in text and "permutation" in text
