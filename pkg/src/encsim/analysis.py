"""Closed-form analysis: density evolution, thresholds, operation counts,
probabilistic bounds, energy scaling and voltage schedules.

Everything here is a pure function of its arguments; natural logarithms
throughout.  Asymptotic claims are represented by their explicit finite
expressions -- nothing here asserts an asymptotic, it only evaluates the
formulas the analysis constructs.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .noise import xor_chain_error_prob


@dataclass(frozen=True)
class DEParams:
    """Density-evolution parameters for one message-passing iteration.

    tie_rule: "random-tie" matches the implemented decoder (fair bit on an
    exact split); "original" is the classic variant that keeps the current
    value, which needs the register error probability p0.
    """

    d_v: int
    d_c: int
    p_xor: float = 0.0
    p_maj: float = 0.0
    p0: float = None
    tie_rule: str = "random-tie"

    def __post_init__(self):
        if self.d_v < 2 or self.d_c < 2:
            raise ValueError("degrees must be at least 2")
        if self.tie_rule not in ("random-tie", "original"):
            raise ValueError(f"unknown tie rule {self.tie_rule!r}")
        for name in ("p_xor", "p_maj"):
            p = getattr(self, name)
            if not (0.0 <= p < 0.5):
                raise ValueError(f"{name}={p} outside [0, 0.5)")


@dataclass
class BoundReport:
    """Named scalar results, each recomputable from the recorded inputs."""

    name: str
    inputs: dict
    values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def to_rows(self):
        rows = []
        for key, val in self.values.items():
            rows.append({"report": self.name, "quantity": key, "value": val})
        return rows

    def to_text(self):
        lines = [f"[{self.name}]"]
        for k, v in self.inputs.items():
            lines.append(f"  in  {k} = {v}")
        for k, v in self.values.items():
            lines.append(f"  out {k} = {v}")
        for note in self.notes:
            lines.append(f"  # {note}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# density evolution

def _alpha_bar(u, d_c):
    """Probability a check-to-variable message is wrong given edge error u."""
    return (1.0 - (1.0 - 2.0 * u) ** (d_c - 1)) / 2.0


def _gamma_bar(u, d_c, p_xor):
    a = _alpha_bar(u, d_c)
    return (1.0 - p_xor) * a + p_xor * (1.0 - a)


def _lambda_terms(gamma, d_v):
    """Lambda_l = C(d_v-1, l) (1-gamma)^l gamma^(d_v-1-l), l = 0..d_v-1."""
    m = d_v - 1
    ls = np.arange(m + 1)
    return np.array([math.comb(m, int(l)) for l in ls]) \
        * (1.0 - gamma) ** ls * gamma ** (m - ls)


def de_step(p, params):
    """One iteration of the error-probability recursion:
    p' = p_maj + (1 - 2 p_maj) * eta(gamma(p))."""
    if not (0.0 <= p < 0.5):
        raise ValueError(f"p={p} outside [0, 0.5)")
    d_v, d_c = params.d_v, params.d_c
    b = (d_v + 1) // 2
    gamma = _gamma_bar(p, d_c, params.p_xor)
    lam = _lambda_terms(gamma, d_v)
    if params.tie_rule == "random-tie":
        eta = 0.5 * lam[: d_v - b].sum() + 0.5 * lam[:b].sum()
    else:
        if params.p0 is None:
            raise ValueError("original tie rule needs p0 (register error prob)")
        eta = (1.0 - params.p0) * lam[: d_v - b].sum() + params.p0 * lam[:b].sum()
    return float(params.p_maj + (1.0 - 2.0 * params.p_maj) * eta)


def de_step_upper(p, params):
    """Closed-form upper bound on de_step:
    f0(p) = p_maj + C(d_v-1, floor((d_v-1)/2)) * gamma0^ceil((d_v-1)/2)
    with gamma0 = (d_c-1) p + p_xor."""
    if not (0.0 <= p < 0.5):
        raise ValueError(f"p={p} outside [0, 0.5)")
    d_v, d_c = params.d_v, params.d_c
    gamma0 = (d_c - 1) * p + params.p_xor
    coef = math.comb(d_v - 1, (d_v - 1) // 2)
    return params.p_maj + coef * gamma0 ** math.ceil((d_v - 1) / 2)


def de_trajectory(p0, params, iters=200, tol=1e-12):
    """Iterate de_step from p0; returns (trajectory list, converged flag)."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    traj = [float(p0)]
    p = float(p0)
    for _ in range(iters):
        q = de_step(p, params)
        traj.append(q)
        if abs(q - p) < tol:
            return traj, True
        p = q
    return traj, False


# ---------------------------------------------------------------------------
# thresholds and sufficient conditions

def p_thr(d_v, d_c, d_T):
    """Decoding threshold for the tree scheme:
    C(d_v-1, floor((d_v-1)/2))^(-1/(d-1)) d_c^(-d/(d-1))
    d_T^(-1/(d-1)) (d_T+1)^(-d/(d-1)),   d = ceil((d_v-1)/2)."""
    d = math.ceil((d_v - 1) / 2)
    if d < 2:
        raise ValueError(f"d_v={d_v} gives d={d}; need d_v >= 4 so the "
                         "exponent 1/(d-1) is finite")
    coef = math.comb(d_v - 1, (d_v - 1) // 2)
    e1 = -1.0 / (d - 1)
    ed = -d / (d - 1)
    return coef ** e1 * d_c ** ed * d_T ** e1 * (d_T + 1) ** ed


def p_reg(p_xor, d_T, p_thr_value):
    """Worst-case register error probability entering any tree decode."""
    return p_xor + (d_T + 1) * p_thr_value


def check_thm1(noise, d_v, d_c, d_T, L, N):
    """Evaluate the sufficient conditions for bounded tree-scheme output
    error: the three gate-noise inequalities plus the depth condition."""
    pt = p_thr(d_v, d_c, d_T)
    conds = {
        "p_maj_bound": (noise.p_maj, pt),
        "p_xor_bound": (noise.p_xor, (d_T + 1) / d_c * pt),
        "p_and_bound": (noise.p_and, (d_T + 1) / d_T * pt),
    }
    rep = BoundReport(
        name="tree-scheme-sufficient-conditions",
        inputs={"d_v": d_v, "d_c": d_c, "d_T": d_T, "L": L, "N": N,
                "p_and": noise.p_and, "p_xor": noise.p_xor, "p_maj": noise.p_maj})
    rep.values["p_thr"] = pt
    rep.values["p_reg"] = p_reg(noise.p_xor, d_T, pt)
    all_ok = True
    for name, (val, bound) in conds.items():
        ok = val <= bound
        all_ok &= ok
        rep.values[name] = bound
        rep.values[name + "_margin"] = bound - val
        rep.values[name + "_pass"] = ok
    depth = math.ceil(math.log(L) / math.log(d_T))
    rhs = math.log(N) / (2.0 * math.log((d_v - 1) * (d_c - 1)))
    rep.values["depth_lhs"] = depth
    rep.values["depth_rhs"] = rhs
    rep.values["depth_pass"] = depth <= rhs
    rep.values["predicted_output_bound"] = noise.p_maj + pt / d_T
    rep.values["all_pass"] = bool(all_ok and depth <= rhs)
    if not all_ok:
        rep.notes.append("a gate-noise sufficient condition fails; the bound "
                         "is sufficient, not necessary")
    return rep


# ---------------------------------------------------------------------------
# operation counts (exact rationals)

def ops_closed_forms(L, K=None, N=None, P=None, d_v=None, d_T=None,
                     d_s=None, d_sp=None, t_m=None):
    """Exact per-bit operation counts for the schemes' closed forms.

    Emits whichever formulas the supplied parameters make applicable:
      tree scheme:   3E/K * ceil((L-1)/(d_T-1)) + L*E/K     (E = d_v*N)
      staged scheme: (2N+P)/K * ceil(L/(d_s-1)) + N*L/K
      effective counts (fan-in-weighted, per output bit):
        coded:  (2 d_s + d_c_eff...) -- reported for the configured degrees
        voting: t_m (d_sp + t_m)/(d_sp - 1) L + 2 t_m L
    """
    rep = BoundReport(name="operation-counts",
                      inputs={k: v for k, v in dict(
                          L=L, K=K, N=N, P=P, d_v=d_v, d_T=d_T, d_s=d_s,
                          d_sp=d_sp, t_m=t_m).items() if v is not None})
    L = int(L)
    if d_T is not None and None not in (K, N, d_v):
        E = d_v * N
        nonleaf = -(-(L - 1) // (d_T - 1))  # ceil
        rep.values["tree_per_bit"] = Fraction(3 * E * nonleaf + L * E, K)
    if d_s is not None and None not in (K, N, P):
        stages = -(-L // (d_s - 1))
        rep.values["staged_per_bit"] = Fraction((2 * N + P) * stages + N * L, K)
    if d_s is not None and N is not None and P is not None and d_v is not None:
        # effective (fan-in-weighted) count per bit for the rate-1/2 staged
        # scheme: d_s XOR + d_c parity XOR + d_v decision + 2(d_s-1) AND-2
        # gate inputs per stage block of d_s-1 dot-product terms
        d_c_eff = d_v * N // P
        num = Fraction(2 * d_s + d_c_eff + 2 * d_v, d_s - 1) + 4
        rep.values["effective_coded_per_bit"] = num * L
    if t_m is not None and d_sp is not None:
        num = Fraction(t_m * (d_sp + t_m), d_sp - 1) + 2 * t_m
        rep.values["effective_voting_per_bit"] = num * L
    rep.values["uncoded_per_bit"] = Fraction(2 * L - 1)
    return rep


# ---------------------------------------------------------------------------
# large-deviation machinery and block bounds

def kl_bernoulli(a, b):
    """D(a||b) = a ln(a/b) + (1-a) ln((1-a)/(1-b)) in nats."""
    if not (0.0 < a < 1.0) or not (0.0 < b < 1.0):
        raise ValueError("divergence arguments must lie in (0,1)")
    return a * math.log(a / b) + (1.0 - a) * math.log((1.0 - a) / (1.0 - b))


def lambda_star(lam):
    """Exponent of the per-stage doubling deviation: D(2 lam || lam)."""
    if not (0.0 < lam < 0.5):
        raise ValueError("lambda must lie in (0, 0.5)")
    return kl_bernoulli(2.0 * lam, lam)


def thm3_blocks(N, L, d_s, d_c, R, alpha0, theta):
    """Per-stage total-noise budget and the block-failure bound for the
    staged scheme under probabilistic gate noise:
    lambda = (theta alpha0 / 2) / ((d_s - 1) + (d_c (1-R) + 1) + 1),
    block bound < 3 L exp(-lambda* N)."""
    denom = (d_s - 1) + (d_c * (1.0 - R) + 1.0) + 1.0
    lam = (theta * alpha0 / 2.0) / denom
    rep = BoundReport(name="staged-scheme-block-bound",
                      inputs=dict(N=N, L=L, d_s=d_s, d_c=d_c, R=R,
                                  alpha0=alpha0, theta=theta))
    rep.values["denominator"] = denom
    rep.values["lambda"] = lam
    if lam > 0:
        ls = lambda_star(lam)
        rep.values["lambda_star"] = ls
        rep.values["block_bound"] = 3.0 * L * math.exp(-ls * N)
    else:
        rep.values["lambda_star"] = 0.0
        rep.values["block_bound"] = 3.0 * L
    # the worked (9,18), d_s=14 example's in-text constant uses /54 where the
    # displayed formula gives /(2*24) = /48; both exposed, discrepancy stands
    rep.values["lambda_text_constant"] = theta * alpha0 / 54.0
    rep.notes.append("lambda_text_constant reproduces the worked example's "
                     "in-text constant theta*alpha0/54, which differs from "
                     "the displayed formula's theta*alpha0/(2*denominator)")
    return rep


def thm4_lower_bound(L, K, D, eps, p_tar):
    """Information lower bound on unreliable operations per output bit:
    L ln(1/p_tar) / (K D ln(D/eps)), plus the per-input wire bound
    T_k > ln(1/p_tar)/ln(D/eps).  Requires the transform to have full row
    rank (flagged, not verified here)."""
    if not (0.0 < p_tar < 1.0):
        raise ValueError("p_tar must lie in (0,1)")
    if eps <= 0 or eps >= D:
        raise ValueError("need 0 < eps < D")
    rep = BoundReport(name="operations-lower-bound",
                      inputs=dict(L=L, K=K, D=D, eps=eps, p_tar=p_tar))
    wire = math.log(1.0 / p_tar) / math.log(D / eps)
    rep.values["per_bit_lower_bound"] = L * wire / (K * D)
    rep.values["wire_bound_T_k"] = wire
    rep.notes.append("valid when the transform matrix has full row rank")
    return rep


# ---------------------------------------------------------------------------
# uncoded baseline

def uncoded_ber(L, p_and, p_xor):
    """Exact output error of a length-L noisy dot product:
    (1 - (1-2 p_and)^L (1-2 p_xor)^(L-1)) / 2."""
    for p in (p_and, p_xor):
        if not (0.0 <= p < 0.5):
            raise ValueError(f"probability {p} outside [0, 0.5)")
    return 0.5 * (1.0 - (1.0 - 2.0 * p_and) ** L * (1.0 - 2.0 * p_xor) ** (L - 1))


def uncoded_energy_bound(model, L, p_tar):
    """Per-bit energy sufficient for the uncoded dot product to hit p_tar:
    run all 2L-1 gates at flip probability 2 p_tar / L, so the union bound
    gives output error < p_tar, and charge L * eps^-1(2 p_tar / L)."""
    if not (0.0 < p_tar < 1.0):
        raise ValueError("p_tar must lie in (0,1)")
    per_gate = min(2.0 * p_tar / L, 0.49)
    return L * model.energy(per_gate)


# ---------------------------------------------------------------------------
# voltage-scaling schedules

def l_vs(p_tar, alpha0, theta, variant="main-text"):
    """Number of boosted final stages needed to walk the error fraction from
    alpha0 down to p_tar: ceil((ln(1/p_tar) + ln alpha0)/ln(1/(1-theta/2))).
    The "appendix-f" variant targets p_tar/2 (numerator ln(2/p_tar))."""
    if not (0.0 < p_tar < alpha0):
        raise ValueError("need 0 < p_tar < alpha0")
    if not (0.0 < theta < 1.0):
        raise ValueError("theta must lie in (0,1)")
    if variant == "main-text":
        num = math.log(1.0 / p_tar) + math.log(alpha0)
    elif variant == "appendix-f":
        num = math.log(2.0 / p_tar) + math.log(alpha0)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return math.ceil(num / math.log(1.0 / (1.0 - theta / 2.0)))


def lambda_first_phase(alpha0, theta, d_c, R):
    """Per-gate noise budget during the long first phase:
    (theta alpha0 / 2) / ((d_c (1-R) + 1) + 2)   [d_s = 2]."""
    return (theta * alpha0 / 2.0) / ((d_c * (1.0 - R) + 1.0) + 2.0)


def lambda_schedule(i, alpha0, theta, d_c, R):
    """Per-gate noise budget of boosted stage i (i = 1..L_vs):
    (theta alpha0 (1-theta/2)^(i-1) / 4) / ((d_c (1-R) + 1) + 2)."""
    if i < 1:
        raise ValueError("stage index starts at 1")
    return (theta * alpha0 * (1.0 - theta / 2.0) ** (i - 1) / 4.0) \
        / ((d_c * (1.0 - R) + 1.0) + 2.0)


def energy_per_bit_v(model, schedule, N, P, K, L):
    """Exact per-bit energy of the two-phase schedule: each stage charges
    N AND + N decision + (N + P) XOR activations at that stage's budget."""
    first = (L - schedule.L_vs) * stage_energy(model, schedule.lam, N, P)
    second = sum(stage_energy(model, lam_i, N, P)
                 for lam_i in schedule.lambdas)
    return (first + second) / K


def stage_energy(model, lam, N, P):
    """Energy of one staged-scheme stage with every gate at flip prob lam."""
    e = model.energy(lam)
    return N * e + N * e + (N + P) * e


def corollary1_scaling(model, N, K, L, p_tar):
    """Concrete dominating per-bit energy expressions (unit prefactors) for
    the three designs under one energy model; used for the scaling-order
    comparison, not as exact energies."""
    if not (0.0 < p_tar < 1.0):
        raise ValueError("p_tar must lie in (0,1)")
    c = model.c
    x = math.log(1.0 / p_tar)
    ratio = N / K
    rep = BoundReport(name="energy-scaling",
                      inputs=dict(model=model.kind, c=c, N=N, K=K, L=L,
                                  p_tar=p_tar))
    if model.kind == "exponential":
        rep.values["uncoded"] = L * (math.log(L) + x) / c
        rep.values["tree_coded"] = ratio * L * x / c
        rep.values["voltage_scaled"] = ratio * max(L, (x / c) ** 2)
    elif model.kind == "polynomial":
        rep.values["uncoded"] = L * (L / p_tar) ** (1.0 / c)
        rep.values["tree_coded"] = ratio * L * (1.0 / p_tar) ** (1.0 / c)
        rep.values["voltage_scaled"] = ratio * max(L, (1.0 / p_tar) ** (1.0 / c))
    else:  # subexponential
        rep.values["uncoded"] = L * ((math.log(L) + x) / c) ** 2
        rep.values["tree_coded"] = ratio * L * (x / c) ** 2
        rep.values["voltage_scaled"] = ratio * max(L, (x / c) ** 3)
    return rep


def thm6_codelength(L, p_tar, lam_star, K=None, c_e=2.0):
    """Minimal code length for the noiseless-cleanup scheme:
    N_min = ceil((1/lambda*) ln(3 L / p_tar)); also reports the induced
    unreliable operations per bit 4 L N_exact / K when K is given, and the
    noiseless iteration count."""
    if lam_star <= 0:
        raise ValueError("lambda* must be positive")
    if not (0.0 < p_tar < 3.0 * L):
        raise ValueError("p_tar out of range")
    n_exact = math.log(3.0 * L / p_tar) / lam_star
    # snap before ceiling so that an exact inversion round-trips to N itself
    n_min = math.ceil(n_exact - 1e-9 * max(1.0, abs(n_exact)))
    rep = BoundReport(name="noiseless-cleanup-codelength",
                      inputs=dict(L=L, p_tar=p_tar, lambda_star=lam_star,
                                  K=K, c_e=c_e))
    rep.values["N_exact"] = n_exact
    rep.values["N_min"] = n_min
    if K:
        rep.values["unreliable_per_bit"] = 4.0 * L / (K * lam_star) \
            * math.log(3.0 * L / p_tar)
    rep.values["noiseless_iterations"] = math.ceil(c_e * math.log(max(n_min, 2)))
    return rep


def mc_sigma(p_hat, n):
    """Binomial standard error of an empirical proportion."""
    return math.sqrt(max(p_hat * (1.0 - p_hat), 1e-300) / n)
