"""Experiment orchestration: config files, Monte Carlo trial loops, CSV output.

An experiment config (TOML) resolves to one transform r = s*A, an optional
code, a noise model, and one or more scheme entries; run_experiment executes
every (scheme, trial) cell and writes three CSV files:

  trials.csv   one row per (scheme, trial, traced stage)
  summary.csv  per-stage mean BER with binomial 95% intervals plus the
               final per-scheme estimates
  bounds.csv   every closed-form report applicable to the configuration

Trials are independent substreams of the master seed, so scheduling across
workers never changes any output byte; results are merged in trial order and
all floats are serialized with repr for byte-identical reruns.
"""

import concurrent.futures
import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analysis, ldpc, schemes
from .noise import EnergyModel, NoiseSpec, NoiseStream, read_defects, sample_defects

SCHEMA_VERSION = 1

# substream offsets (NoiseStream trial keys) reserved by the harness; gate
# noise for trial t uses key t itself
INPUT_STREAM_OFFSET = 1 << 40

_CODED_SCHEMES = {"encoded", "encoded-t", "encoded-f", "encoded-v",
                  "encoded-f+cleanup"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    provenance: str = ""
    trials: int = 1
    seed: int = 0
    input_policy: str = "uniform-random"   # all-zero | uniform-random | file
    input_file: str = None
    L: int = None
    K: int = None
    transform_seed: int = 0
    code: dict = None                      # sample params or {"alist": path}
    noise: NoiseSpec = None
    defects: dict = None
    energy: EnergyModel = None
    scheme_entries: list = field(default_factory=list)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.input_policy not in ("all-zero", "uniform-random", "file"):
            raise ConfigError(f"unknown input policy {self.input_policy!r}")
        if self.input_policy == "file" and not self.input_file:
            raise ConfigError("input policy 'file' needs input_file")
        if not self.scheme_entries:
            raise ConfigError("config declares no scheme")
        if self.L is None or self.K is None:
            raise ConfigError("transform needs L and K")


def _merge(base, override):
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _section(data, name, path):
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{path}: [{name}] must be a table")
    return sec


def parse_config(path, smoke=False, overrides=None):
    """Parse a TOML experiment config into an ExperimentConfig.

    smoke applies the file's [smoke] override table; overrides is a flat
    dict (trials / seed) applied last, for command-line flags.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}") from None
    if smoke:
        smoke_tab = data.pop("smoke", None)
        if smoke_tab is None:
            raise ConfigError(f"{path}: no [smoke] variant declared")
        data = _merge(data, smoke_tab)
    else:
        data.pop("smoke", None)
    if overrides:
        data = _merge(data, {k: v for k, v in overrides.items() if v is not None})

    transform = _section(data, "transform", path)
    noise_tab = _section(data, "noise", path)
    noise = None
    if noise_tab:
        try:
            noise = NoiseSpec(p_and=noise_tab.get("p_and", 0.0),
                              p_xor=noise_tab.get("p_xor", 0.0),
                              p_maj=noise_tab.get("p_maj", 0.0))
        except ValueError as exc:
            raise ConfigError(f"{path}: [noise]: {exc}") from None
    energy = None
    energy_tab = _section(data, "energy", path)
    if energy_tab:
        try:
            energy = EnergyModel(kind=energy_tab.get("kind", "exponential"),
                                 c=energy_tab.get("c", 1.0))
        except ValueError as exc:
            raise ConfigError(f"{path}: [energy]: {exc}") from None

    entries = data.get("scheme", [])
    if isinstance(entries, dict):
        entries = [entries]
    try:
        cfg = ExperimentConfig(
            name=str(data.get("name", os.path.splitext(os.path.basename(path))[0])),
            provenance=str(data.get("provenance", "")),
            trials=int(data.get("trials", 1)),
            seed=int(data.get("seed", 0)),
            input_policy=data.get("input", "uniform-random"),
            input_file=data.get("input_file"),
            L=transform.get("L"),
            K=transform.get("K"),
            transform_seed=int(transform.get("seed", 0)),
            code=_section(data, "code", path) or None,
            noise=noise,
            defects=_section(data, "defects", path) or None,
            energy=energy,
            scheme_entries=[dict(e) for e in entries],
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for i, entry in enumerate(cfg.scheme_entries):
        if "kind" not in entry:
            raise ConfigError(f"{path}: [[scheme]] entry {i} has no 'kind'")
    return cfg


def build_code(config):
    """Resolve the config's code table to a CodeSpec (or None)."""
    if config.code is None:
        return None
    tab = config.code
    if "alist" in tab:
        H = ldpc.read_alist(tab["alist"])
        graph = ldpc.graph_from_H(H)
        return ldpc.build_code(graph, girth_cap=tab.get("girth_cap", 16))
    for key in ("N", "d_v", "d_c"):
        if key not in tab:
            raise ConfigError(f"[code] needs {key} (or an alist path)")
    return ldpc.sample_code(tab["N"], tab["d_v"], tab["d_c"],
                            seed=tab.get("seed", 0),
                            forbid_4cycles=tab.get("forbid_4cycles", True),
                            girth_cap=tab.get("girth_cap", 16))


def build_transform(config):
    """The L x K transform matrix A, deterministic in the transform seed."""
    stream = NoiseStream(config.transform_seed)
    return stream.bits((config.L, config.K))


def _build_defects(config, entry, code):
    tab = config.defects
    if tab is None:
        return None
    d_s = entry.get("d_s", 2)
    counts = schemes.encoded_f_defect_counts(code.N, code.P, d_s)
    if "file" in tab:
        return read_defects(tab["file"], counts)
    fractions = {k: tab.get(k, 0.0) for k in ("and", "xor", "maj")}
    return sample_defects(counts, fractions, mode_mix=tab.get("mode_mix"),
                          seed=tab.get("seed", config.seed))


def scheme_config(config, entry, idx, code, A):
    """Resolve one [[scheme]] entry to a runnable SchemeConfig."""
    kind = entry["kind"]
    if kind not in schemes.RUNNERS:
        raise ConfigError(f"unknown scheme kind {kind!r}")
    needs_code = kind in _CODED_SCHEMES
    if needs_code and code is None:
        raise ConfigError(f"scheme {kind!r} needs a [code] table")
    if needs_code and code.K != config.K:
        raise ConfigError(f"transform K={config.K} but code K={code.K}")
    kwargs = {k: entry[k] for k in ("d_T", "C", "d_s", "d_sp", "t_m", "c_e",
                                    "decoder", "pbf_tie_rule", "p_tar",
                                    "alpha0", "theta", "lvs_variant",
                                    "max_fan_in") if k in entry}
    defects = _build_defects(config, entry, code) if needs_code else None
    try:
        return schemes.SchemeConfig(
            scheme=kind, A=A, code=code if needs_code else None,
            noise=config.noise, defects=defects, energy_model=config.energy,
            seed=config.seed + 1000003 * idx, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"scheme entry {idx} ({kind}): {exc}") from None


def trial_input(config, trial, file_lines=None):
    """The L-bit input word for one trial under the input policy."""
    if config.input_policy == "all-zero":
        return np.zeros(config.L, dtype=np.uint8)
    if config.input_policy == "file":
        line = file_lines[trial % len(file_lines)]
        bits = np.frombuffer(line.encode(), dtype=np.uint8) - ord("0")
        if bits.shape != (config.L,) or not np.isin(bits, (0, 1)).all():
            raise ConfigError(
                f"{config.input_file}: line {trial % len(file_lines) + 1} is "
                f"not {config.L} binary digits")
        return bits.astype(np.uint8)
    stream = NoiseStream(config.seed, trial + INPUT_STREAM_OFFSET)
    return stream.bits(config.L)


def _read_input_lines(config):
    if config.input_policy != "file":
        return None
    with open(config.input_file) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"{config.input_file}: empty input file")
    return lines


@dataclass
class TrialRecord:
    scheme: str
    trial: int
    stage: str
    ber: float
    n_bits: int
    block_error: bool
    error_fraction: float
    ops_total: int
    ops_per_bit: float
    energy_per_bit: float


_WORKER_STATE = {}


def _init_worker(exp_config, run_cfg, file_lines):
    _WORKER_STATE["exp"] = exp_config
    _WORKER_STATE["cfg"] = run_cfg
    _WORKER_STATE["lines"] = file_lines


def _worker_trial(trial):
    exp, cfg = _WORKER_STATE["exp"], _WORKER_STATE["cfg"]
    s = trial_input(exp, trial, _WORKER_STATE["lines"])
    return run_trial(cfg, exp, s, trial)


def run_trial(run_cfg, exp_config, s, trial):
    """One scheme trial -> list of TrialRecord (trace rows plus 'final')."""
    res = schemes.run_scheme(run_cfg, s, trial=trial)
    ops = res.tally.total()
    per_bit = float(res.tally.per_bit(run_cfg.K))
    energy = float(res.energy) / run_cfg.K if res.energy is not None else math.nan
    rows = [TrialRecord(scheme=label_for(run_cfg), trial=trial, stage=pt.label,
                        ber=pt.ber, n_bits=pt.n_bits,
                        block_error=res.block_error,
                        error_fraction=res.error_fraction,
                        ops_total=ops, ops_per_bit=per_bit,
                        energy_per_bit=energy)
            for pt in res.trace]
    rows.append(TrialRecord(scheme=label_for(run_cfg), trial=trial,
                            stage="final", ber=res.error_fraction,
                            n_bits=run_cfg.K, block_error=res.block_error,
                            error_fraction=res.error_fraction, ops_total=ops,
                            ops_per_bit=per_bit, energy_per_bit=energy))
    return rows


def label_for(run_cfg):
    """Disambiguating scheme label (voting runs differ only in t_m)."""
    if run_cfg.scheme == "voting":
        return f"voting-t{run_cfg.t_m}"
    return run_cfg.scheme


def run_scheme_trials(exp_config, run_cfg, workers=1, file_lines=None):
    """All trials of one scheme, merged in trial-index order."""
    trials = range(exp_config.trials)
    if workers <= 1:
        _init_worker(exp_config, run_cfg, file_lines)
        results = [_worker_trial(t) for t in trials]
    else:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker,
                initargs=(exp_config, run_cfg, file_lines)) as pool:
            chunk = max(1, exp_config.trials // (workers * 4))
            results = list(pool.map(_worker_trial, trials, chunksize=chunk))
    rows = []
    for trial_rows in results:  # already trial-index order (map preserves it)
        rows.extend(trial_rows)
    return rows


def summarize(rows):
    """Per (scheme, stage) mean BER with a binomial 95% interval.

    The mean is the plain arithmetic mean of the trial rows; the interval is
    the normal approximation over the pooled bit count.
    """
    order = []
    groups = {}
    for row in rows:
        key = (row.scheme, row.stage)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        grp = groups[key]
        mean = sum(r.ber for r in grp) / len(grp)
        n_bits = sum(r.n_bits for r in grp)
        sigma = analysis.mc_sigma(mean, n_bits)
        entry = {
            "scheme": key[0], "stage": key[1], "mean_ber": mean,
            "ci95_low": max(0.0, mean - 1.96 * sigma),
            "ci95_high": mean + 1.96 * sigma,
            "trials": len(grp), "bits": n_bits,
            "block_error_rate": sum(r.block_error for r in grp) / len(grp),
            "ops_per_bit": grp[0].ops_per_bit,
            "energy_per_bit": grp[0].energy_per_bit,
        }
        out.append(entry)
    return out


def bound_reports(exp_config, run_cfgs):
    """Every closed-form report applicable to the configured schemes."""
    reports = []
    for cfg in run_cfgs:
        label = label_for(cfg)
        kind = cfg.scheme
        noise = cfg.noise
        g = cfg.code.graph if cfg.code is not None else None
        if kind == "encoded-t" and noise is not None and g is not None:
            rep = analysis.check_thm1(noise, g.d_v, g.d_c, cfg.d_T, cfg.L, g.N)
            reports.append((label, rep))
        if g is not None:
            rep = analysis.ops_closed_forms(
                cfg.L, K=cfg.K, N=g.N, P=g.P, d_v=g.d_v,
                d_T=cfg.d_T if kind == "encoded-t" else None,
                d_s=cfg.d_s if kind in ("encoded-f", "encoded-v",
                                        "encoded-f+cleanup") else None,
                d_sp=None, t_m=None)
            reports.append((label, rep))
        if kind == "voting":
            rep = analysis.ops_closed_forms(cfg.L, K=cfg.K,
                                            d_sp=cfg.d_sp, t_m=cfg.t_m)
            reports.append((label, rep))
        if kind in ("encoded-f", "encoded-v", "encoded-f+cleanup") \
                and noise is not None and g is not None:
            lam = max(noise.p_and, noise.p_xor, noise.p_maj)
            if lam > 0:
                rep = analysis.BoundReport(
                    name="block-failure-bound",
                    inputs=dict(N=g.N, L=cfg.L, lam=lam))
                ls = analysis.lambda_star(lam)
                rep.values["lambda_star"] = ls
                rep.values["block_bound"] = 3.0 * cfg.L * math.exp(-ls * g.N)
                reports.append((label, rep))
        if kind == "uncoded" and noise is not None:
            rep = analysis.BoundReport(
                name="uncoded-exact-ber",
                inputs=dict(L=cfg.L, p_and=noise.p_and, p_xor=noise.p_xor))
            rep.values["ber"] = analysis.uncoded_ber(cfg.L, noise.p_and,
                                                     noise.p_xor)
            reports.append((label, rep))
    return reports


def _fmt(val):
    if isinstance(val, float):
        return repr(val)
    return str(val)


def _header_lines(exp_config, kind, extra=None):
    lines = [f"# encsim {kind} schema v{SCHEMA_VERSION}",
             f"# experiment: {exp_config.name}"]
    if exp_config.provenance:
        lines.append(f"# provenance: {exp_config.provenance}")
    lines.append(f"# seed: {exp_config.seed}  trials: {exp_config.trials}  "
                 f"input: {exp_config.input_policy}")
    for line in extra or []:
        lines.append(f"# {line}")
    return lines


def write_trials_csv(path, exp_config, rows, extra_header=None):
    cols = ["scheme", "trial", "stage", "ber", "n_bits", "block_error",
            "error_fraction", "ops_total", "ops_per_bit", "energy_per_bit"]
    with open(path, "w", newline="") as fh:
        for line in _header_lines(exp_config, "trials", extra_header):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row.scheme, row.trial, row.stage, _fmt(row.ber),
                             row.n_bits, int(row.block_error),
                             _fmt(row.error_fraction), row.ops_total,
                             _fmt(row.ops_per_bit), _fmt(row.energy_per_bit)])


def write_summary_csv(path, exp_config, summary, extra_header=None):
    cols = ["scheme", "stage", "mean_ber", "ci95_low", "ci95_high", "trials",
            "bits", "block_error_rate", "ops_per_bit", "energy_per_bit"]
    with open(path, "w", newline="") as fh:
        for line in _header_lines(exp_config, "summary", extra_header):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for entry in summary:
            writer.writerow([_fmt(entry[c]) for c in cols])


def write_bounds_csv(path, exp_config, reports, extra_header=None):
    with open(path, "w", newline="") as fh:
        for line in _header_lines(exp_config, "bounds", extra_header):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["scheme", "report", "quantity", "value"])
        for label, rep in reports:
            for row in rep.to_rows():
                writer.writerow([label, row["report"], row["quantity"],
                                 _fmt(row["value"])])


def run_experiment(exp_config, out_dir, workers=1, plot=True):
    """Execute every scheme and write trials.csv / summary.csv / bounds.csv
    (and report.png unless plot is disabled).  Returns the summary rows."""
    os.makedirs(out_dir, exist_ok=True)
    code = build_code(exp_config)
    A = build_transform(exp_config)
    file_lines = _read_input_lines(exp_config)
    run_cfgs = [scheme_config(exp_config, entry, i, code, A)
                for i, entry in enumerate(exp_config.scheme_entries)]

    extra = []
    if code is not None:
        extra.append(f"code: N={code.N} P={code.P} K={code.K} "
                     f"d_v={code.graph.d_v} d_c={code.graph.d_c} "
                     f"girth={code.girth_text()} seed={code.seed}")
    if exp_config.noise is not None:
        n = exp_config.noise
        extra.append(f"noise: p_and={n.p_and} p_xor={n.p_xor} p_maj={n.p_maj}")
    extra.append("schemes: " + ", ".join(label_for(c) for c in run_cfgs))

    all_rows = []
    for cfg in run_cfgs:
        all_rows.extend(run_scheme_trials(exp_config, cfg, workers=workers,
                                          file_lines=file_lines))
    summary = summarize(all_rows)
    reports = bound_reports(exp_config, run_cfgs)

    write_trials_csv(os.path.join(out_dir, "trials.csv"), exp_config,
                     all_rows, extra)
    write_summary_csv(os.path.join(out_dir, "summary.csv"), exp_config,
                      summary, extra)
    write_bounds_csv(os.path.join(out_dir, "bounds.csv"), exp_config,
                     reports, extra)
    if plot:
        from . import plotting
        plotting.plot_summary(summary, os.path.join(out_dir, "report.png"),
                              title=exp_config.name)
    return summary
