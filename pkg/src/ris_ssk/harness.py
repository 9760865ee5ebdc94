"""Experiment orchestration: Monte Carlo BER sweeps, analytic curves,
CSV/JSON emission, and the validation suite.

Every trial draws its randomness from streams keyed by (seed, global trial
index, purpose), so sweeps are reproducible bit-for-bit under any worker
count; error counting reduces by integer addition and is therefore order
independent.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis, astbc_link, beamform, pb_link
from .channel import NoiseModel, StreamBank, sample_channel, substream

SCHEMES = (
    "pb",
    "pb-lowcomplexity",
    "pb-sdr",
    "intelligent-ris-ssk",
    "traditional-ssk",
    "astbc-fast",
    "astbc-optimal",
)

_ASTBC_SCHEMES = ("astbc-fast", "astbc-optimal")

# Early-stop bookkeeping interval, fixed so results never depend on the
# worker count.
_STOP_CHECK_EVERY = 10_000

CSV_COLUMNS = (
    "scheme",
    "n",
    "nt",
    "m",
    "snr_db",
    "trials",
    "source_errors",
    "ris_errors",
    "ber_source",
    "ber_ris",
    "analytic_source",
    "analytic_ris",
    "seed",
    "wall_time_s",
)

_INT_COLUMNS = {"n", "nt", "m", "trials", "source_errors", "ris_errors", "seed"}


class ConfigError(ValueError):
    """Invalid simulation configuration."""


@dataclass
class SimConfig:
    """One sweep: a scheme, its dimensions, an SNR grid, and a trial budget.

    ``trials`` is the per-point budget; when ``target_errors`` is set the
    point stops early once every counted bit stream has accumulated that
    many errors (checked at a fixed interval).  ``record_wall_time`` is
    off by default so identical configurations produce byte-identical
    output files.
    """

    scheme: str
    n: int
    nt: int
    snr_db_grid: tuple[float, ...]
    trials: int
    seed: int
    m: int | None = None
    sdr: beamform.SdrOptions | None = None
    target_errors: int | None = None
    workers: int = 1
    output_path: str | None = None
    record_wall_time: bool = False

    def __post_init__(self):
        self.snr_db_grid = tuple(float(s) for s in self.snr_db_grid)

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.nt < 2 or self.nt & (self.nt - 1):
            raise ConfigError("nt must be a power of two >= 2")
        if self.scheme == "pb" and self.nt != 2:
            raise ConfigError("scheme 'pb' uses the two-antenna closed form; use pb-sdr or pb-lowcomplexity for nt > 2")
        if self.scheme in _ASTBC_SCHEMES:
            if self.n % 2:
                raise ConfigError("two-sub-surface coding needs an even element count")
            if self.m is None or self.m < 2 or self.m & (self.m - 1):
                raise ConfigError("astbc schemes need a power-of-two PSK order m")
        if not self.snr_db_grid:
            raise ConfigError("SNR grid must be nonempty")
        if any(b <= a for a, b in zip(self.snr_db_grid, self.snr_db_grid[1:])):
            raise ConfigError("SNR grid must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.target_errors is not None and self.target_errors < 1:
            raise ConfigError("target_errors must be at least 1")


@dataclass
class BerRecord:
    """One sweep point; field order matches the CSV columns."""

    scheme: str
    n: int
    nt: int
    m: int | None
    snr_db: float
    trials: int
    source_errors: int
    ris_errors: int | None
    ber_source: float
    ber_ris: float | None
    analytic_source: float | None
    analytic_ris: float | None
    seed: int
    wall_time_s: float | None


def _bits_per_trial(scheme: str, nt: int, m: int | None) -> tuple[int, int]:
    b_src = int(math.log2(nt))
    b_ris = 2 * int(math.log2(m)) if scheme in _ASTBC_SCHEMES else 0
    return b_src, b_ris


def _count_trials(
    cfg: SimConfig, snr_db: float, start: int, count: int
) -> tuple[int, int]:
    """Run trials [start, start + count) at one SNR point; return error counts."""
    noise = NoiseModel.from_snr_db(snr_db)
    ch_bank = StreamBank(cfg.seed, "channel")
    data_bank = StreamBank(cfg.seed, "data")
    sdr_bank = StreamBank(cfg.seed, "sdr") if cfg.scheme == "pb-sdr" else None
    scheme = cfg.scheme
    n, nt, m = cfg.n, cfg.nt, cfg.m
    with_direct = scheme == "traditional-ssk"
    src_err = 0
    ris_err = 0

    if scheme in _ASTBC_SCHEMES:
        alphas = astbc_link.psk_phases(m)
        src_labels = [pb_link.decode_ssk(l, nt) for l in range(1, nt + 1)]
        bps = int(math.log2(m))
        ris_labels = [tuple((k >> (bps - 1 - i)) & 1 for i in range(bps)) for k in range(m)]
        detect = (
            astbc_link.detect_astbc_fast
            if scheme == "astbc-fast"
            else astbc_link.detect_astbc_optimal
        )
        hi = np.array([nt, m, m])
        for k in range(start, start + count):
            ch = sample_channel(n, nt, ch_bank.trial(k))
            rng = data_bank.trial(k)
            draw = rng.integers(0, hi)
            l = int(draw[0]) + 1
            k1 = int(draw[1])
            k2 = int(draw[2])
            frame = astbc_link.AstbcFrame(
                l=l,
                alpha1=float(alphas[k1]),
                alpha2=float(alphas[k2]),
                bits_src=src_labels[l - 1],
                bits_ris=ris_labels[k1] + ris_labels[k2],
            )
            y1, y2 = astbc_link.transmit_astbc(ch, frame, noise, rng)
            lhat, a1hat, a2hat = detect(y1, y2, ch, m)
            src_err += pb_link.index_bit_errors(l, lhat)
            k1hat = astbc_link.phase_index(a1hat, m)
            k2hat = astbc_link.phase_index(a2hat, m)
            ris_err += bin(k1 ^ k1hat).count("1") + bin(k2 ^ k2hat).count("1")
        return src_err, ris_err

    for k in range(start, start + count):
        ch = sample_channel(n, nt, ch_bank.trial(k), with_direct=with_direct)
        rng = data_bank.trial(k)
        l = int(rng.integers(0, nt)) + 1
        sym = pb_link.SskSymbol(l=l, bits=pb_link.decode_ssk(l, nt))
        if scheme == "traditional-ssk":
            lhat = pb_link.transmit_detect_traditional_ssk(ch, sym, noise, rng)
        else:
            if scheme == "pb":
                phi = beamform.optimal_two_tx(ch)
            elif scheme == "pb-lowcomplexity":
                phi = beamform.low_complexity_beamform(ch)
            elif scheme == "pb-sdr":
                phi = beamform.sdr_beamform(ch, cfg.sdr, sdr_bank.trial(k))
            else:  # intelligent-ris-ssk: realign to the active antenna each time
                phi = beamform.intelligent_ris_phases(ch, l)
            coeff = phi.phi  # materialize once; transmit and detect share it
            y = pb_link.transmit_pb(ch, coeff, sym, noise, rng)
            lhat = pb_link.detect_pb_ml(y, ch, coeff)
        src_err += pb_link.index_bit_errors(l, lhat)
    return src_err, ris_err


def _count_trials_star(args):
    return _count_trials(*args)


def _split_range(start: int, count: int, parts: int) -> list[tuple[int, int]]:
    sizes = [count // parts + (1 if i < count % parts else 0) for i in range(parts)]
    out, at = [], start
    for s in sizes:
        if s:
            out.append((at, s))
            at += s
    return out


def _run_point(
    cfg: SimConfig, snr_db: float, base_trial: int, pool
) -> tuple[int, int, int]:
    """Execute one SNR point; returns (source_errors, ris_errors, trials_run)."""

    def run_block(start: int, count: int) -> tuple[int, int]:
        if pool is None or count < 2 * cfg.workers:
            return _count_trials(cfg, snr_db, start, count)
        parts = pool.map(
            _count_trials_star,
            [(cfg, snr_db, a, c) for a, c in _split_range(start, count, cfg.workers)],
        )
        return tuple(int(sum(col)) for col in zip(*parts))

    src_err = ris_err = 0
    done = 0
    counted_roles = 2 if cfg.scheme in _ASTBC_SCHEMES else 1
    while done < cfg.trials:
        block = cfg.trials - done
        if cfg.target_errors is not None:
            block = min(block, _STOP_CHECK_EVERY)
        ds, dr = run_block(base_trial + done, block)
        src_err += ds
        ris_err += dr
        done += block
        if cfg.target_errors is not None:
            enough = src_err >= cfg.target_errors and (
                counted_roles == 1 or ris_err >= cfg.target_errors
            )
            if enough:
                break
    return src_err, ris_err, done


def run_ber_sweep(cfg: SimConfig) -> list[BerRecord]:
    """Monte Carlo BER sweep over the configured SNR grid.

    Trial indices are global across the grid (point i covers
    [i * trials, i * trials + run)), so every point's randomness is
    independent of every other's and of the worker count.
    """
    cfg.validate()
    b_src, b_ris = _bits_per_trial(cfg.scheme, cfg.nt, cfg.m)
    records: list[BerRecord] = []
    pool = None
    try:
        if cfg.workers > 1:
            pool = multiprocessing.Pool(cfg.workers)
        for i, snr_db in enumerate(cfg.snr_db_grid):
            t0 = time.perf_counter() if cfg.record_wall_time else None
            src_err, ris_err, done = _run_point(cfg, snr_db, i * cfg.trials, pool)
            wall = time.perf_counter() - t0 if t0 is not None else None
            a_src, a_ris = analysis.analytic_abep(
                cfg.scheme, 10.0 ** (snr_db / 10.0), cfg.n, cfg.nt, cfg.m
            )
            is_astbc = cfg.scheme in _ASTBC_SCHEMES
            records.append(
                BerRecord(
                    scheme=cfg.scheme,
                    n=cfg.n,
                    nt=cfg.nt,
                    m=cfg.m if is_astbc else None,
                    snr_db=snr_db,
                    trials=done,
                    source_errors=src_err,
                    ris_errors=ris_err if is_astbc else None,
                    ber_source=src_err / (done * b_src),
                    ber_ris=ris_err / (done * b_ris) if is_astbc else None,
                    analytic_source=a_src,
                    analytic_ris=a_ris,
                    seed=cfg.seed,
                    wall_time_s=wall,
                )
            )
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return records


def analytic_sweep(
    scheme: str, n: int, nt: int, m: int | None, snr_db_grid
) -> list[BerRecord]:
    """Theory-only records over an SNR grid (no trials, no error counts)."""
    records = []
    for snr_db in snr_db_grid:
        a_src, a_ris = analysis.analytic_abep(scheme, 10.0 ** (snr_db / 10.0), n, nt, m)
        records.append(
            BerRecord(
                scheme=scheme,
                n=n,
                nt=nt,
                m=m if scheme in _ASTBC_SCHEMES else None,
                snr_db=float(snr_db),
                trials=0,
                source_errors=0,
                ris_errors=None,
                ber_source=a_src if a_src is not None else 0.0,
                ber_ris=a_ris,
                analytic_source=a_src,
                analytic_ris=a_ris,
                seed=0,
                wall_time_s=None,
            )
        )
    return records


def estimate_diversity_slope(records: list[BerRecord]) -> float:
    """Least-squares slope of log10(source BER) against SNR/10 dB.

    Only records with BER strictly inside (0, 0.1) qualify; at least two
    are required.  A slope of -k means BER falls k decades per 10 dB.
    """
    pts = [
        (r.snr_db / 10.0, math.log10(r.ber_source))
        for r in records
        if r.ber_source is not None and 0.0 < r.ber_source < 0.1
    ]
    if len(pts) < 2:
        raise ValueError("need at least two records with BER in (0, 0.1)")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def binomial_confidence(errors: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    """Wilson score interval for an error rate (z standard deviations)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _format_cell(name: str, value) -> str:
    if value is None:
        return ""
    if name in _INT_COLUMNS:
        return str(int(value))
    if name == "scheme":
        return str(value)
    return format(float(value), ".9g")


def write_csv(records: list[BerRecord], path) -> None:
    """Write records with the fixed column order, floats at 9 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in records:
                d = asdict(r)
                fh.write(",".join(_format_cell(c, d[c]) for c in CSV_COLUMNS) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> list[BerRecord]:
    """Inverse of :func:`write_csv` (at the written precision)."""
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    if not lines or lines[0].split(",") != list(CSV_COLUMNS):
        raise ValueError(f"unrecognized CSV header in {path}")
    out = []
    for ln in lines[1:]:
        if not ln:
            continue
        cells = ln.split(",")
        kw = {}
        for name, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                kw[name] = None
            elif name == "scheme":
                kw[name] = cell
            elif name in _INT_COLUMNS:
                kw[name] = int(cell)
            else:
                kw[name] = float(cell)
        out.append(BerRecord(**kw))
    return out


def write_json(records: list[BerRecord], path) -> None:
    """JSON mirror of the records, one object per record."""
    try:
        with open(path, "w") as fh:
            json.dump([asdict(r) for r in records], fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Validation suite


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    requirement: str

    def format(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.measured} (require {self.requirement})"


@dataclass
class ValidationReport:
    level: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        lines = [c.format() for c in self.checks]
        verdict = "ALL CHECKS PASSED" if self.passed else "CHECKS FAILED"
        return "\n".join(lines + [f"validation level={self.level}: {verdict}"])


def _check_two_antenna(level: str) -> list[CheckResult]:
    n_ch = 100 if level == "full" else 20
    exact = 0
    ok99 = 0
    for t in range(n_ch):
        ch = sample_channel(8, 2, substream(101, t, "oracle"))
        d_opt = beamform.min_pairwise_distance(ch, beamform.optimal_two_tx(ch))
        d_lc = beamform.min_pairwise_distance(ch, beamform.low_complexity_beamform(ch))
        exact += d_lc == d_opt
        d_sdr = beamform.sdr_beamform(ch, rng=substream(101, t, "sdr")).diagnostics.d_min
        ok99 += d_sdr >= 0.99 * d_opt
    return [
        CheckResult(
            "two-antenna candidate-set optimality",
            exact == n_ch,
            f"{exact}/{n_ch} exact matches",
            f"{n_ch}/{n_ch}",
        ),
        CheckResult(
            "two-antenna relaxation quality",
            ok99 == n_ch,
            f"{ok99}/{n_ch} at >= 0.99x closed form",
            f"{n_ch}/{n_ch}",
        ),
    ]


def _check_beamformer_vs_grid(level: str) -> list[CheckResult]:
    n_ch = 100 if level == "full" else 12
    need = 90 if level == "full" else 9
    wins = 0
    sdr_ds, lc_ds = [], []
    for t in range(n_ch):
        ch = sample_channel(4, 4, substream(202, t, "oracle"))
        d_grid = beamform.min_pairwise_distance(ch, beamform.brute_force_beamform(ch, 16))
        rv = beamform.sdr_beamform(ch, rng=substream(202, t, "sdr"))
        d_sdr = rv.diagnostics.d_min
        sdr_ds.append(d_sdr)
        lc_ds.append(beamform.min_pairwise_distance(ch, beamform.low_complexity_beamform(ch)))
        wins += d_sdr >= 0.95 * d_grid
    return [
        CheckResult(
            "relaxation vs 16-level grid",
            wins >= need,
            f"{wins}/{n_ch} at >= 0.95x grid optimum",
            f">= {need}/{n_ch}",
        ),
        CheckResult(
            "relaxation vs candidate-set mean",
            float(np.mean(sdr_ds)) >= float(np.mean(lc_ds)),
            f"mean d_min {np.mean(sdr_ds):.3f} vs {np.mean(lc_ds):.3f}",
            "relaxation mean >= candidate-set mean",
        ),
    ]


def _check_detectors(level: str) -> list[CheckResult]:
    frames_inner = 10_000 if level == "full" else 2_000
    inner_match = 0
    noise = NoiseModel.from_snr_db(0.0)
    for t in range(frames_inner):
        ch = sample_channel(16, 4, substream(303, t, "oracle"))
        rng = substream(303, t, "data")
        l = int(rng.integers(0, 4)) + 1
        k1, k2 = int(rng.integers(0, 8)), int(rng.integers(0, 8))
        alphas = astbc_link.psk_phases(8)
        frame = astbc_link.AstbcFrame(l, float(alphas[k1]), float(alphas[k2]), (), ())
        y1, y2 = astbc_link.transmit_astbc(ch, frame, noise, rng)
        _, i1, i2 = astbc_link.fast_antenna_metrics(y1, y2, ch, 8)
        cost = astbc_link.optimal_costs(y1, y2, ch, 8)
        ok = True
        for l0 in range(4):
            j1, j2 = np.unravel_index(np.argmin(cost[l0]), (8, 8))
            ok = ok and (i1[l0] == j1 and i2[l0] == j2)
        inner_match += ok
    frames_ag = 20_000 if level == "full" else 2_000
    agree = 0
    noise_hi = NoiseModel.from_rho(100.0 / 64.0)
    for t in range(frames_ag):
        ch = sample_channel(64, 2, substream(304, t, "oracle"))
        rng = substream(304, t, "data")
        l = int(rng.integers(0, 2)) + 1
        k1, k2 = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        alphas = astbc_link.psk_phases(2)
        frame = astbc_link.AstbcFrame(l, float(alphas[k1]), float(alphas[k2]), (), ())
        y1, y2 = astbc_link.transmit_astbc(ch, frame, noise_hi, rng)
        agree += astbc_link.detect_astbc_fast(y1, y2, ch, 2) == astbc_link.detect_astbc_optimal(y1, y2, ch, 2)
    rate = agree / frames_ag
    return [
        CheckResult(
            "fast-detector inner phase decisions",
            inner_match == frames_inner,
            f"{inner_match}/{frames_inner} frames identical to exhaustive inner search",
            f"{frames_inner}/{frames_inner}",
        ),
        CheckResult(
            "fast vs optimal full-hypothesis agreement at rho*N=100",
            rate >= 0.99,
            f"agreement rate {rate:.4f}",
            ">= 0.99",
        ),
    ]


def _check_clt_moments(level: str) -> list[CheckResult]:
    draws = 100_000 if level == "full" else 20_000
    n = 128
    rng = substream(404, 0, "oracle")
    total = np.empty(draws)
    chunk = 20_000
    at = 0
    while at < draws:
        b = min(chunk, draws - at)
        z = rng.standard_normal((b, 4 * n))
        f = (z[:, 0:n] + 1j * z[:, n : 2 * n]) / np.sqrt(2)
        dg = z[:, 2 * n : 3 * n] + 1j * z[:, 3 * n :]
        total[at : at + b] = (np.abs(f) * np.abs(dg)).sum(axis=1)
        at += b
    params = analysis.GaussianApproxParams.from_elements(n)
    mean_err = abs(total.mean() - params.mu_v) / params.mu_v
    var_err = abs(total.var(ddof=1) - params.sigma_v2) / params.sigma_v2
    return [
        CheckResult(
            "cascade mean (Gaussian approximation)",
            mean_err < 0.01,
            f"sample mean {total.mean():.3f} vs {params.mu_v:.3f} (rel err {mean_err:.2e})",
            "within 1%",
        ),
        CheckResult(
            "cascade variance (Gaussian approximation)",
            var_err < 0.05,
            f"sample var {total.var(ddof=1):.3f} vs {params.sigma_v2:.3f} (rel err {var_err:.2e})",
            "within 5%",
        ),
    ]


def _check_quadrature(level: str) -> list[CheckResult]:
    from scipy.integrate import quad

    # rho ~ c/n^2 keeps the beamformed-scheme ABEP in a quadrature-friendly
    # range (the exponent scales with n^2 rho).
    grid = [(c / n**2, n) for n in (16, 32, 64, 128) for c in (8.0, 16.0, 32.0)]
    worst = {"pb": 0.0, "pep": 0.0, "psk": 0.0}
    for rho, n in grid:
        params = analysis.GaussianApproxParams.from_elements(n)
        sig = math.sqrt(params.sigma_v2)

        def pb_integrand(v):
            return analysis.q_chiani(np.sqrt(rho / 2.0) * abs(v)) * np.exp(
                -((v - params.mu_v) ** 2) / (2 * params.sigma_v2)
            ) / np.sqrt(2 * np.pi * params.sigma_v2)

        ref, _ = quad(pb_integrand, params.mu_v - 12 * sig, params.mu_v + 12 * sig, limit=400)
        got = analysis.abep_pb_two_tx(analysis.AbepQuery(rho=rho, n=n, nt=2))
        worst["pb"] = max(worst["pb"], abs(got - ref) / ref)

        def pep_integrand(x):
            return analysis.q_exact(np.sqrt(rho * x / 2.0)) * analysis.PAIR_DISTANCE_PDF.pdf(x, n)

        ref, _ = quad(pep_integrand, 0, np.inf, limit=400)
        got = analysis.pep_astbc(analysis.AbepQuery(rho=rho, n=n))
        worst["pep"] = max(worst["pep"], abs(got - ref) / ref)

        m = 8

        def psk_integrand(x):
            s = sum(
                analysis.q_exact(np.sqrt(2 * rho * analysis.psk_g(i, m) * x))
                for i in range(1, max(m // 4, 1) + 1)
            )
            return 2.0 / max(np.log2(m), 2.0) * s * analysis.COMBINED_GAIN_PDF.pdf(x, n)

        ref, _ = quad(psk_integrand, 0, np.inf, limit=400)
        got = analysis.psk_demod_abep(analysis.AbepQuery(rho=rho, n=n, m=m))
        worst["psk"] = max(worst["psk"], abs(got - ref) / ref)
    return [
        CheckResult(
            f"closed form vs quadrature ({name})",
            err <= 1e-3,
            f"worst rel err {err:.2e} over {len(grid)}-point grid",
            "<= 1e-3",
        )
        for name, err in worst.items()
    ]


def validate_suite(level: str = "fast") -> ValidationReport:
    """Cross-module consistency checks; failures are report entries, not errors."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    report = ValidationReport(level=level)
    report.checks += _check_two_antenna(level)
    report.checks += _check_beamformer_vs_grid(level)
    report.checks += _check_detectors(level)
    report.checks += _check_clt_moments(level)
    report.checks += _check_quadrature(level)
    return report
