"""Reflection-coefficient optimizers for minimum-distance passive beamforming.

The design objective throughout is the minimum squared distance between the
noiseless receive points of any two transmit antennas.  Optimizers provided:

* closed form for two antennas,
* a semidefinite-relaxation pipeline (low-rank factorized first-order solve,
  Gaussian randomization rounding, unit-modulus polish),
* a candidate-set heuristic built from the pairwise closed forms,
* an exhaustive phase-grid search used as a validation oracle,
* instantaneous-SNR alignment to a known active antenna (baseline scheme).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization

_TWO_PI = 2.0 * np.pi


@dataclass
class SdrDiagnostics:
    """Per-solve bookkeeping for the relaxation pipeline."""

    iterations: int
    converged: bool
    relaxation_objective: float
    final_softmin: float
    candidate_index: int
    d_min: float


@dataclass
class ReflectionVector:
    """Unit-modulus reflection coefficients, stored as phases in [0, 2pi)."""

    theta: np.ndarray
    diagnostics: SdrDiagnostics | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.theta = np.mod(np.asarray(self.theta, dtype=float), _TWO_PI)

    @property
    def phi(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    def __len__(self) -> int:
        return len(self.theta)


@dataclass
class SdrOptions:
    """Knobs for :func:`sdr_beamform`.

    ``rounding_count`` Gaussian randomization vectors are drawn from the
    relaxed solution; ``solver_iterations`` bounds the ascent steps spent
    per temperature stage and restart.  ``factor_rank`` defaults to
    min(N, ceil(sqrt(2K)) + 1) for K antenna pairs.  ``polish_top`` limits
    how many rounded candidates get the unit-modulus polish stage (None
    polishes all, which keeps the candidate set monotone in
    ``rounding_count``).
    """

    rounding_count: int = 100
    solver_iterations: int = 80
    factor_rank: int | None = None
    softmin_temperature_schedule: tuple[float, ...] = tuple(np.geomspace(1.0, 1e-4, 10))
    restarts: int = 3
    polish_top: int | None = None

    def __post_init__(self):
        if self.rounding_count < 1:
            raise ValueError("rounding_count must be at least 1")
        if self.factor_rank is not None and self.factor_rank < 1:
            raise ValueError("factor_rank must be at least 1")
        if len(self.softmin_temperature_schedule) < 1:
            raise ValueError("temperature schedule must be nonempty")


def min_pairwise_distance(ch: ChannelRealization, phi) -> float:
    """Minimum squared distance between any two antennas' receive points."""
    if ch.nt < 2:
        raise ValueError("need at least two transmit antennas")
    coeff = np.asarray(getattr(phi, "phi", phi))
    gains = (ch.f * coeff) @ ch.G
    best = np.inf
    for a in range(ch.nt):
        for b in range(a + 1, ch.nt):
            d = abs(gains[a] - gains[b]) ** 2
            if d < best:
                best = d
    return float(best)


def build_pair_matrix(ch: ChannelRealization, l: int, lhat: int) -> np.ndarray:
    """Rank-one PSD matrix R with phi^H R phi = |f^T diag(g_l - g_lhat) phi|^2."""
    if l == lhat:
        raise ValueError("antenna indices must differ")
    for idx in (l, lhat):
        if not 1 <= idx <= ch.nt:
            raise IndexError(f"antenna index {idx} out of range 1..{ch.nt}")
    a = ch.f * (ch.G[:, l - 1] - ch.G[:, lhat - 1])
    return np.outer(a.conj(), a)


def _pair_rows(ch: ChannelRealization) -> np.ndarray:
    """Stacked rows a_p = f * (g_i - g_j) for all antenna pairs i < j."""
    rows = [
        ch.f * (ch.G[:, i] - ch.G[:, j])
        for i in range(ch.nt)
        for j in range(i + 1, ch.nt)
    ]
    return np.array(rows)


def optimal_two_tx(ch: ChannelRealization) -> ReflectionVector:
    """Closed-form distance-maximizing phases for exactly two antennas.

    Aligns every term f_i (g_i1 - g_i2) to the positive real axis, so the
    cascade equals sum_i |f_i| |g_i1 - g_i2|.  Elements with a zero product
    get phase 0.
    """
    if ch.nt != 2:
        raise ValueError("closed form requires exactly two transmit antennas")
    theta = -np.angle(ch.f) - np.angle(ch.G[:, 0] - ch.G[:, 1])
    return ReflectionVector(theta=theta)


def intelligent_ris_phases(ch: ChannelRealization, l: int) -> ReflectionVector:
    """Phases aligning every element to the cascade of the active antenna.

    Maximizes the instantaneous receive SNR for the known index ``l``; the
    resulting cascade is real and equals sum_i |f_i| |g_il|.
    """
    if not 1 <= l <= ch.nt:
        raise IndexError(f"antenna index {l} out of range 1..{ch.nt}")
    theta = -np.angle(ch.f) - np.angle(ch.G[:, l - 1])
    return ReflectionVector(theta=theta)


def low_complexity_beamform(ch: ChannelRealization) -> ReflectionVector:
    """Best of the Nt(Nt-1)/2 pairwise closed-form candidates.

    Evaluates the two-antenna alignment for every antenna pair and keeps
    the candidate with the largest minimum pairwise distance (ties broken
    by candidate order).
    """
    if ch.nt < 2:
        raise ValueError("need at least two transmit antennas")
    best_theta, best_d = None, -np.inf
    for i in range(ch.nt):
        for j in range(i + 1, ch.nt):
            theta = -np.angle(ch.f) - np.angle(ch.G[:, i] - ch.G[:, j])
            d = min_pairwise_distance(ch, np.exp(1j * theta))
            if d > best_d:
                best_d, best_theta = d, theta
    return ReflectionVector(theta=best_theta)


def brute_force_beamform(
    ch: ChannelRealization,
    levels: int,
    budget: int = 1 << 20,
) -> ReflectionVector:
    """Exhaustive search over a uniform phase grid (validation oracle).

    Every element phase ranges over {2 pi k / levels}; the grid-global
    argmax of the minimum pairwise distance is returned.  Refuses grids
    larger than ``budget`` evaluations.
    """
    if ch.nt < 2:
        raise ValueError("need at least two transmit antennas")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    total = levels**ch.n
    if total > budget:
        raise ValueError(f"grid of {total} evaluations exceeds budget {budget}")
    table = np.exp(1j * _TWO_PI * np.arange(levels) / levels)
    best_d, best_combo = -np.inf, None
    chunk = 1 << 14
    combos = np.empty((min(chunk, total), ch.n), dtype=np.int64)
    start = 0
    while start < total:
        stop = min(start + chunk, total)
        idx = np.arange(start, stop)
        for col in range(ch.n - 1, -1, -1):
            combos[: stop - start, col] = idx % levels
            idx = idx // levels
        block = combos[: stop - start]
        weighted = table[block] * ch.f[None, :]
        gains = weighted @ ch.G
        dmin = np.full(stop - start, np.inf)
        for a in range(ch.nt):
            for b in range(a + 1, ch.nt):
                np.minimum(dmin, np.abs(gains[:, a] - gains[:, b]) ** 2, out=dmin)
        k = int(np.argmax(dmin))
        if dmin[k] > best_d:
            best_d = float(dmin[k])
            best_combo = block[k].copy()
        start = stop
    return ReflectionVector(theta=_TWO_PI * best_combo / levels)


def _softmin_value(q: np.ndarray, tau: float) -> float:
    lo = q.min()
    return float(lo - tau * np.log(np.mean(np.exp(-(q - lo) / tau))))


def _solve_relaxation(
    A: np.ndarray,
    rank: int,
    opts: SdrOptions,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float, int, bool]:
    """Maximize the softened minimum of tr(R_p X X^H) over unit-norm rows of X.

    Projected gradient ascent on the log-sum-exp soft minimum with an
    annealed temperature; rows of X are renormalized after every step so
    the lifted matrix keeps a unit diagonal.
    """
    n = A.shape[1]
    scale = float(np.mean(np.linalg.norm(A, axis=1) ** 2)) or 1.0
    temps = np.asarray(opts.softmin_temperature_schedule) * scale
    best_X, best_obj = None, -np.inf
    iterations = 0
    converged = False
    for _ in range(max(1, opts.restarts)):
        X = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        step = 1.0 / scale
        last_stage_converged = False
        for tau in temps:
            q = np.einsum("kr,kr->k", A @ X, (A @ X).conj()).real
            s_cur = _softmin_value(q, tau)
            last_stage_converged = False
            for _ in range(opts.solver_iterations):
                iterations += 1
                w = np.exp(-(q - q.min()) / tau)
                w /= w.sum()
                grad = A.conj().T @ (w[:, None] * (A @ X))
                X_new = X + step * grad
                X_new /= np.linalg.norm(X_new, axis=1, keepdims=True)
                q_new = np.einsum("kr,kr->k", A @ X_new, (A @ X_new).conj()).real
                s_new = _softmin_value(q_new, tau)
                if s_new >= s_cur:
                    gain = s_new - s_cur
                    X, q, s_cur = X_new, q_new, s_new
                    step *= 1.2
                    if gain < 1e-8 * max(abs(s_cur), scale * 1e-12):
                        last_stage_converged = True
                        break
                else:
                    step *= 0.5
                    if step < 1e-14 / scale:
                        last_stage_converged = True
                        break
        obj = float(q.min())
        if obj > best_obj:
            best_obj, best_X = obj, X
            converged = last_stage_converged
    return best_X, best_obj, iterations, converged


def _polish_phases(A: np.ndarray, cand: np.ndarray, opts: SdrOptions) -> np.ndarray:
    """Rank-one annealed ascent applied to each candidate column in parallel.

    Finishes the solve on the feasible set itself: entries stay unit
    modulus, so each polished column is a valid reflection vector.
    """
    scale = float(np.mean(np.linalg.norm(A, axis=1) ** 2)) or 1.0
    temps = np.geomspace(0.3, 1e-4, 8) * scale
    X = cand.copy()
    C = X.shape[1]
    step = np.full(C, 0.5 / scale)
    for tau in temps:
        Q = A @ X
        q = (Q * Q.conj()).real
        lo = q.min(axis=0)
        s_cur = lo - tau * np.log(np.mean(np.exp(-(q - lo) / tau), axis=0))
        for _ in range(60):
            w = np.exp(-(q - q.min(axis=0)) / tau)
            w /= w.sum(axis=0)
            grad = A.conj().T @ (w * Q)
            X_new = X + step[None, :] * grad
            mag = np.abs(X_new)
            X_new = np.where(mag > 0, X_new / np.where(mag > 0, mag, 1.0), 1.0)
            Q_new = A @ X_new
            q_new = (Q_new * Q_new.conj()).real
            lo = q_new.min(axis=0)
            s_new = lo - tau * np.log(np.mean(np.exp(-(q_new - lo) / tau), axis=0))
            accept = s_new >= s_cur
            if accept.any():
                X[:, accept] = X_new[:, accept]
                Q[:, accept] = Q_new[:, accept]
                q[:, accept] = q_new[:, accept]
                s_cur[accept] = s_new[accept]
            step = np.where(accept, step * 1.2, step * 0.5)
            if (step < 1e-14 / scale).all():
                break
    return X


def sdr_beamform(
    ch: ChannelRealization,
    opts: SdrOptions | None = None,
    rng: np.random.Generator | None = None,
) -> ReflectionVector:
    """Semidefinite-relaxation beamformer with randomization rounding.

    Solves the lifted max-min program approximately through a low-rank
    factorization, draws ``rounding_count`` Gaussian vectors through the
    factor, normalizes each to unit modulus, polishes the candidates on
    the unit-modulus set, and returns the candidate with the largest
    minimum pairwise distance.  Ties go to the lowest candidate index.
    Deterministic given ``rng``; solver stall is not an error (the best
    iterate is used and flagged in the diagnostics).
    """
    if ch.nt < 2:
        raise ValueError("need at least two transmit antennas")
    opts = opts or SdrOptions()
    rng = rng or np.random.default_rng(0)
    A = _pair_rows(ch)
    K = A.shape[0]
    rank = opts.factor_rank or min(ch.n, int(np.ceil(np.sqrt(2 * K))) + 1)
    X, relax_obj, iterations, converged = _solve_relaxation(A, rank, opts, rng)

    cand = np.empty((ch.n, opts.rounding_count), dtype=complex)
    for t in range(opts.rounding_count):
        r = (rng.standard_normal(rank) + 1j * rng.standard_normal(rank)) / np.sqrt(2)
        raw = X @ r
        mag = np.abs(raw)
        cand[:, t] = np.where(mag > 0, raw / np.where(mag > 0, mag, 1.0), 1.0)

    d_raw = np.array([min_pairwise_distance(ch, cand[:, t]) for t in range(opts.rounding_count)])
    order = np.lexsort((np.arange(opts.rounding_count), -d_raw))
    keep = order if opts.polish_top is None else order[: opts.polish_top]
    polished = _polish_phases(A, cand[:, keep], opts)

    best_d, best_vec, best_idx = -np.inf, None, 0
    for pos, t in enumerate(keep):
        for vec in (polished[:, pos], cand[:, t]):
            d = min_pairwise_distance(ch, vec)
            if d > best_d:
                best_d, best_vec, best_idx = d, vec, int(t)
    for t in range(opts.rounding_count):
        if d_raw[t] > best_d:
            best_d, best_vec, best_idx = float(d_raw[t]), cand[:, t], t

    q_final = np.abs(A @ best_vec) ** 2
    diag = SdrDiagnostics(
        iterations=iterations,
        converged=converged,
        relaxation_objective=relax_obj,
        final_softmin=float(q_final.min()),
        candidate_index=best_idx,
        d_min=best_d,
    )
    return ReflectionVector(theta=np.angle(best_vec), diagnostics=diag)
