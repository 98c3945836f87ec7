"""Max-min Monte-Carlo search for the threshold visibility.

Inner loop: at fixed settings, hill-climb over the frame parameters
(q, t, rho) to maximize the visibility the discrete construction
certifies.  Outer loop: move the settings around to minimize that
maximum.  Sweeping the settings count N and extrapolating N -> infinity
estimates the threshold below which every ensemble stays locally
representable.

The search state is a flat vector of 7M reals: the 6 raw frame vectors
plus raw weights.  Each evaluation re-projects the constraints (floor
simplex for rho, sqrt(rho)-orthogonality, biorthogonality via a 3x3
solve) and reads off the certified visibility.  The relative scale of
q versus t is balanced in closed form: scaling q by s multiplies the A
table by s and the B table by 1/s, so the best achievable value at a
given state is 1/(max|A'| max|B'|), capped at 1.

The exact objective is a min over table entries of equal magnitude at
the optimum, so its ridges are too sharp for single-component moves:
climbs that accept only exact improvements stall well below values
that are provably reachable.  The climb therefore scores states with
the max softened to a log-sum-exp of sharpness beta, doubling beta on
a fixed ladder over the run so early phases can trade tied entries
against each other while late phases approach the exact objective.
Acceptance stays monotone in the score, and the run tracks (and
finally returns) the best state under the exact visibility, so every
reported value is certified by a concrete model.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .construct import (
    DEFAULT_RHO_MIN,
    DiscreteLhvModel,
    SettingsEnsemble,
    biorthogonalize,
    floor_normalized_weights,
    gram_svd,
    project_out,
)
from .core import Direction
from .errors import ConstructionFailureError, InvalidInputError, LvtError
from .estimate import VisibilityEstimate

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1

# Stream tags keeping the derived RNGs of the loops disjoint.
_TAG_RESTART = 1
_TAG_OUTER = 2
_TAG_INNER_SEED = 3
_TAG_BOOTSTRAP = 4

# Adaptive step-factor limits; the run stops early once the factor
# shrinks through the floor (roughly 10*patience straight rejections).
_FACTOR_FLOOR = 1e-3
_FACTOR_CAP = 8.0

# Log-sum-exp sharpness ladder for the acceptance score: beta starts at
# the base and doubles at each equal fraction of the iteration budget;
# the final fraction scores with the exact (unsoftened) visibility.
_SHARPNESS_BASE = 50.0
_SHARPNESS_DOUBLINGS = 4

_BOOTSTRAP_RESAMPLES = 200
_SETTINGS_JITTER = 0.25

_ALPHA_GRID = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class SearchConfig:
    """Budgets and knobs for the max-min search."""

    n_settings: int
    m_states: int = 4
    inner_iters: int = 4000
    outer_iters: int = 24
    restarts: int = 2
    step_scale: float = 0.25
    patience: int = 60
    seed: int = 0
    rho_min: float = DEFAULT_RHO_MIN

    def __post_init__(self) -> None:
        for name in ("n_settings", "m_states", "inner_iters", "outer_iters",
                     "restarts", "patience", "seed"):
            raw = getattr(self, name)
            if isinstance(raw, bool) or not isinstance(raw, (int, np.integer)):
                raise InvalidInputError(f"{name} must be an integer, got {raw!r}")
            object.__setattr__(self, name, int(raw))
        if self.n_settings < 1:
            raise InvalidInputError(f"n_settings must be >= 1, got {self.n_settings}")
        if self.m_states < 4:
            raise InvalidInputError(f"m_states must be >= 4, got {self.m_states}")
        for name in ("inner_iters", "outer_iters", "restarts", "patience"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.seed < 0:
            raise InvalidInputError(f"seed must be >= 0, got {self.seed}")
        step = float(self.step_scale)
        if not math.isfinite(step) or step <= 0.0:
            raise InvalidInputError(f"step_scale must be > 0, got {self.step_scale!r}")
        object.__setattr__(self, "step_scale", step)
        rho_min = float(self.rho_min)
        if not (0.0 < rho_min <= 1.0 / self.m_states):
            raise InvalidInputError(
                f"rho_min must lie in (0, 1/m_states], got {self.rho_min!r}"
            )
        object.__setattr__(self, "rho_min", rho_min)


def _derive_seed(entropy: Sequence[int]) -> int:
    """Stable 64-bit seed from a list of nonnegative integers."""
    seq = np.random.SeedSequence(entropy=[int(e) & _SEED_MASK for e in entropy])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _derive_rng(entropy: Sequence[int]) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=[int(e) & _SEED_MASK for e in entropy])
    return np.random.default_rng(seq)


def _state_tables(
    x: np.ndarray, w_a: np.ndarray, w_b: np.ndarray, m: int, rho_min: float
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Raw (A', B') tables of one search state, None when singular."""
    q_raw = x[: 3 * m].reshape(3, m)
    t_raw = x[3 * m : 6 * m].reshape(3, m)
    rho = floor_normalized_weights(x[6 * m :], rho_min)
    srho = np.sqrt(rho)
    q = q_raw - np.outer(q_raw @ srho, srho)
    t0 = t_raw - np.outer(t_raw @ srho, srho)
    cross = q @ t0.T
    try:
        t = np.linalg.solve(cross.T, t0)
    except np.linalg.LinAlgError:
        return None
    a_raw = (w_a @ q) / srho
    b_raw = (w_b @ t) / srho
    if not (np.all(np.isfinite(a_raw)) and np.all(np.isfinite(b_raw))):
        return None
    return a_raw, b_raw


def _balanced_visibility(a_raw: np.ndarray, b_raw: np.ndarray) -> float:
    """Exact scale-balanced visibility of a table pair."""
    prod = float(np.max(np.abs(a_raw))) * float(np.max(np.abs(b_raw)))
    if prod <= 1.0:
        return 1.0
    return 1.0 / prod


def _tempered_peak(z: np.ndarray, beta: float) -> float:
    """Log-sum-exp softening of max|z|; ties contribute, sharp as beta grows."""
    magnitudes = np.abs(z)
    peak = float(np.max(magnitudes))
    return float(np.log(np.sum(np.exp(beta * (magnitudes - peak)))) / beta + peak)


def _tempered_score(
    a_raw: np.ndarray, b_raw: np.ndarray, beta: Optional[float]
) -> float:
    """Acceptance score: visibility with the max entries softened at beta.

    beta None means the exact objective (the ladder's final rung).
    """
    if beta is None:
        return _balanced_visibility(a_raw, b_raw)
    return 1.0 / (_tempered_peak(a_raw, beta) * _tempered_peak(b_raw, beta))


def _evaluate(
    x: np.ndarray, w_a: np.ndarray, w_b: np.ndarray, m: int, rho_min: float
) -> Optional[float]:
    """Scale-balanced visibility of one search state, None when singular."""
    tables = _state_tables(x, w_a, w_b, m, rho_min)
    if tables is None:
        return None
    return _balanced_visibility(*tables)


def state_to_model(
    x: np.ndarray, settings: SettingsEnsemble, config: SearchConfig
) -> DiscreteLhvModel:
    """Materialize the discrete model a search state encodes.

    Re-applies the exact projections and table formulas, then balances
    the q/t scale: with both tables normalized by their own largest
    entry the certified visibility is 1/(max|A'| max|B'|), capped at 1.
    Frame rows paired with zero singular values never reach the tables,
    so the model is built from the tables directly and certified by
    validate_model rather than by frame-level checks that would bind
    those unconstrained rows.
    """
    m = config.m_states
    x = np.asarray(x, dtype=float)
    if x.shape != (7 * m,):
        raise InvalidInputError(f"state must have length {7 * m}, got shape {x.shape}")
    rho = floor_normalized_weights(x[6 * m :], config.rho_min)
    srho = np.sqrt(rho)
    q = project_out(x[: 3 * m].reshape(3, m), srho)
    t = biorthogonalize(q, project_out(x[3 * m : 6 * m].reshape(3, m), srho))
    svd = gram_svd(settings)
    sqrt_p = np.sqrt(svd.p)
    a_raw = ((svd.u * sqrt_p) @ q) / srho
    b_raw = ((svd.v * sqrt_p) @ t) / srho
    max_a = float(np.max(np.abs(a_raw)))
    max_b = float(np.max(np.abs(b_raw)))
    prod = max_a * max_b
    n = settings.n_settings
    if prod == 0.0:
        return DiscreteLhvModel(
            rho=rho, a_table=np.zeros((n, m)), b_table=np.zeros((n, m)), visibility=1.0
        )
    if prod <= 1.0:
        scale = math.sqrt(max_b / max_a)
        return DiscreteLhvModel(
            rho=rho, a_table=scale * a_raw, b_table=b_raw / scale, visibility=1.0
        )
    return DiscreteLhvModel(
        rho=rho, a_table=a_raw / max_a, b_table=b_raw / max_b, visibility=1.0 / prod
    )


def _run_restart(
    settings: SettingsEnsemble,
    config: SearchConfig,
    restart_index: int,
    on_accept: Optional[Callable[[np.ndarray, float], None]] = None,
) -> tuple[float, np.ndarray, int]:
    """One hill-climbing run; returns (best value, best state, evaluations)."""
    svd = gram_svd(settings)
    sqrt_p = np.sqrt(svd.p)
    w_a = svd.u * sqrt_p
    w_b = svd.v * sqrt_p
    m = config.m_states
    dim = 7 * m
    rng = _derive_rng([config.seed, _TAG_RESTART, restart_index])

    evals = 0
    tables = None
    x = None
    for _ in range(100):
        x = np.concatenate([rng.standard_normal(6 * m), rng.uniform(0.0, 1.0, m)])
        tables = _state_tables(x, w_a, w_b, m, config.rho_min)
        evals += 1
        if tables is not None:
            break
    if tables is None:
        raise ConstructionFailureError("no feasible starting frame found in 100 draws")
    best_v = _balanced_visibility(*tables)
    best_x = x.copy()
    if on_accept is not None:
        on_accept(x.copy(), best_v)

    ladder: list = [_SHARPNESS_BASE * 2.0**k for k in range(_SHARPNESS_DOUBLINGS)]
    ladder.append(None)  # exact objective on the final rung
    beta = ladder[0]
    phase_len = max(1, config.inner_iters // len(ladder))
    score = _tempered_score(*tables, beta)
    factor = 1.0
    rejections = 0
    acceptance_streak = 0
    for k in range(config.inner_iters):
        if factor < _FACTOR_FLOOR:
            break
        if k > 0 and k % phase_len == 0 and k // phase_len < len(ladder):
            beta = ladder[k // phase_len]
            score = _tempered_score(*tables, beta)
        idx = int(rng.integers(dim))
        old = x[idx]
        x[idx] = old + config.step_scale * factor * rng.standard_normal()
        candidate = _state_tables(x, w_a, w_b, m, config.rho_min)
        evals += 1
        accepted = False
        if candidate is not None:
            candidate_score = _tempered_score(*candidate, beta)
            if candidate_score > score:
                accepted = True
                score = candidate_score
                tables = candidate
                v = _balanced_visibility(*candidate)
                if v > best_v:
                    best_v = v
                    best_x = x.copy()
                    if on_accept is not None:
                        on_accept(x.copy(), v)
        if accepted:
            rejections = 0
            acceptance_streak += 1
            if acceptance_streak >= 10:
                factor = min(factor * 2.0, _FACTOR_CAP)
                acceptance_streak = 0
        else:
            x[idx] = old
            acceptance_streak = 0
            rejections += 1
            if rejections >= config.patience:
                factor *= 0.5
                rejections = 0
    return best_v, best_x, evals


def _restart_worker(args) -> tuple[float, np.ndarray, int]:
    settings, config, restart_index = args
    return _run_restart(settings, config, restart_index)


def inner_maximize(
    settings: SettingsEnsemble,
    config: SearchConfig,
    threads: int = 1,
    on_accept: Optional[Callable[[np.ndarray, float], None]] = None,
) -> tuple[DiscreteLhvModel, VisibilityEstimate]:
    """Best-of-restarts maximization of V at fixed settings.

    Restarts are independent streams merged by a pure max (ties to the
    lowest restart index), so results do not depend on thread count.
    """
    if settings.n_settings != config.n_settings:
        raise InvalidInputError(
            f"settings have {settings.n_settings} directions per side, "
            f"config expects {config.n_settings}"
        )
    if threads > 1 and config.restarts > 1 and on_accept is None:
        jobs = [(settings, config, r) for r in range(config.restarts)]
        with ProcessPoolExecutor(max_workers=min(threads, config.restarts)) as pool:
            results = list(pool.map(_restart_worker, jobs))
    else:
        results = [
            _run_restart(settings, config, r, on_accept) for r in range(config.restarts)
        ]
    total_evals = sum(r[2] for r in results)
    best_index = min(range(len(results)), key=lambda r: (-results[r][0], r))
    best_x = results[best_index][1]
    model = state_to_model(best_x, settings, config)
    estimate = VisibilityEstimate(
        value=model.visibility,
        std_error=0.0,
        n_settings=settings.n_settings,
        provenance="mc-search",
        seed=config.seed,
        iterations_used=total_evals,
    )
    return model, estimate


def perturb_settings(
    settings: SettingsEnsemble, rng: np.random.Generator, sigma: float = _SETTINGS_JITTER
) -> SettingsEnsemble:
    """Small-angle jitter of every direction on both sides."""
    def jitter(side):
        out = []
        for d in side:
            vec = d.as_array() + sigma * rng.standard_normal(3)
            norm = float(np.linalg.norm(vec))
            out.append(d if norm <= 1e-12 else Direction(*(vec / norm)))
        return tuple(out)

    return SettingsEnsemble(jitter(settings.a_side), jitter(settings.b_side))


def outer_minimize(
    config: SearchConfig,
    threads: int = 1,
    on_progress: Optional[Callable[[int, VisibilityEstimate], None]] = None,
) -> VisibilityEstimate:
    """Minimize the inner maximum over measurement settings.

    Alternates fresh uniform settings with small-angle perturbations of
    the worst settings found so far (50/50).  std_error is a bootstrap
    over the outer samples' inner maxima.
    """
    n = config.n_settings
    base = [config.seed, n]
    rng = _derive_rng(base + [_TAG_OUTER])
    worst_settings = None
    worst_value = math.inf
    inner_maxima = []
    total_evals = 0
    for k in range(config.outer_iters):
        if worst_settings is None or rng.random() < 0.5:
            settings = SettingsEnsemble.random(n, rng)
        else:
            settings = perturb_settings(worst_settings, rng)
        inner_config = replace(config, seed=_derive_seed(base + [_TAG_INNER_SEED, k]))
        _, est = inner_maximize(settings, inner_config, threads=threads)
        total_evals += est.iterations_used
        inner_maxima.append(est.value)
        if est.value < worst_value:
            worst_value = est.value
            worst_settings = settings
        if on_progress is not None:
            on_progress(k, est)

    values = np.array(inner_maxima)
    boot_rng = _derive_rng(base + [_TAG_BOOTSTRAP])
    count = values.shape[0]
    resample_minima = [
        float(np.min(values[boot_rng.integers(0, count, count)]))
        for _ in range(_BOOTSTRAP_RESAMPLES)
    ]
    return VisibilityEstimate(
        value=float(np.min(values)),
        std_error=float(np.std(resample_minima)),
        n_settings=n,
        provenance="mc-search",
        seed=config.seed,
        iterations_used=total_evals,
    )


def n_sweep(
    n_values: Sequence[int],
    config: SearchConfig,
    threads: int = 1,
    on_result: Optional[Callable[[VisibilityEstimate], None]] = None,
) -> list[VisibilityEstimate]:
    """One outer minimization per settings count, shared base seed.

    Failures at one N are logged and skipped; the sweep continues.  The
    returned estimates identify their N, so callers can detect gaps.
    """
    cleaned = []
    for n in n_values:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise InvalidInputError(f"settings counts must be integers >= 1, got {n!r}")
        cleaned.append(int(n))
    if any(b < a for a, b in zip(cleaned, cleaned[1:])):
        raise InvalidInputError(f"settings counts must be sorted ascending, got {cleaned}")
    results = []
    for n in cleaned:
        try:
            est = outer_minimize(replace(config, n_settings=n), threads=threads)
        except LvtError as exc:
            logger.warning("sweep failed at %d settings per side: %s", n, exc)
            continue
        results.append(est)
        if on_result is not None:
            on_result(est)
    return results


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of V(N) = v_inf + c * N^(-alpha)."""

    v_inf: float
    c: float
    alpha: float
    rss: float
    v_inf_std: float


def fit_power_law(n_values: Sequence[int], values: Sequence[float]) -> PowerLawFit:
    """Grid over alpha, linear fit of (v_inf, c) at each, best residual wins."""
    n_arr = np.asarray(n_values, dtype=float)
    v_arr = np.asarray(values, dtype=float)
    if n_arr.ndim != 1 or n_arr.shape != v_arr.shape or n_arr.shape[0] < 3:
        raise InvalidInputError("need at least 3 (n, value) pairs to fit")
    if np.unique(n_arr).shape[0] < 3:
        raise InvalidInputError("need at least 3 distinct settings counts to fit")
    best = None
    for alpha in _ALPHA_GRID:
        design = np.column_stack([np.ones_like(n_arr), n_arr ** (-alpha)])
        coef, _, _, _ = np.linalg.lstsq(design, v_arr, rcond=None)
        residual = v_arr - design @ coef
        rss = float(residual @ residual)
        if best is None or rss < best[0]:
            best = (rss, alpha, coef, design)
    rss, alpha, coef, design = best
    dof = n_arr.shape[0] - 2
    if dof > 0 and rss > 1e-30:
        covariance = (rss / dof) * np.linalg.inv(design.T @ design)
        v_inf_std = float(math.sqrt(max(0.0, covariance[0, 0])))
    else:
        v_inf_std = 0.0
    return PowerLawFit(
        v_inf=float(coef[0]), c=float(coef[1]), alpha=float(alpha),
        rss=rss, v_inf_std=v_inf_std,
    )


def extrapolate(estimates: Sequence[VisibilityEstimate]) -> VisibilityEstimate:
    """Infinite-N limit of a sweep via the power-law fit.

    The result carries n_settings = 0 (no finite settings count) and
    the fit-derived uncertainty.
    """
    ests = list(estimates)
    if len(ests) < 3 or len({e.n_settings for e in ests}) < 3:
        raise InvalidInputError("extrapolation needs at least 3 estimates with distinct N")
    if any(e.n_settings < 1 for e in ests):
        raise InvalidInputError("extrapolation inputs must have n_settings >= 1")
    fit = fit_power_law([e.n_settings for e in ests], [e.value for e in ests])
    return VisibilityEstimate(
        value=min(1.0, max(0.0, fit.v_inf)),
        std_error=fit.v_inf_std,
        n_settings=0,
        provenance="mc-search",
        seed=ests[0].seed,
        iterations_used=sum(e.iterations_used for e in ests),
    )
