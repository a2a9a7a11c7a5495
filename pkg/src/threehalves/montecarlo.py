"""Monte Carlo oracle for the closed forms.

Paths of Y are drawn from the exact transition law: over a step of length
dt, Y' = e^{-b dt} phi(dt) chi'^2_delta(Y / phi(dt)), a scaled noncentral
chi-square.  Path integrals of 1/Y use the trapezoid rule on the
simulation grid; the same paths are also integrated on every second and
every fourth grid point so the discretization bias can be read off.

Random streams are attached to fixed-size blocks of paths, one
``SeedSequence(seed, spawn_key=(block,))`` per block, and block results are
merged in block order.  Estimates therefore depend on (seed, n_paths,
block_size, scheme, steps_per_year) but not on the number of workers.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .process import ModelParams, time_change

__all__ = [
    "Scheme",
    "MCConfig",
    "MCEstimate",
    "ncx2_sample",
    "simulate_cir_exact",
    "simulate_paths",
    "simulate_index_path",
    "estimate_many",
    "estimate_benchmarked_moment",
    "estimate_integral_over_terminal",
    "estimate_bump_delta",
    "rn_time_change",
    "rn_absorption_demo",
    "supermartingale_gap",
    "hill_tail_index",
]


class Scheme(str, enum.Enum):
    EXACT = "exact"
    MILSTEIN = "milstein"


@dataclass(frozen=True)
class MCConfig:
    """Simulation settings.

    Parameters
    ----------
    n_paths : int
        Number of simulated paths.
    steps_per_year : int
        Grid density; a horizon T uses round(T * steps_per_year) steps.
    seed : int
        Root seed (64-bit unsigned).
    n_workers : int
        Worker processes.  Does not affect the result.
    scheme : Scheme
        ``"exact"`` transition sampling or ``"milstein"`` discretization.
    block_size : int
        Paths per random-stream block.
    """

    n_paths: int = 100_000
    steps_per_year: int = 2000
    seed: int = 0
    n_workers: int = 1
    scheme: Scheme = Scheme.EXACT
    block_size: int = 16_384

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if int(self.steps_per_year) != self.steps_per_year or self.steps_per_year < 1:
            raise ValueError("steps_per_year must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(self.n_workers) != self.n_workers or self.n_workers < 1:
            raise ValueError("n_workers must be a positive integer")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def n_steps(self, T: float) -> int:
        return max(1, int(round(T * self.steps_per_year)))

    def blocks(self):
        """(block index, paths in block) pairs covering ``n_paths``."""
        full, rest = divmod(self.n_paths, self.block_size)
        out = [(i, self.block_size) for i in range(full)]
        if rest:
            out.append((full, rest))
        return out

    def rng(self, block: int) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(block),))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with its standard error.

    ``details`` carries auxiliary diagnostics (step-refinement means,
    running means, tail indices) specific to the producing routine.
    """

    mean: float
    std_error: float
    n_effective: int
    absorbed_fraction: float = 0.0
    details: dict = field(default_factory=dict)

    def z_score(self, target: float) -> float:
        """(mean - target) / std_error; infinite if the SE is zero and they differ."""
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error

    def brackets(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.z_score(target)) <= n_se


class _Moments:
    """Blockwise sums merged in a fixed order."""

    def __init__(self):
        self.n = []
        self.s = []
        self.ss = []

    def add(self, x: np.ndarray):
        self.n.append(x.size)
        self.s.append(math.fsum(x.tolist()))
        self.ss.append(math.fsum((x * x).tolist()))

    def estimate(self, **kw) -> MCEstimate:
        n = sum(self.n)
        mean = math.fsum(self.s) / n
        var = max(math.fsum(self.ss) / n - mean * mean, 0.0) * n / max(n - 1, 1)
        return MCEstimate(mean, math.sqrt(var / n), n, **kw)


# ---------------------------------------------------------------------------
# samplers


def ncx2_sample(rng: np.random.Generator, df: float, lam: np.ndarray) -> np.ndarray:
    """Noncentral chi-square draws with ``df`` degrees of freedom.

    For df > 1 uses chi^2_{df-1} + (Z + sqrt(lam))^2; otherwise the
    Poisson mixture of central chi-squares (which can return exactly 0
    when df = 0).
    """
    lam = np.asarray(lam, dtype=float)
    if df > 1:
        g = rng.standard_gamma((df - 1) / 2, size=lam.shape)
        z = rng.standard_normal(size=lam.shape) + np.sqrt(lam)
        return 2 * g + z * z
    n = rng.poisson(lam / 2)
    return 2 * rng.standard_gamma(df / 2 + n)


def _cir_step_factory(params: ModelParams, dt: float, scheme: Scheme):
    b, g, a1 = params.b, params.gamma, params.a1
    if scheme is Scheme.EXACT:
        ph = time_change(params, dt)
        c = math.exp(-b * dt) * ph
        inv_ph = 1.0 / ph
        df = params.delta
        half = (df - 1) / 2

        def draw(rng, n):
            return rng.standard_gamma(half, size=n), rng.standard_normal(size=n)

        def apply(y, noise):
            gam, z = noise
            w = z + np.sqrt(y * inv_ph)
            return c * (2 * gam + w * w)

        return draw, apply

    sq = math.sqrt(dt)
    s2g = math.sqrt(2 * g)

    def draw(rng, n):
        return rng.standard_normal(size=n) * sq

    def apply(y, dw):
        # Milstein: sigma sigma' = gamma for sigma(y) = sqrt(2 gamma y); reflect at 0
        nxt = y + (a1 - b * y) * dt + s2g * np.sqrt(y) * dw + 0.5 * g * (dw * dw - dt)
        return np.abs(nxt)

    return draw, apply


# ---------------------------------------------------------------------------
# path generation


def simulate_paths(params: ModelParams, y0: float, T: float, cfg: MCConfig) -> tuple[np.ndarray, np.ndarray]:
    """Full paths of Y on the grid of ``cfg``.

    Returns ``(times, paths)`` with ``paths`` of shape (n_paths, n_steps + 1).
    Intended for modest path counts; estimators stream instead.
    """
    if not y0 > 0:
        raise DomainError("y0 must be > 0")
    n_steps = cfg.n_steps(T)
    dt = T / n_steps
    draw, apply = _cir_step_factory(params, dt, cfg.scheme)
    out = np.empty((cfg.n_paths, n_steps + 1))
    row = 0
    for block, n in cfg.blocks():
        rng = cfg.rng(block)
        y = np.full(n, float(y0))
        out[row:row + n, 0] = y
        for k in range(1, n_steps + 1):
            y = apply(y, draw(rng, n))
            out[row:row + n, k] = y
        row += n
    return np.linspace(0.0, T, n_steps + 1), out


def simulate_cir_exact(params: ModelParams, y0: float, T: float, cfg: MCConfig):
    """:func:`simulate_paths` with exact transition sampling forced."""
    return simulate_paths(params, y0, T, _replace_scheme(cfg, Scheme.EXACT))


def _replace_scheme(cfg, scheme):
    from dataclasses import replace

    return replace(cfg, scheme=scheme)


def simulate_index_path(params: ModelParams, times: np.ndarray, seed: int,
                        y0: float | None = None) -> np.ndarray:
    """Index levels F_t = alpha_tilde e^{eta t} Y_t on an arbitrary time grid.

    ``y0=None`` draws the start from the stationary gamma law.  Each
    increment uses the exact transition, so irregular grids are fine.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise DomainError("times must be a strictly increasing 1-d grid")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    if y0 is None:
        y0 = rng.gamma(params.a1 / params.gamma, params.gamma / params.b)
    y = np.empty(times.size)
    y[0] = y0
    half = (params.delta - 1) / 2
    for k, dt in enumerate(np.diff(times), start=1):
        ph = time_change(params, dt)
        w = rng.standard_normal() + math.sqrt(y[k - 1] / ph)
        y[k] = math.exp(-params.b * dt) * ph * (2 * rng.standard_gamma(half) + w * w)
    return params.alpha_tilde * np.exp(params.eta * times) * y


# ---------------------------------------------------------------------------
# streaming path functionals


@dataclass(frozen=True)
class _PathJob:
    params: ModelParams
    starts: tuple
    n_steps: int
    dt: float
    checkpoints: tuple  # step indices
    cfg: MCConfig


def _run_block(job: _PathJob, block: int, n: int):
    """Simulate one block; return Y and trapezoid integrals at each checkpoint.

    Integrals are reported for grid strides 1, 2 and 4 (the latter two only
    when the checkpoint index is divisible accordingly).  All starts share
    the same random numbers.
    """
    rng = job.cfg.rng(block)
    draw, apply = _cir_step_factory(job.params, job.dt, job.cfg.scheme)
    ys = [np.full(n, float(y)) for y in job.starts]
    f0 = [1.0 / y for y in job.starts]
    acc = [{1: np.zeros(n), 2: np.zeros(n), 4: np.zeros(n)} for _ in job.starts]
    want = set(job.checkpoints)
    out = {}
    for k in range(1, job.n_steps + 1):
        noise = draw(rng, n)
        for j in range(len(ys)):
            ys[j] = apply(ys[j], noise)
            inv = 1.0 / ys[j]
            for s in (1, 2, 4):
                if k % s == 0:
                    acc[j][s] += inv
            if k in want:
                inv_last = inv
                rec = {"Y": ys[j].copy()}
                for s in (1, 2, 4):
                    if k % s == 0:
                        rec[f"I{s}"] = s * job.dt * (f0[j] / 2 + acc[j][s] - inv_last / 2)
                out[(k, j)] = rec
    return out


def _run_block_star(args):
    return _run_block(*args)


def _iter_blocks(job: _PathJob):
    tasks = [(job, b, n) for b, n in job.cfg.blocks()]
    if job.cfg.n_workers == 1 or len(tasks) == 1:
        for t in tasks:
            yield _run_block(*t)
        return
    with ProcessPoolExecutor(max_workers=job.cfg.n_workers) as ex:
        # map preserves task order, so the merge order is fixed
        yield from ex.map(_run_block_star, tasks)


def estimate_many(params: ModelParams, y0: float, maturities, cfg: MCConfig, *,
                  alpha: float = 1.0, mu1: float = 0.05, bump: float | None = None) -> dict:
    """Estimate several path functionals on one set of paths.

    Parameters
    ----------
    maturities : sequence of float
        Horizons recorded along a single simulation to ``max(maturities)``.
    alpha, mu1 : float
        Exponent and Laplace variable of the functionals below.
    bump : float, optional
        Relative bump for common-random-number central differences in y0.

    Returns
    -------
    dict
        ``{T: {name: MCEstimate}}`` with names ``terminal`` (Y^-alpha),
        ``inverse`` (1/Y), ``integral`` (I), ``integral_over_terminal``
        (I Y^-alpha), ``laplace`` (e^{-mu1 I} Y^-alpha) and, with ``bump``,
        ``delta_integral_over_terminal`` and ``delta_terminal``.  The
        ``integral_over_terminal`` estimate lists coarser-grid means in
        ``details``.
    """
    if not y0 > 0:
        raise DomainError("y0 must be > 0")
    mats = sorted(float(T) for T in maturities)
    if not mats or mats[0] <= 0:
        raise DomainError("maturities must be positive")
    T_max = mats[-1]
    n_steps = cfg.n_steps(T_max)
    dt = T_max / n_steps
    cps = []
    for T in mats:
        k = int(round(T / dt))
        if abs(k * dt - T) > 1e-9 * max(T, 1):
            raise DomainError(f"maturity {T!r} does not fall on the simulation grid")
        cps.append(k)
    starts = (y0,) if bump is None else (y0, y0 * (1 + bump), y0 * (1 - bump))
    job = _PathJob(params, starts, n_steps, dt, tuple(cps), cfg)

    names = ["terminal", "inverse", "integral", "integral_over_terminal", "laplace",
             "integral_over_terminal_s2", "integral_over_terminal_s4", "gap_s1_s2", "gap_s2_s4"]
    if bump is not None:
        names += ["delta_integral_over_terminal", "delta_terminal"]
    acc = {k: {name: _Moments() for name in names} for k in cps}
    for res in _iter_blocks(job):
        for k in cps:
            r = res[(k, 0)]
            Y, I = r["Y"], r["I1"]
            ya = Y ** -alpha
            m = acc[k]
            m["terminal"].add(ya)
            m["inverse"].add(1.0 / Y)
            m["integral"].add(I)
            m["integral_over_terminal"].add(I * ya)
            m["laplace"].add(np.exp(-mu1 * I) * ya)
            if "I2" in r:
                m["integral_over_terminal_s2"].add(r["I2"] * ya)
                m["gap_s1_s2"].add((I - r["I2"]) * ya)
            if "I4" in r:
                m["integral_over_terminal_s4"].add(r["I4"] * ya)
                m["gap_s2_s4"].add((r["I2"] - r["I4"]) * ya)
            if bump is not None:
                up, dn = res[(k, 1)], res[(k, 2)]
                h = 2 * bump * y0
                yu, yd = up["Y"] ** -alpha, dn["Y"] ** -alpha
                m["delta_integral_over_terminal"].add((up["I1"] * yu - dn["I1"] * yd) / h)
                m["delta_terminal"].add((yu - yd) / h)
    out = {}
    for T, k in zip(mats, cps):
        m = acc[k]
        ests = {}
        for name in names:
            if not m[name].n:
                continue
            ests[name] = m[name].estimate()
        main = ests["integral_over_terminal"]
        details = {"n_steps": k, "dt": dt}
        for s in (2, 4):
            key = f"integral_over_terminal_s{s}"
            if key in ests:
                details[f"mean_stride{s}"] = ests[key].mean
        # paired differences on the same paths: fine minus half-resolution grid
        if "gap_s1_s2" in ests:
            details["refinement_gap"] = ests["gap_s1_s2"].mean
            details["refinement_gap_se"] = ests["gap_s1_s2"].std_error
        if "gap_s2_s4" in ests:
            details["refinement_gap_coarse"] = ests["gap_s2_s4"].mean
            details["refinement_gap_coarse_se"] = ests["gap_s2_s4"].std_error
            if details["refinement_gap"] != 0:
                details["halving_ratio"] = details["refinement_gap_coarse"] / details["refinement_gap"]
        ests["integral_over_terminal"] = MCEstimate(main.mean, main.std_error,
                                                    main.n_effective, 0.0, details)
        out[T] = ests
    return out


def estimate_benchmarked_moment(params: ModelParams, y0: float, T: float, alpha: float,
                                mu1: float, cfg: MCConfig) -> MCEstimate:
    """E[exp(-mu1 I) Y_T^-alpha] with I the trapezoid integral of 1/Y."""
    if mu1 < 0:
        raise DomainError("mu1 must be >= 0")
    if alpha == 0 and mu1 == 0:
        return MCEstimate(1.0, 0.0, cfg.n_paths)
    res = estimate_many(params, y0, [T], cfg, alpha=alpha, mu1=mu1)[float(T)]
    est = res["laplace"]
    return MCEstimate(est.mean, est.std_error, est.n_effective, 0.0,
                      res["integral_over_terminal"].details)


def estimate_integral_over_terminal(params: ModelParams, y0: float, T: float, alpha: float,
                                    cfg: MCConfig) -> MCEstimate:
    """E[I Y_T^-alpha]; ``details`` holds the step-refinement diagnostics."""
    return estimate_many(params, y0, [T], cfg, alpha=alpha)[float(T)]["integral_over_terminal"]


def estimate_bump_delta(params: ModelParams, y0: float, T: float, alpha: float, cfg: MCConfig,
                        rel_bump: float = 0.01) -> MCEstimate:
    """Central-difference dE[I Y_T^-alpha]/dy with common random numbers."""
    if not 0 < rel_bump < 1:
        raise DomainError("rel_bump must lie in (0, 1)")
    res = estimate_many(params, y0, [T], cfg, alpha=alpha, bump=rel_bump)[float(T)]
    return res["delta_integral_over_terminal"]


def supermartingale_gap(params: ModelParams, y0: float, T: float, cfg: MCConfig) -> MCEstimate:
    """Estimate E[F_0 / F_T]; ``details['gap']`` is 1 minus that value.

    F_0/F_T = y0 e^{-eta T} / Y_T, so the mean is the zero-coupon bond price.
    """
    est = estimate_many(params, y0, [T], cfg)[float(T)]["inverse"]
    f = y0 * math.exp(-params.eta * T)
    mean, se = est.mean * f, est.std_error * f
    return MCEstimate(mean, se, est.n_effective, 0.0, {"gap": 1.0 - mean, "gap_se": se})


# ---------------------------------------------------------------------------
# risk-neutral dimension-zero demonstration


def rn_time_change(params: ModelParams, T: float) -> float:
    """Clock of the dimension-zero squared Bessel process followed by F under Q.

    dF = sqrt(2 gamma alpha_tilde e^{eta t} F) dW^Q gives
    phi'(T) = gamma alpha_tilde (e^{eta T} - 1) / (2 eta).
    """
    g, a = params.gamma, params.alpha_tilde
    if params.eta == 0:
        return g * a * T / 2
    return g * a * math.expm1(params.eta * T) / (2 * params.eta)


def hill_tail_index(x: np.ndarray, k: int) -> float:
    """Hill estimator of the tail index from the ``k`` largest values."""
    x = np.sort(np.asarray(x, dtype=float))
    if not 1 <= k < x.size:
        raise DomainError("need 1 <= k < len(x)")
    top = x[-k:]
    thr = x[-k - 1]
    return float(k / np.sum(np.log(top / thr)))


def rn_absorption_demo(x0: float, T: float, params: ModelParams, cfg: MCConfig,
                       checkpoints=None) -> MCEstimate:
    """Simulate F under Q as a time-changed dimension-zero squared Bessel process.

    The estimate is the absorbed fraction at T.  ``details`` holds the
    analytic absorption probability exp(-x0 / (2 phi'(T))), running means of
    v_T = 2 gamma alpha_tilde e^{eta T} / X_T over surviving paths at the
    requested path counts, a Hill tail index for v_T and the resulting
    ``non_convergent`` flag.  No value is claimed for E[v_T].
    """
    if not x0 > 0:
        raise DomainError("x0 must be > 0")
    if not T > 0:
        raise DomainError("T must be > 0")
    n_steps = cfg.n_steps(T)
    grid = np.linspace(0.0, T, n_steps + 1)
    clock = np.array([rn_time_change(params, t) for t in grid])
    dphi = np.diff(clock)
    v_scale = 2 * params.gamma * params.alpha_tilde * math.exp(params.eta * T)

    absorbed = 0
    survivors = []
    for block, n in cfg.blocks():
        rng = cfg.rng(block)
        x = np.full(n, float(x0))
        for h in dphi:
            live = x > 0
            if not live.any():
                break
            xs = x[live]
            # exact dimension-zero step: Poisson(x/2h) mixture of Gamma shapes
            x[live] = h * ncx2_sample(rng, 0.0, xs / h)
        dead = x <= 0
        absorbed += int(dead.sum())
        survivors.append(v_scale / x[~dead])
    v = np.concatenate(survivors) if survivors else np.empty(0)
    p_hat = absorbed / cfg.n_paths
    se = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / cfg.n_paths)
    p_exact = math.exp(-x0 / (2 * rn_time_change(params, T)))

    if checkpoints is None:
        checkpoints = [10 ** e for e in range(2, 9) if 10 ** e <= v.size]
        if v.size and (not checkpoints or checkpoints[-1] != v.size):
            checkpoints.append(v.size)
    csum = np.cumsum(v)
    running = {int(c): float(csum[int(c) - 1] / int(c)) for c in checkpoints if 0 < c <= v.size}
    details = {"analytic_absorption": p_exact, "running_mean_v": running,
               "n_survivors": int(v.size)}
    if v.size >= 100:
        k = max(10, min(v.size // 100, 10_000))
        hill = hill_tail_index(v, k)
        # a tail index <= 1 means an infinite mean; the Hill SE is about hill/sqrt(k)
        cannot_reject_infinite = hill - 3 * hill / math.sqrt(k) <= 1.0
        vals = list(running.values())
        drifting = len(vals) >= 2 and vals[-1] > vals[0]
        details.update(hill_tail_index=hill, hill_k=k,
                       drifting_upward=bool(drifting),
                       non_convergent=bool(cannot_reject_infinite and drifting))
    return MCEstimate(p_hat, se, cfg.n_paths, p_hat, details)
