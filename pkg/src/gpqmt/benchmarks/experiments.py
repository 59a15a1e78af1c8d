"""The coordinate-conversion study and the two filtering benchmarks.

Filtering benchmarks run every configured filter on the same simulated
measurement sequences (paired comparison).  Runs are independent, so
``jobs > 1`` farms them out to worker processes; results are always
collected in run order and metrics that couple runs (the inclination uses
the ensemble MSE matrix) are computed afterwards.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..classical import GaussianDensity, QuadratureTransform, VectorFunction, classical_transform, mc_transform
from ..errors import InvalidParameterError
from ..filtering import run_filter
from ..gpq import GPQTransform, RbfKernelParams
from ..sigma_points import make_rule, sr_points
from . import metrics
from .models import (
    ReentryConfig,
    UngmConfig,
    polar2cartesian,
    reentry_model,
    reentry_simulate_run,
    ungm_model,
    ungm_simulate_run,
)


def _map_runs(fn, items, jobs=1):
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# polar -> Cartesian


@dataclass(frozen=True)
class PolarConfig:
    n_positions: int = 10
    radius_start: float = 2.0
    radius_step: float = 0.5
    angle_step: float = math.pi / 4
    sigma_r: float = 0.5
    sigma_theta_deg: tuple = (6.0, 36.0)
    n_sigma_theta: int = 10
    lengthscales: tuple = (60.0, 6.0)
    alpha: float = 1.0
    mc_samples: int = 10_000
    seed: int = 0

    def means(self):
        i = np.arange(self.n_positions)
        return np.column_stack([self.radius_start + self.radius_step * i, i * self.angle_step])

    def sigmas_deg(self):
        return np.linspace(self.sigma_theta_deg[0], self.sigma_theta_deg[1], self.n_sigma_theta)


@dataclass(frozen=True, eq=False)
class PolarResult:
    """SKL of each transform against the Monte Carlo truth.

    ``skl`` has shape ``(n_positions, n_sigma_theta, len(transforms))``.
    """

    skl: np.ndarray
    transforms: tuple
    sigma_theta_deg: np.ndarray
    means: np.ndarray

    def average_over_variances(self):
        """Per-position curve ``(n_positions, n_transforms)``."""
        return self.skl.mean(axis=1)

    def average_over_positions(self):
        """Per-azimuth-variance curve ``(n_sigma_theta, n_transforms)``."""
        return self.skl.mean(axis=0)

    def rows(self):
        for i in range(self.skl.shape[0]):
            for j, s in enumerate(self.sigma_theta_deg):
                for t, name in enumerate(self.transforms):
                    yield i, s, name, self.skl[i, j, t]


def polar_experiment(config: PolarConfig = PolarConfig()):
    g = VectorFunction(polar2cartesian, 2, 2, vectorized=True)
    sr = sr_points(2)
    gpq = GPQTransform(sr, RbfKernelParams(config.alpha, config.lengthscales))
    sig = config.sigmas_deg()
    means = config.means()
    out = np.empty((len(means), len(sig), 2))
    for i, m in enumerate(means):
        for j, s in enumerate(np.deg2rad(sig)):
            d = GaussianDensity(m, np.diag([config.sigma_r**2, s**2]))
            truth = mc_transform(g, d, config.mc_samples, [config.seed, i, j]).output_density()
            out[i, j, 0] = metrics.skl(truth, classical_transform(g, d, sr).output_density())
            out[i, j, 1] = metrics.skl(truth, gpq(g, d).output_density())
    return PolarResult(out, ("SR", "GPQ-SR"), sig, means)


# ---------------------------------------------------------------------------
# filter specifications


@dataclass(frozen=True)
class FilterSpec:
    """Recipe for a sigma-point filter.

    `rule` is ``ut``, ``sut``, ``sr`` or ``gh``.  With ``gpq=True`` the
    rule's points feed the GPQ transform with kernel (`alpha`,
    `lengthscales`) for the dynamics and (`obs_alpha`, `obs_lengthscales`)
    for the observation; the latter default to the former.
    """

    name: str
    rule: str = "ut"
    kappa: float = 0.0
    order: int = 3
    alpha_ut: float = 1.0
    beta_ut: float = 2.0
    gpq: bool = False
    alpha: float = 1.0
    lengthscales: tuple = (1.0,)
    obs_alpha: float = None
    obs_lengthscales: tuple = None

    def transforms(self, dim):
        rule = make_rule(self.rule, dim, self.kappa, self.order, self.alpha_ut, self.beta_ut)
        if not self.gpq:
            t = QuadratureTransform(rule)
            return t, t
        dyn = GPQTransform(rule, RbfKernelParams(self.alpha, self.lengthscales))
        oa = self.alpha if self.obs_alpha is None else self.obs_alpha
        ol = self.lengthscales if self.obs_lengthscales is None else self.obs_lengthscales
        return dyn, GPQTransform(rule, RbfKernelParams(oa, ol))


def _ungm_specs():
    specs = [
        FilterSpec("UKF", "ut", kappa=0.0),
        FilterSpec("GPQKF-UT", "ut", kappa=0.0, gpq=True, lengthscales=(3.0,)),
        FilterSpec("CKF", "sr"),
        FilterSpec("GPQKF-SR", "sr", gpq=True, lengthscales=(0.3,)),
    ]
    for r in (5, 7, 10, 15, 20):
        ell = 0.3 if r == 5 else 0.1
        specs.append(FilterSpec(f"GHKF-{r}", "gh", order=r))
        specs.append(FilterSpec(f"GPQKF-GH{r}", "gh", order=r, gpq=True, lengthscales=(ell,)))
    return tuple(specs)


#: Filters of the UNGM study with their published kernel settings (alpha = 1).
UNGM_FILTERS = _ungm_specs()

#: The two filters of the reentry tracking study.
REENTRY_FILTERS = (
    FilterSpec("UKF", "sut", kappa=0.0, alpha_ut=1.0, beta_ut=2.0),
    FilterSpec(
        "GPQKF-UT", "ut", kappa=0.0, gpq=True,
        alpha=0.5, lengthscales=(10.0, 10.0, 10.0),
        obs_alpha=0.5, obs_lengthscales=(15.0, 20.0, 20.0),
    ),
)


def select_filters(names, catalog):
    by_name = {s.name.lower(): s for s in catalog}
    try:
        return tuple(by_name[n.strip().lower()] for n in names)
    except KeyError as exc:
        raise InvalidParameterError(
            f"unknown filter {exc.args[0]!r}; choose from {', '.join(s.name for s in catalog)}"
        ) from None


# ---------------------------------------------------------------------------
# filtering benchmarks


@dataclass(frozen=True, eq=False)
class FilterEnsemble:
    """Truth and one filter's estimates over all runs: ``(M, K, D)`` / ``(M, K, D, D)``."""

    name: str
    truth: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    @property
    def errors(self):
        return self.truth - self.means

    def rmse_per_run(self):
        return np.array([metrics.rmse(x, m) for x, m in zip(self.truth, self.means)])

    def nll_per_run(self):
        return np.array([metrics.nll(x, m, P) for x, m, P in zip(self.truth, self.means, self.covs)])

    def nci_per_run(self):
        return metrics.inclination_per_run(self.truth, self.means, self.covs)

    def rmse_curve(self):
        """Per-step RMSE across runs, ``(K, D)`` per component and ``(K,)`` for the state."""
        e2 = self.errors**2
        return np.sqrt(e2.mean(axis=0)), np.sqrt(e2.sum(axis=2).mean(axis=0))

    def nci_curve(self):
        """Per-step inclination, ``(K, D)`` per component and ``(K,)`` for the state."""
        full = np.nanmean(metrics.inclination_terms(self.truth, self.means, self.covs), axis=0)
        return metrics.inclination_per_component(self.truth, self.means, self.covs), full


@dataclass(frozen=True, eq=False)
class MetricsSummary:
    """Run-averaged criteria with bootstrap bands and per-step curves.

    ``rmse``, ``nll`` and ``nci`` are ``(mean, band)`` pairs where the band is
    two bootstrap standard deviations.
    """

    name: str
    rmse: tuple
    nll: tuple
    nci: tuple
    rmse_per_run: np.ndarray
    nll_per_run: np.ndarray
    nci_per_run: np.ndarray
    rmse_curve: np.ndarray  # (K, D)
    nci_curve: np.ndarray  # (K, D)
    state_rmse_curve: np.ndarray  # (K,)
    state_nci_curve: np.ndarray  # (K,)


def summarize(ens: FilterEnsemble, n_resamples=1000, seed=0):
    r, n, c = ens.rmse_per_run(), ens.nll_per_run(), ens.nci_per_run()
    rc, rs = ens.rmse_curve()
    cc, cs = ens.nci_curve()
    return MetricsSummary(
        ens.name,
        metrics.bootstrap_ci(r, n_resamples, seed),
        metrics.bootstrap_ci(n, n_resamples, seed),
        metrics.bootstrap_ci(c, n_resamples, seed),
        r, n, c, rc, cc, rs, cs,
    )


@dataclass(frozen=True, eq=False)
class BenchmarkResult:
    summaries: dict
    times: np.ndarray
    components: tuple
    ensembles: dict = field(repr=False, default_factory=dict)

    def metric_rows(self):
        """``(run, filter, rmse, nll, nci)``, sorted by run then filter order."""
        names = list(self.summaries)
        M = len(next(iter(self.summaries.values())).rmse_per_run)
        for m in range(M):
            for n in names:
                s = self.summaries[n]
                yield m, n, s.rmse_per_run[m], s.nll_per_run[m], s.nci_per_run[m]

    def curve_rows(self):
        """``(t, filter, component, rmse, nu)``; component ``state`` is the full vector."""
        for k, t in enumerate(self.times):
            for n, s in self.summaries.items():
                for d, comp in enumerate(self.components):
                    yield t, n, comp, s.rmse_curve[k, d], s.nci_curve[k, d]
                if len(self.components) > 1:
                    yield t, n, "state", s.state_rmse_curve[k], s.state_nci_curve[k]


def _filter_runs(args):
    kind, config, specs, run = args
    if kind == "ungm":
        x0, xs, zs = ungm_simulate_run(config, run)
        model, truth = ungm_model(config), xs[:, None]
    else:
        x0, xs, zs = reentry_simulate_run(config, run)
        model, truth = reentry_model(config), xs
    out = []
    for spec in specs:
        tdyn, tobs = spec.transforms(model.state_dim)
        fr = run_filter(model, tdyn, tobs, zs)
        out.append((fr.filtered_means, fr.filtered_covs))
    return truth, out


def _benchmark(kind, config, specs, times, components, jobs, n_resamples):
    if len({s.name for s in specs}) != len(specs):
        raise InvalidParameterError("filter names must be unique")
    items = [(kind, config, tuple(specs), m) for m in range(config.n_runs)]
    results = _map_runs(_filter_runs, items, jobs)
    truth = np.array([r[0] for r in results])
    summaries, ensembles = {}, {}
    for i, spec in enumerate(specs):
        ens = FilterEnsemble(
            spec.name,
            truth,
            np.array([r[1][i][0] for r in results]),
            np.array([r[1][i][1] for r in results]),
        )
        ensembles[spec.name] = ens
        summaries[spec.name] = summarize(ens, n_resamples, config.seed)
    return BenchmarkResult(summaries, times, components, ensembles)


def ungm_benchmark(config: UngmConfig = UngmConfig(), specs=UNGM_FILTERS, jobs=1, n_resamples=1000):
    """Run the UNGM filters over ``config.n_runs`` shared simulations."""
    times = np.arange(1, config.steps + 1, dtype=float)
    return _benchmark("ungm", config, specs, times, ("x",), jobs, n_resamples)


def reentry_benchmark(config: ReentryConfig = ReentryConfig(), specs=REENTRY_FILTERS, jobs=1, n_resamples=1000):
    """Reentry tracking: UKF against GPQKF with UT points; time axis in seconds."""
    times = config.dt * np.arange(1, config.steps + 1)
    return _benchmark("reentry", config, specs, times, ("position", "velocity", "ballistic"), jobs, n_resamples)
