"""Scenario configuration, parameter sweeps, and machine-readable reports.

A scenario bundles market parameters, iteration and quadrature settings, a
solver choice, and optional sweep axes.  Sweeps expand to a cartesian grid
in axis order; every grid point yields one CSV row (one per seed for the
finite-agent solver).  Reports are a CSV plus a JSON sidecar carrying the
full config and a content hash with timings masked, so reruns are diffable.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import hashlib
import itertools
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .agents import run_finite_simulation, sample_population
from .dynamics import IterationConfig, iterate_quality, iterate_unaware
from .model import Curve, MarketParams
from .partition import QuadratureSpec, measure_partition
from .unaware import solve_unaware_equilibrium
from .welfare import max_welfare_quality, social_welfare

__all__ = [
    "ConfigError",
    "SweepAxis",
    "ScenarioConfig",
    "ReportRow",
    "SweepReport",
    "run_scenario",
    "builtin_recipes",
    "get_recipe",
    "load_config",
    "dump_config",
]

_SOLVERS = ("analytic", "iterate", "agents")
_MODES = ("unaware", "matching", "cross")
_SWEEPABLE = ("eta", "s", "p0", "p1", "w", "alpha_v", "alpha_c")


class ConfigError(ValueError):
    """A scenario document failed validation; the message names the field."""


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    market: MarketParams
    iteration: IterationConfig = field(default_factory=IterationConfig)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    mode: str = "unaware"
    solver: str = "analytic"
    sweep: tuple[SweepAxis, ...] = ()
    seeds: tuple[int, ...] = (0,)
    population: int = 100_000
    description: str = ""

    def __post_init__(self):
        if self.solver not in _SOLVERS:
            raise ConfigError(f"solver: expected one of {_SOLVERS}, got {self.solver!r}")
        if self.mode not in _MODES:
            raise ConfigError(f"mode: expected one of {_MODES}, got {self.mode!r}")
        if self.solver == "analytic" and self.mode != "unaware":
            raise ConfigError("solver: the analytic solver covers the unaware mode only")
        if self.mode == "unaware" and self.market.n_qualities != 1:
            raise ConfigError("mode: unaware mode requires a single-grade quality grid")
        for axis in self.sweep:
            if axis.param not in _SWEEPABLE:
                raise ConfigError(f"sweep: unknown parameter {axis.param!r}; "
                                  f"sweepable: {_SWEEPABLE}")
            if len(axis.values) == 0:
                raise ConfigError(f"sweep: value list for {axis.param!r} is empty")
        if len(self.seeds) == 0:
            raise ConfigError("seeds: need at least one seed")
        if self.population < 1:
            raise ConfigError("population: must be at least 1")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "mode": self.mode,
            "solver": self.solver,
            "market": self.market.to_dict(),
            "iteration": {
                "damping": self.iteration.damping,
                "tol": self.iteration.tol,
                "max_iters": self.iteration.max_iters,
            },
            "quadrature": {"resolution": self.quadrature.resolution,
                           "rule": self.quadrature.rule},
            "sweep": [{"param": a.param, "values": list(a.values)} for a in self.sweep],
            "seeds": list(self.seeds),
            "population": self.population,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ScenarioConfig":
        def sub(key, builder, default):
            raw = doc.get(key)
            if raw is None:
                return default
            if not isinstance(raw, dict):
                raise ConfigError(f"{key}: expected a mapping, got {type(raw).__name__}")
            try:
                return builder(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}") from exc

        market_raw = doc.get("market")
        if not isinstance(market_raw, dict):
            raise ConfigError("market: section is required and must be a mapping")
        try:
            market = MarketParams.from_dict(market_raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"market: {exc}") from exc
        iteration = sub("iteration", lambda d: IterationConfig(**d), IterationConfig())
        quadrature = sub("quadrature", lambda d: QuadratureSpec(**d), QuadratureSpec())
        axes = []
        for i, raw in enumerate(doc.get("sweep") or []):
            if not isinstance(raw, dict) or "param" not in raw or "values" not in raw:
                raise ConfigError(f"sweep[{i}]: expected a mapping with 'param' and 'values'")
            axes.append(SweepAxis(str(raw["param"]), tuple(float(x) for x in raw["values"])))
        return ScenarioConfig(
            name=str(doc.get("name", "scenario")),
            market=market,
            iteration=iteration,
            quadrature=quadrature,
            mode=str(doc.get("mode", "unaware")),
            solver=str(doc.get("solver", "analytic")),
            sweep=tuple(axes),
            seeds=tuple(int(x) for x in doc.get("seeds", [0])),
            population=int(doc.get("population", 100_000)),
            description=str(doc.get("description", "")),
        )


def load_config(path) -> ScenarioConfig:
    """Parse a scenario document; errors carry the offending field or line."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ScenarioConfig.from_dict(doc)


def dump_config(config: ScenarioConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))


@dataclass(frozen=True)
class ReportRow:
    params: tuple[tuple[str, float], ...]   # swept (name, value) pairs, plus seed if any
    phi: tuple[float, ...]
    sensor: tuple[float, ...]
    requester: tuple[float, ...]
    alien: float
    welfare: float
    max_welfare: float
    ratio: float
    converged: bool
    iters: int
    ms: float


@dataclass(frozen=True)
class SweepReport:
    config: ScenarioConfig
    rows: tuple[ReportRow, ...]

    @property
    def failures(self) -> int:
        return sum(1 for r in self.rows if not r.converged)

    def header(self) -> list[str]:
        kq = self.config.market.n_qualities
        cols = [name for name, _ in (self.rows[0].params if self.rows else [])]
        if not self.rows:
            cols = [a.param for a in self.config.sweep]
            if self.config.solver == "agents":
                cols.append("seed")
        cols += [f"phi_{k}" for k in range(1, kq + 1)]
        cols += [f"share_sensor_{k}" for k in range(1, kq + 1)]
        cols += [f"share_requester_{k}" for k in range(1, kq + 1)]
        cols += ["share_alien", "welfare", "max_welfare", "ratio", "converged", "iters", "ms"]
        return cols

    def to_csv(self, mask_ms: bool = False) -> str:
        def num(x) -> str:
            return format(float(x), ".12g")

        lines = [",".join(self.header())]
        for r in self.rows:
            vals = [num(v) for _, v in r.params]
            vals += [num(x) for x in r.phi]
            vals += [num(x) for x in r.sensor]
            vals += [num(x) for x in r.requester]
            vals += [num(r.alien), num(r.welfare), num(r.max_welfare), num(r.ratio)]
            vals += ["true" if r.converged else "false", str(r.iters)]
            vals += ["0" if mask_ms else format(r.ms, ".3f")]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        # timings masked so identical reruns hash identically
        return hashlib.sha256(self.to_csv(mask_ms=True).encode()).hexdigest()

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.config.name}.csv"
        json_path = out / f"{self.config.name}.json"
        csv_path.write_text(self.to_csv())
        sidecar = {
            "config": self.config.to_dict(),
            "content_hash": self.content_hash(),
            "rows": len(self.rows),
            "failures": self.failures,
        }
        json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _grid_points(config: ScenarioConfig):
    axes = [[(a.param, v) for v in a.values] for a in config.sweep]
    if not axes:
        yield ()
        return
    yield from itertools.product(*axes)


def _compute_row(args) -> ReportRow:
    config, point, seed = args
    market = config.market
    if point:
        market = replace(market, **dict(point))
    quad = config.quadrature
    label = tuple(point)
    start = time.perf_counter()
    try:
        if config.solver == "analytic":
            eq = solve_unaware_equilibrium(market, quad=quad)
            phi, shares = (eq.phi_star,), eq.shares
            converged, iters = True, eq.iterations
        elif config.solver == "iterate":
            if config.mode == "unaware":
                trace = iterate_unaware(market, config.iteration, quad=quad)
            else:
                trace = iterate_quality(market, config.iteration, mode=config.mode, quad=quad)
            phi = trace.final.phi
            shares = trace.steps[-1].shares
            converged, iters = trace.converged, trace.iterations
        else:
            pop = sample_population(config.population, seed)
            res = run_finite_simulation(pop, market, config.iteration, mode=config.mode)
            label = label + (("seed", float(seed)),)
            ms = (time.perf_counter() - start) * 1e3
            ratio = res.welfare / res.max_welfare if res.max_welfare > 0 else float("nan")
            return ReportRow(label, res.phi, res.shares.sensor, res.shares.requester,
                             res.shares.alien, res.welfare, res.max_welfare, ratio,
                             res.converged, res.rounds, ms)
        welfare = social_welfare(phi, market, quad)
        mx = max_welfare_quality(market, quad)
        ratio = welfare / mx if mx > 0 else float("nan")
        ms = (time.perf_counter() - start) * 1e3
        return ReportRow(label, phi, shares.sensor, shares.requester, shares.alien,
                         welfare, mx, ratio, converged, iters, ms)
    except Exception:
        # a failed point is recorded, never aborts the sweep
        kq = market.n_qualities
        nan = float("nan")
        ms = (time.perf_counter() - start) * 1e3
        if config.solver == "agents":
            label = label + (("seed", float(seed)),)
        return ReportRow(label, (nan,) * kq, (nan,) * kq, (nan,) * kq, nan,
                         nan, nan, nan, False, 0, ms)


def run_scenario(config: ScenarioConfig, out_dir=None, workers: int = 1) -> SweepReport:
    """Run every grid point (and seed, for the agent solver) of a scenario.

    Rows are emitted in sweep order regardless of worker completion order.
    """
    seeds = config.seeds if config.solver == "agents" else (None,)
    tasks = [(config, point, seed) for point in _grid_points(config) for seed in seeds]
    if workers > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(_compute_row, tasks))
    else:
        rows = tuple(_compute_row(t) for t in tasks)
    report = SweepReport(config, rows)
    if out_dir is not None:
        report.write(out_dir)
    return report


def _unaware_market(eta: float, s: float = 0.2, p0: float = 0.0) -> MarketParams:
    return MarketParams(eta=eta, s=s, p0=p0)


def quality_benchmark_market(s: float = 0.2, p1: float = 0.35, p0: float = 0.1) -> MarketParams:
    """Two-grade market with log value, square-root cost, and affine pricing."""
    return MarketParams(eta=1.0, s=s, p0=p0, p1=p1,
                        quality_grid=(1.0, 2.0), alpha_v=0.4, alpha_c=0.1,
                        value_curve=Curve.log1p(), cost_curve=Curve.power(0.5))


def _steps(lo: float, hi: float, step: float) -> tuple[float, ...]:
    n = round((hi - lo) / step)
    return tuple(round(lo + i * step, 10) for i in range(n + 1))


def builtin_recipes() -> list[ScenarioConfig]:
    """Named sweep scenarios covering the standard benchmark grids."""
    unaware = _unaware_market(1.0)
    eta_axis = SweepAxis("eta", _steps(0.5, 1.0, 0.1))
    p_axis = SweepAxis("p0", _steps(0.0, 0.5, 0.1))
    s_axis = SweepAxis("s", _steps(0.1, 0.5, 0.1))
    s_wide = SweepAxis("s", _steps(0.0, 1.0, 0.05))
    s_quality = SweepAxis("s", _steps(0.1, 0.5, 0.05))
    s_shares = SweepAxis("s", _steps(0.05, 0.6, 0.05))
    quality = quality_benchmark_market()
    # damping=None: the loop searches a ladder of factors, needed at low s
    # where the two grades couple strongly and mild damping oscillates
    q_iter = IterationConfig(damping=None, tol=1e-9, max_iters=5000)

    recipes = [
        ScenarioConfig("fig3", unaware, sweep=(eta_axis, s_axis),
                       description="welfare vs transmission cost for several revenue shares, free price"),
        ScenarioConfig("fig4", unaware, sweep=(p_axis, s_axis),
                       description="welfare vs transmission cost for several posted prices, full revenue retention"),
        ScenarioConfig("fig5", unaware, sweep=(eta_axis, s_axis),
                       description="equilibrium-to-optimal welfare ratio across revenue shares"),
        ScenarioConfig("fig6", _unaware_market(0.4), sweep=(s_wide,),
                       description="market shares vs transmission cost, low revenue share"),
        ScenarioConfig("fig7", _unaware_market(0.8), sweep=(s_wide,),
                       description="market shares vs transmission cost, high revenue share"),
        ScenarioConfig("fig8", _unaware_market(1.0), sweep=(s_wide,),
                       description="market shares vs transmission cost, no revenue sharing"),
        ScenarioConfig("fig9", quality, mode="matching", solver="iterate", iteration=q_iter,
                       sweep=(SweepAxis("p1", (0.2, 0.5, 0.8)), s_quality),
                       description="two-grade welfare vs cost and price slope, matching sharing"),
        ScenarioConfig("fig10", quality_benchmark_market(), mode="matching", solver="iterate",
                       iteration=q_iter,
                       description="two-grade equilibrium snapshot, matching sharing"),
        ScenarioConfig("fig11", quality_benchmark_market(), mode="matching", solver="iterate",
                       iteration=q_iter, sweep=(s_shares,),
                       description="two-grade market shares vs transmission cost, matching sharing"),
        ScenarioConfig("fig12", quality_benchmark_market(), mode="cross", solver="iterate",
                       iteration=q_iter,
                       description="two-grade equilibrium snapshot, cross-grade sharing"),
        ScenarioConfig("fig13", quality_benchmark_market(), mode="cross", solver="iterate",
                       iteration=q_iter, sweep=(s_shares,),
                       description="two-grade market shares vs transmission cost, cross-grade sharing"),
    ]
    return recipes


def get_recipe(name: str) -> ScenarioConfig:
    for recipe in builtin_recipes():
        if recipe.name == name:
            return recipe
    names = [r.name for r in builtin_recipes()]
    raise KeyError(f"no recipe named {name!r}; available: {names}")
