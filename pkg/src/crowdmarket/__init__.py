"""Equilibrium solver and simulator for P2P crowdsensing data-sharing markets."""

from .model import (ActionChoice, BenefitVector, Curve, MarketParams, Role,
                    UnsupportedParameters, UserType, payoff, quality_price,
                    requester_reward, sensing_cost, utility)
from .partition import (MarketShares, PartitionGrid, QuadratureSpec,
                        best_response_actions, best_response_quality,
                        best_response_unaware, measure_partition)
from .unaware import (BracketError, Regime, RegimeClassification, UnawareEquilibrium,
                      classify_regime, lambda_high, lambda_low, lambda_residual,
                      phi_critical, solve_unaware_equilibrium)
from .dynamics import (IterationConfig, IterationTrace, TraceStep, damping_threshold,
                       iterate_quality, iterate_unaware)
from .quality import QualityResidual, avg_benefit, residual, solve_quality_equilibrium
from .welfare import (WelfareReport, max_welfare_quality, max_welfare_unaware,
                      social_welfare, welfare_report)
from .agents import AgentSimResult, Population, run_finite_simulation, sample_population
from .experiments import (ConfigError, ReportRow, ScenarioConfig, SweepAxis, SweepReport,
                          builtin_recipes, get_recipe, load_config, dump_config,
                          quality_benchmark_market, run_scenario)

__version__ = "0.1.0"
