"""Adaptive moving-window patrol planning on a time-varying road graph."""

from .complaints import ComplaintPmf, EmpiricalEstimator, kolmogorov_distance, thin, tv_distance, update
from .detector import ShiftConfig, ShiftMonitor, dkw_threshold, network_divergence
from .engine import (
    PlannerConfig,
    RunConfig,
    compare_strategies,
    global_cost,
    run_random,
    run_stationary,
    run_tampa,
)
from .graph import PatrolGraph, adapt_graph_on_commute, build_graph, neighbors, shortest_path, split_edge
from .planner import MdpInstance, PlanningWindow, solve_window
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
