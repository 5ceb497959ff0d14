from .config import ScenarioConfig, StepTestConfig, load_config
from .engine import SimulationError, run_scenario, simulate, step_test, step_test_suite
from .metrics import Metrics, compute_metrics
from .validate import Report, check_records, rate_violations, validate
from .records import StepRecord, TurbineRecord, read_records, write_records

__all__ = [
    "Metrics", "Report", "ScenarioConfig", "SimulationError", "StepRecord", "StepTestConfig", "TurbineRecord",
    "check_records", "compute_metrics", "load_config", "rate_violations", "read_records", "run_scenario", "simulate", "step_test",
    "step_test_suite", "validate", "write_records",
]
