"""Mixed-preemption scheduling for energy-harvesting intermittent devices."""

from ._ipdsched import (
    DomainError,
    Taskset,
    analyze,
    charging_utilization,
    generate,
    min_capacitor,
    policies,
    presets,
    run_experiment,
    simulate,
)

__all__ = [
    "DomainError",
    "Taskset",
    "analyze",
    "charging_utilization",
    "generate",
    "min_capacitor",
    "policies",
    "presets",
    "run_experiment",
    "simulate",
]
