from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .controller import CbfQpController
from .estimator import ParameterEstimator
from .plant import PlantModel
from .schemas import ControllerKind, InfeasiblePolicy, ScenarioId
from .simulate import Observer, SimulationTrace, simulate


@dataclass
class Scenario:
    """A fully wired closed loop, ready to run."""

    scenario: ScenarioId
    kind: ControllerKind
    theta_bar: float
    model: PlantModel
    controller: CbfQpController
    estimator: ParameterEstimator
    x0: np.ndarray
    t_final: float
    dt: float
    barrier_labels: List[str]
    on_infeasible: InfeasiblePolicy = "hold"
    completion: Optional[Callable[[SimulationTrace], Optional[float]]] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def run(self, observer: Optional[Observer] = None) -> SimulationTrace:
        return simulate(
            self.model,
            self.controller,
            self.estimator,
            t_final=self.t_final,
            dt=self.dt,
            x0=self.x0,
            on_infeasible=self.on_infeasible,
            barrier_labels=self.barrier_labels,
            observer=observer,
        )

    def completion_time(self, trace: SimulationTrace) -> Optional[float]:
        return self.completion(trace) if self.completion else None
