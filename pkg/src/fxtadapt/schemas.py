from __future__ import annotations

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ScenarioId = Literal["gap", "overtake"]

ControllerKind = Literal["proposed", "robust-baseline", "certainty-equivalent"]

AdaptationLaw = Literal["fxts", "ft"]

QPStatus = Literal["optimal", "infeasible", "max-iterations"]

Decision = Literal["go-now", "go-after-1", "no-go"]

Termination = Literal["completed", "diverged", "infeasible"]

InfeasiblePolicy = Literal["abort", "hold"]


class EstimatorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    law: AdaptationLaw = "fxts"
    k_e: float = Field(0.001, gt=0)
    ell_e: float = Field(100.0, gt=0)
    c1e: float = Field(50.0, gt=0)
    c2e: float = Field(50.0, gt=0)
    mu_e: float = Field(5.0, gt=1)
    sigma: float = Field(1e-4, gt=0)
    gamma: Union[float, Literal["auto"]] = "auto"
    gamma_margin: float = Field(1.1, ge=1)
    theta_hat0: Union[Literal["center", "random"], List[float]] = "center"
    substep_fraction: float = Field(0.1, gt=0, le=1)
    max_substeps: int = Field(10000, ge=1)
    dead_zone: float = Field(1e-10, ge=0)
    rate_clamp: float = Field(1e6, gt=0)
    cond_max: float = Field(1e12, gt=1)

    @field_validator("gamma")
    @classmethod
    def _positive_gamma(cls, value):
        if value != "auto" and float(value) <= 0:
            raise ValueError("gamma must be positive or 'auto'")
        return value


class QPConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delta_min: float = Field(1.0, gt=0)
    delta_max: float = Field(1e6, gt=0)
    max_iter_factor: int = Field(100, ge=1)


class GapConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    K_delta: float = 0.833
    f1: float = 1.0
    f2: float = 4.0
    theta_true: List[float] = Field(default_factory=lambda: [-1.0, 1.0])
    theta_bar: float = Field(10.0, ge=0)
    a: float = Field(1.0, gt=0)
    b: float = Field(4.99, gt=0)
    x1: float = 1.0
    y1: float = -6.0
    x2: float = 1.0
    y2: float = 4.0
    K_V: float = Field(1.0, gt=0)
    T: float = Field(4.0, gt=0)
    mu: float = Field(5.0, gt=1)
    Q: List[float] = Field(default_factory=lambda: [1.0, 1.0])
    p0: float = Field(50.0, gt=0)
    p: List[float] = Field(default_factory=lambda: [5.0, 5.0])
    u_max: List[float] = Field(default_factory=lambda: [2.5, 2.5])
    x0: List[float] = Field(default_factory=lambda: [3.0, -10.0])
    goal_tol: float = Field(0.1, gt=0)
    t_final: float = Field(5.0, gt=0)

    @model_validator(mode="after")
    def _dimensions(self) -> "GapConfig":
        for name in ("theta_true", "Q", "p", "u_max", "x0"):
            if len(getattr(self, name)) != 2:
                raise ValueError(f"{name} must have 2 entries")
        return self


class OvertakeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    M: float = Field(1994.0, gt=0)
    l_c: float = Field(4.81, gt=0)
    w_c: float = Field(1.92, gt=0)
    e_r: float = 0.0
    e_l: float = 6.0
    K_s: float = Field(1.0, gt=0)
    L: float = Field(30.0, gt=0)
    tau: float = Field(1.8, gt=0)
    omega_max: float = Field(0.175, gt=0)
    a_max: float = Field(4890.0, gt=0)
    f_l1: float = 0.01
    f_l2: float = 0.02
    theta_true: List[float] = Field(default_factory=lambda: [1.0, 0.0])
    theta_bar: float = Field(10.0, ge=0)
    theta_bars: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 6.0, 8.0, 10.0])
    K_V: float = Field(1e-5, gt=0)
    k_x: float = Field(0.0625, ge=0)
    k_y: float = Field(100.0, ge=0)
    k_theta: float = Field(400.0, ge=0)
    k_v: float = Field(1.0, ge=0)
    mu: float = Field(5.0, gt=1)
    horizons: List[float] = Field(default_factory=lambda: [3.0, 5.0, 7.0, 5.0])
    p0: float = Field(5e8, gt=0)
    p: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0])
    lane_right: float = 1.5
    lane_left: float = 4.5
    # phase 1 closes in at lead speed + approach_margin
    approach_margin: float = 2.0
    v_cruise: float = Field(29.0, gt=0)
    v_return: float = Field(24.0, gt=0)
    oncoming_first: float = Field(24.0, gt=0)
    oncoming_interval: float = Field(30.0, gt=0)
    ego0: List[float] = Field(default_factory=lambda: [-64.8, 1.5, 0.0, 24.0])
    lead0: List[float] = Field(default_factory=lambda: [0.0, 1.5, 0.0, 19.0])
    t_final: float = Field(35.0, gt=0)

    @model_validator(mode="after")
    def _dimensions(self) -> "OvertakeConfig":
        if len(self.horizons) != 4 or min(self.horizons) <= 0:
            raise ValueError("horizons must hold 4 positive phase durations")
        if len(self.p) != 3:
            raise ValueError("p must have 3 entries")
        if len(self.ego0) != 4 or len(self.lead0) != 4:
            raise ValueError("ego0 and lead0 must have 4 entries")
        if len(self.theta_true) != 2:
            raise ValueError("theta_true must have 2 entries")
        return self


class ExperimentSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioId = "gap"
    controller: ControllerKind = "proposed"
    theta_bar: Optional[float] = Field(None, ge=0)
    dt: float = Field(1e-3, gt=0)
    t_final: Optional[float] = Field(None, gt=0)
    seed: int = 0
    out_dir: Optional[str] = None
    decimate: int = Field(1, ge=1)
    on_infeasible: InfeasiblePolicy = "hold"
    workers: int = Field(1, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    estimator: EstimatorConfig = Field(default_factory=EstimatorConfig)
    qp: QPConfig = Field(default_factory=QPConfig)
    gap: GapConfig = Field(default_factory=GapConfig)
    overtake: OvertakeConfig = Field(default_factory=OvertakeConfig)

    def theta_bar(self) -> float:
        if self.experiment.theta_bar is not None:
            return self.experiment.theta_bar
        return self.scenario_config().theta_bar

    def t_final(self) -> float:
        if self.experiment.t_final is not None:
            return self.experiment.t_final
        return self.scenario_config().t_final

    def scenario_config(self) -> Union[GapConfig, OvertakeConfig]:
        return self.gap if self.experiment.scenario == "gap" else self.overtake


class RunSummary(BaseModel):
    scenario: ScenarioId
    controller: ControllerKind
    theta_bar: float
    dt: float
    completion_time: Optional[float] = None
    goal_reached: bool = False
    min_barrier: Dict[str, float] = Field(default_factory=dict)
    min_barrier_margin: Dict[str, float] = Field(default_factory=dict)
    activation_time: Optional[float] = None
    settling_time: Optional[float] = None
    envelope_violations: int = 0
    infeasible_steps: int = 0
    rate_clamp_count: int = 0
    decision: Optional[Decision] = None
    termination: Termination = "completed"
    passed_gap: Optional[bool] = None
    phase_entry_times: List[float] = Field(default_factory=list)
    steps: int = 0


class SweepRow(BaseModel):
    theta_bar: float
    T_proposed: Optional[float] = None
    T_baseline: Optional[float] = None
    decision_proposed: Decision = "no-go"
    decision_baseline: Decision = "no-go"
    error: Optional[str] = None
