"""Variable-stiffness hopping leg: actuator model, dynamics, control,
and the experiment harness that reproduces the characterization and
hopping studies."""

from .actuator import (ActuatorDomainError, ActuatorState, BallScrewDrive,
                       GearCoupling, GearRangeError, LeafSpringParams,
                       baseline_power, elastic_energy, holding_force,
                       holding_power, knee_angle_from_deflection,
                       knee_torque, modulation_speed, output_stiffness,
                       output_torque, slider_for_stiffness,
                       spring_count_for_task, stiffness_bounds,
                       total_power_bounds)
from .config import (ConfigError, MotorModel, ObstacleSpec, SimConfig,
                     SimSettings, default_config, load_config)
from .dynamics import (ContactInfo, Event, LegParams, LegState, Phase,
                       SimulationFault, SingularConfigurationError,
                       forward_kinematics, leg_extension,
                       state_from_leg_frame)
from .fsm import (ActuationMode, FsmFault, HoppingFsm, HopPhase, HopPlan,
                  StiffnessSchedule, forward_plan, stiffness_motor_power)
from .harness import (CalibrationError, HopSimulator, RunMetrics, RunResult,
                      TraceError, TraceRecord, bench_modulation,
                      bench_power, bench_stiffness, calibrate_lever_arms,
                      energy_account, read_trace, run_forward_hop,
                      run_inplace_hop, run_sweep, write_run)
from .vmc import (ContactEstimate, JointTorques, VirtualTarget, VmcGains,
                  joint_torques, motor_torques, virtual_force)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
