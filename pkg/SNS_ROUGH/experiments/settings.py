"""Experiment configuration: the solver configuration plus ensemble, ladder and study settings."""

import json
import logging
import os
from typing import Dict
from typing import Optional
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import validator

from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.solver import SolverConfig


logger = logging.getLogger(__name__)


class UniquenessSettings(BaseModel):
    delta0: float = 1e-8
    C_bar: Optional[float] = None
    N_stop: float = 1e3
    perturbation_mode: Tuple[int, ...] = (1, 0)
    delta_ladder: Tuple[float, ...] = ()

    class Config:
        frozen = True

    @validator("delta0")
    def check_perturbation(cls, delta0):
        if delta0 < 0:
            raise ValueError("perturbation size must be non-negative")
        return delta0

    @validator("N_stop")
    def check_threshold(cls, N_stop):
        if N_stop <= 0:
            raise ValueError("stopping threshold must be positive")
        return N_stop

    @validator("delta_ladder")
    def check_ladder(cls, ladder):
        if any(delta <= 0 for delta in ladder) or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("perturbation ladder must be positive and strictly increasing")
        return ladder


class OUSettings(BaseModel):
    """Moment study of the stochastic convolution: E||z||^m in L^m(0, T; H^{eps,4}) and E||z||^p in C^beta."""

    m: int = 2
    p: int = 20
    epsilon: float = 0.0
    exactness_paths: int = 100000
    exactness_modes: int = 4

    class Config:
        frozen = True

    @validator("m", "p", "exactness_paths", "exactness_modes")
    def check_positive(cls, value, field):
        if value < 1:
            raise ValueError(f"{field.name} must be positive")
        return value

    @validator("epsilon")
    def check_extra_regularity(cls, epsilon):
        if epsilon < 0:
            raise ValueError("extra regularity epsilon must be non-negative")
        return epsilon


class TightnessSettings(BaseModel):
    """Thresholds eta are these factors times the pooled mean of each statistic."""

    eta_factors: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)

    class Config:
        frozen = True

    @validator("eta_factors")
    def check_factors(cls, factors):
        if not factors or any(factor <= 0 for factor in factors):
            raise ValueError("eta factors must be positive")
        return factors


class ExperimentConfig(BaseModel):
    base: SolverConfig = SolverConfig()
    n_ladder: Tuple[int, ...] = (1, 4, 16, 64, 256)
    paths: int = 200
    beta: Optional[float] = None
    delta: Optional[float] = None
    gamma: Optional[float] = None
    uniqueness: UniquenessSettings = UniquenessSettings()
    ou: OUSettings = OUSettings()
    tightness: TightnessSettings = TightnessSettings()

    class Config:
        frozen = True

    @validator("n_ladder")
    def check_ladder(cls, ladder):
        if not ladder or ladder[0] < 1 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("n ladder must be positive and strictly increasing")
        return ladder

    @validator("paths")
    def check_paths(cls, paths):
        if paths < 1:
            raise ValueError("at least one path is required")
        return paths

    def holder_exponents(self) -> Tuple[float, float, float]:
        """(beta, delta, gamma) with defaults beta = delta = (1 - g) / 4 and gamma = min(beta, 1 - d / 4)."""
        g = self.base.noise.g
        beta = self.beta if self.beta is not None else (1 - g) / 4
        delta = self.delta if self.delta is not None else (1 - g) / 4
        gamma = self.gamma if self.gamma is not None else min(beta, 1 - self.base.d / 4)
        if beta + delta / 2 + 1 / self.ou.p >= (1 - g) / 2:
            logger.warning(
                "beta + delta / 2 + 1 / p = %.4g is not below (1 - g) / 2 = %.4g; Hölder moments may not be bounded",
                beta + delta / 2 + 1 / self.ou.p, (1 - g) / 2
            )
        return beta, delta, gamma

    def path_seed(self, index: int) -> int:
        """Seed of ensemble path index, derived from the master seed."""
        sequence = np.random.SeedSequence(self.base.wiener_seed, spawn_key=(index,))
        return int(sequence.generate_state(1)[0])

    def resolved(self, constants: Optional[Dict[str, float]] = None) -> Dict:
        """Configuration with every derived default filled in, as recorded in run-meta.json."""
        beta, delta, gamma = self.holder_exponents()
        resolved = json.loads(self.json())
        resolved.update({"beta": beta, "delta": delta, "gamma": gamma})
        resolved["base"]["wiener_seed"] = self.base.wiener_seed
        resolved["base"]["steps"] = self.base.steps
        if constants:
            resolved["constants"] = dict(sorted(constants.items()))
        return resolved


def load_experiment_config(path: Optional[str]) -> Tuple[ExperimentConfig, bytes]:
    """Parse a JSON configuration file.

    A file without a "base" section is read as a bare solver configuration.

    Args:
        path: JSON file, or None for all defaults

    Returns:
        Tuple of the configuration and the raw file contents

    """
    if path is None:
        return ExperimentConfig(), b""
    if not os.path.exists(path):
        raise ValidationFailure(f"config file not found: {path}")

    with open(path, "rb") as f:
        raw = f.read()
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.decoder.JSONDecodeError) as error:
        raise ValidationFailure(f"config file {path} is not valid JSON: {error}") from error
    if not isinstance(data, dict):
        raise ValidationFailure(f"config file {path} must hold a JSON object")

    if "base" not in data:
        data = {"base": data}
    return ExperimentConfig.parse_obj(data), raw


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Re-validate the configuration with command-line overrides (None values are ignored)."""
    data = json.loads(cfg.json())
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "seed":
            data["base"]["seed"] = value
        else:
            data[key] = value
    return ExperimentConfig.parse_obj(data)
