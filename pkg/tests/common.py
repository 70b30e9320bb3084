from pathlib import Path

from geonium.config import ExperimentConfig
from geonium.trap import Couplings

EXAMPLES_DIR = Path(__file__).parent.resolve() / "examples"
CONFIGS_DIR = EXAMPLES_DIR / "configs"
TEMPLATE = Path(__file__).parent.parent.resolve() / "templates" / "geonium.xml"


def config_path(name: str) -> Path:
    return CONFIGS_DIR / f"{name}.xml"


def load_config(name: str) -> ExperimentConfig:
    return ExperimentConfig.parse(config_path(name))


# Dimensionless couplings in units of omega_z: zeta = 1, lambda = 0.1.
UNIT_COUPLINGS = Couplings.from_strengths(zeta=1.0, lamb_dicke=0.1, rabi_s=1.0, epsilon=1.0)
