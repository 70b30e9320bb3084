import hashlib
import logging
import typing as t
from pathlib import Path

from lxml import etree as ET  # noqa: N812
from pydantic import ConfigDict, PrivateAttr, ValidationError, field_validator
import pydantic_xml as pxml
from pydantic_xml.element.element import SearchMode

from . import constants
from .errors import InvalidConfigError
from .linalg import HilbertSpec
from .measurement import BottleConfig
from .trap import DriveConfig, SpinDriveConfig, TrapConfig

log = logging.getLogger("geoniumlogger")

# Python field name -> element tag, used to point errors at a source line.
SECTION_TAGS = {
    "trap": "trap",
    "drive": "drive",
    "spin_drive": "spin-drive",
    "sim": "sim",
    "thresholds": "thresholds",
    "bottle": "bottle",
}


class SimSection(pxml.BaseXmlModel, tag="sim"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    axial_dim: int = pxml.attr(name="axial-dim", default=constants.DEFAULT_AXIAL_DIM)
    cyclotron_dim: int = pxml.attr(
        name="cyclotron-dim", default=constants.DEFAULT_CYCLOTRON_DIM
    )
    # 0 picks the step from the fastest significant oscillation.
    step: float = pxml.attr(default=0.0)
    points_per_period: int = pxml.attr(
        name="points-per-period", default=constants.POINTS_PER_PERIOD
    )

    @field_validator("axial_dim")
    @classmethod
    def axial_dim_validator(cls, v: int) -> int:
        if v < 2:
            raise ValueError("axial-dim must be at least 2")
        return v

    @field_validator("cyclotron_dim", "points_per_period")
    @classmethod
    def positive_int_validator(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("step")
    @classmethod
    def step_validator(cls, v: float) -> float:
        if v < 0:
            raise ValueError("step must not be negative")
        return v

    def hilbert_spec(self) -> HilbertSpec:
        return HilbertSpec(axial_dim=self.axial_dim, cyclotron_dim=self.cyclotron_dim)

    @property
    def explicit_step(self) -> t.Optional[float]:
        return self.step or None


class ThresholdSection(pxml.BaseXmlModel, tag="thresholds"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    fidelity: float = pxml.attr(default=constants.FIDELITY_THRESHOLD)
    leakage: float = pxml.attr(default=constants.LEAKAGE_THRESHOLD)
    phase_tolerance: float = pxml.attr(
        name="phase-tolerance", default=constants.PHASE_TOLERANCE
    )
    full_phase_tolerance: float = pxml.attr(
        name="full-phase-tolerance", default=constants.FULL_PHASE_TOLERANCE
    )

    @field_validator("fidelity")
    @classmethod
    def fidelity_validator(cls, v: float) -> float:
        if not 0 <= v <= 1:
            raise ValueError("fidelity threshold must lie in [0, 1]")
        return v

    @field_validator("leakage", "phase_tolerance", "full_phase_tolerance")
    @classmethod
    def positive_validator(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tolerances must be positive")
        return v


class BottleSection(pxml.BaseXmlModel, tag="bottle"):
    model_config = ConfigDict(extra="forbid", frozen=True)
    omega_tilde: float = pxml.attr(name="omega-tilde", default=1.0)

    @field_validator("omega_tilde")
    @classmethod
    def omega_tilde_validator(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("omega-tilde must be positive")
        return v


class ExperimentConfig(
    pxml.BaseXmlModel, tag="geonium", search_mode=SearchMode.UNORDERED
):
    """
    A geonium configuration file: one `<trap>` element (required) plus optional
    drive, spin-drive, simulation, threshold and bottle sections.
    """

    model_config = ConfigDict(extra="forbid")
    _source_hash: str = PrivateAttr(default="")
    trap: TrapConfig = pxml.element()
    drive: DriveConfig = pxml.element(default=DriveConfig())
    spin_drive: SpinDriveConfig = pxml.element(default=SpinDriveConfig())
    sim: SimSection = pxml.element(default=SimSection())
    thresholds: ThresholdSection = pxml.element(default=ThresholdSection())
    bottle: BottleSection = pxml.element(default=BottleSection())

    @property
    def source_hash(self) -> str:
        return self._source_hash

    def bottle_config(self) -> BottleConfig:
        return BottleConfig(
            omega_tilde=self.bottle.omega_tilde, g_factor=self.trap.g_factor
        )

    @classmethod
    def parse(cls, path: t.Union[Path, str]) -> "ExperimentConfig":
        """
        Read and validate a configuration file.  Every failure becomes an
        `InvalidConfigError` that names the file and the line of the offending
        element.
        """
        path = Path(path)
        try:
            xml_bytes = path.read_bytes()
        except OSError as e:
            raise InvalidConfigError(f"{path}: cannot read configuration ({e})")
        try:
            root = ET.fromstring(xml_bytes)
        except ET.XMLSyntaxError as e:
            raise InvalidConfigError(f"{path}:{e.lineno}: {e.msg}", line=e.lineno)
        try:
            config = cls.from_xml(xml_bytes)
        except ValidationError as e:
            raise _located_error(path, root, e) from e
        config._source_hash = config_hash(xml_bytes)
        return config


def config_hash(xml_bytes: bytes) -> str:
    return hashlib.sha256(xml_bytes).hexdigest()[:12]


def _located_error(
    path: Path, root: ET._Element, error: ValidationError
) -> InvalidConfigError:
    first = error.errors()[0]
    location = [str(part) for part in first["loc"]]
    section = next((part for part in location if part in SECTION_TAGS), None)
    element = root.find(SECTION_TAGS[section]) if section else None
    line = element.sourceline if element is not None else root.sourceline
    where = SECTION_TAGS[section] if section else root.tag
    message = first["msg"].replace("Value error, ", "")
    if first["type"] == "missing":
        message = f"missing required {location[-1] if location else 'value'}"
    detail = [part for part in location if part != section]
    if detail and first["type"] != "missing":
        message = f"{detail[-1]}: {message}"
    return InvalidConfigError(f"{path}:{line}: {where}: {message}", line=line)
