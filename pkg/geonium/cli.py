import logging
import logging.handlers
import sys
import typing as t
import warnings
from enum import Enum
from functools import update_wrapper
from pathlib import Path

import click
import click_log
from pydantic import ValidationError

from . import constants, utils, VERSION
from .config import ExperimentConfig
from .errors import GeoniumError, InfeasibleCompensationError
from .gates import (
    CN_IDEAL,
    CN_SEQUENCE_MATRIX,
    REGISTER_LABELS,
    RwaCase,
    extract_gate,
    gate_report_xml,
    phase_equivalent,
    register_state,
    rwa_benchmark,
)
from .linalg import HilbertSpec, Mode, fidelity
from .measurement import (
    expected_outcomes,
    measure_shots,
    outcome_statistics,
    readout_transfer,
    transfer_time,
)
from .pulses import (
    LabContext,
    PulseSequence,
    SimulationMode,
    cn_sequence,
    compensation_time,
    initial_state,
    prepare_state,
    run,
)
from .trap import (
    derive_couplings,
    derive_frequencies,
    exact_radial_frequencies,
    frequency_band,
    hierarchy_report,
    resonance_detunings,
    typeset_transfer_time,
)
from .types import Amplitudes

log = logging.getLogger("geoniumlogger")

# Log messages go to stderr; stdout carries the result records.
click_handler = logging.StreamHandler(sys.stderr)
click_handler.setFormatter(click_log.ColorFormatter())
log.addHandler(click_handler)

# error_flush_handler captures error/critical logs for flushing to stderr at the end of a CLI run
sh = logging.StreamHandler(sys.stderr)
sh.setFormatter(click_log.ColorFormatter())
sh.setLevel(logging.ERROR)
error_flush_handler = logging.handlers.MemoryHandler(
    capacity=1024 * 100,
    flushLevel=100,
    target=sh,
    flushOnClose=False,
)
error_flush_handler.setLevel(logging.ERROR)
log.addHandler(error_flush_handler)


class Scenario(str, Enum):
    FREQS = "freqs"
    PREPARE = "prepare"
    CNOT = "cnot"
    RWA_SWEEP = "rwa-sweep"
    READOUT = "readout"
    ROUNDTRIP = "roundtrip"


# Turn validation and physics errors into log records instead of tracebacks.
def nice_errors(f: t.Callable[..., t.Optional[int]]) -> t.Any:
    @click.pass_context
    def try_except(ctx: click.Context, *args: t.Any, **kwargs: t.Any) -> t.Any:
        try:
            return ctx.invoke(f, *args, **kwargs)
        except ValidationError as e:
            log.critical("Failed to read a pulse sequence; fix the following errors:")
            for error in e.errors():
                location = ".".join(str(part) for part in error["loc"])
                if error["type"] == "missing":
                    log.error(f"A pulse is missing the required attribute {location}.")
                elif error["type"] == "enum":
                    log.error(
                        f"\"{error['input']}\" is not a pulse kind. {error['msg']}."
                    )
                elif error["type"] == "extra_forbidden":
                    log.error(f"Unexpected attribute {location}=\"{error['input']}\".")
                else:
                    message = error["msg"].replace("Value error, ", "")
                    log.error(f"{location}: {message}")
            log.debug("Exception info:\n------------------------\n", exc_info=True)
            return None
        except Exception as e:
            log.error(e)
            log.debug("Exception info:\n------------------------\n", exc_info=True)
            return None

    return update_wrapper(try_except, f)


class ComplexParamType(click.ParamType):
    name = "complex"

    def convert(
        self, value: t.Any, param: t.Optional[click.Parameter], ctx: t.Optional[click.Context]
    ) -> complex:
        if isinstance(value, complex):
            return value
        try:
            return complex(str(value).replace(" ", ""))
        except ValueError:
            self.fail(f"{value!r} is not a complex number", param, ctx)


COMPLEX = ComplexParamType()

CONTEXT_SETTINGS = dict(help_option_names=["-h", "--help"])


def config_argument(f: t.Callable[..., t.Any]) -> t.Callable[..., t.Any]:
    return click.argument("config", type=click.Path(dir_okay=False, path_type=Path))(f)


def out_option(f: t.Callable[..., t.Any]) -> t.Callable[..., t.Any]:
    return click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Write the records to this file instead of stdout.",
    )(f)


def amplitude_options(f: t.Callable[..., t.Any]) -> t.Callable[..., t.Any]:
    for name, default in (("delta", "0"), ("gamma", "0"), ("beta", "0"), ("alpha", "1")):
        f = click.option(
            f"--{name}",
            type=COMPLEX,
            default=default,
            show_default=True,
            help=f"Register amplitude {name}, e.g. 0.5+0.5j.",
        )(f)
    return f


#  Click command-line interface
@click.group(invoke_without_command=True, context_settings=CONTEXT_SETTINGS)
@click.pass_context
@click_log.simple_verbosity_option(
    log,
    help="Sets the severity of log messaging: DEBUG for all, INFO (default) for most, then WARNING, ERROR, and CRITICAL for decreasing verbosity.",
)
@click.version_option(VERSION, message=VERSION)
def main(ctx: click.Context) -> None:
    """
    Simulate quantum logic with a single electron in a Penning trap.

    Every command reads an XML configuration file (see templates/geonium.xml)
    and writes line-oriented records.  Use the `--help` option on any command
    to learn more, for example `geonium cnot --help`.
    """
    if ctx.invoked_subcommand is None:
        log.info("Run `geonium --help` for help.")


@main.result_callback()
def exit(result: t.Optional[int] = None, *_: t.Any, **__: t.Any) -> None:
    utils.exit_command(error_flush_handler, result)


def _records(
    scenario: Scenario,
    config: ExperimentConfig,
    columns: t.Sequence[str],
    rows: t.Iterable[t.Sequence[utils.Cell]],
    out: t.Optional[Path],
) -> None:
    utils.emit(
        utils.render_records(scenario.value, config.source_hash, columns, rows), out
    )


# geonium freqs
@main.command(
    short_help="Report mode frequencies, couplings and the frequency hierarchy.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@out_option
@nice_errors
def freqs(config: Path, out: t.Optional[Path]) -> int:
    """
    Derive the mode frequencies and drive couplings of CONFIG.  Exits with 2
    when the hierarchy omega_m < omega_z < omega_c does not hold.
    """
    cfg = ExperimentConfig.parse(config)
    frequencies = derive_frequencies(cfg.trap)
    couplings = derive_couplings(cfg.trap, cfg.drive, cfg.spin_drive)
    hierarchy = hierarchy_report(frequencies)

    rows: t.List[t.Sequence[utils.Cell]] = []

    def angular(name: str, omega: float) -> None:
        rows.append((name, omega, omega / constants.TWO_PI, frequency_band(omega)))

    angular("omega_z", frequencies.omega_z)
    angular("omega_c", frequencies.omega_c)
    angular("omega_m", frequencies.omega_m)
    angular("omega_s", frequencies.omega_s)
    try:
        omega_plus, omega_minus = exact_radial_frequencies(cfg.trap)
        angular("omega_plus", omega_plus)
        angular("omega_minus", omega_minus)
    except GeoniumError as e:
        log.warning(e)
    for name in ("epsilon", "zeta", "eta", "kappa", "rabi_s"):
        angular(name, getattr(couplings, name))
    rows.append(("lamb_dicke", couplings.lamb_dicke, "", ""))
    rows.append(("ratio_z_over_c", hierarchy.ratio_zc, "", ""))
    rows.append(("ratio_m_over_z", hierarchy.ratio_mz, "", ""))
    rows.append(("hierarchy_ok", int(hierarchy.ok), "", ""))
    if cfg.drive.Omega > 0:
        for name, detuning in resonance_detunings(frequencies, cfg.drive.Omega).items():
            rows.append((f"detuning_{name}", detuning, detuning / constants.TWO_PI, ""))
    g = couplings.transfer_strength
    if g > 0:
        rows.append(("transfer_time", transfer_time(g), "", ""))
        rows.append(
            (
                "typeset_transfer_time",
                typeset_transfer_time(cfg.trap, couplings, cfg.drive.k),
                "",
                "",
            )
        )
    _records(
        Scenario.FREQS, cfg, ("quantity", "value", "hz", "band"), rows, out
    )
    if not hierarchy.ok:
        log.warning("Frequency hierarchy check failed.")
        return constants.EXIT_THRESHOLD
    log.info("Frequency hierarchy holds.")
    return constants.EXIT_OK


# geonium prepare
@main.command(
    short_help="Plan the pulse sequence that prepares a register state.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@amplitude_options
@click.option(
    "--sequence-out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Write the planned pulse sequence as XML to this file.",
)
@out_option
@nice_errors
def prepare(
    config: Path,
    alpha: complex,
    beta: complex,
    gamma: complex,
    delta: complex,
    sequence_out: t.Optional[Path],
    out: t.Optional[Path],
) -> int:
    """
    Plan spin-drive and sideband pulses taking |0>|dn> to
    alpha|0dn> + beta|0up> + gamma|1dn> + delta|1up>, simulate them, and
    report the result.  Exits with 4 when the target needs leakage.
    """
    cfg = ExperimentConfig.parse(config)
    couplings = derive_couplings(cfg.trap, cfg.drive, cfg.spin_drive)
    target: Amplitudes = (alpha, beta, gamma, delta)
    plan = prepare_state(target, couplings)
    spec = cfg.sim.hilbert_spec()
    output = run(plan.sequence, initial_state(spec))
    reached = fidelity(register_state(target, spec), output)
    rows: t.List[t.Sequence[utils.Cell]] = [
        ("ordering", plan.ordering),
        ("reachable", int(plan.reachable)),
        ("leakage", plan.leakage),
        ("concurrence", plan.concurrence),
        ("simulated_fidelity", reached),
        ("pulses", len(plan.sequence.pulses)),
        ("total_duration", plan.sequence.total_duration),
    ]
    for index, pulse in enumerate(plan.sequence.pulses):
        rows.append((f"pulse{index}", f"{pulse.kind.value} {pulse.duration!r}"))
    _records(Scenario.PREPARE, cfg, ("quantity", "value"), rows, out)
    if sequence_out is not None:
        sequence_out.write_text(
            t.cast(str, plan.sequence.to_xml(pretty_print=True, encoding="unicode"))
        )
        log.info(f"Wrote pulse sequence to {sequence_out}")
    if not plan.reachable:
        log.warning(f"Target is unreachable without leakage ({plan.leakage:.3g}).")
        return constants.EXIT_UNREACHABLE
    return constants.EXIT_OK


# geonium cnot
@main.command(
    short_help="Build and verify the controlled-NOT gate.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@click.option(
    "--mode",
    type=click.Choice([m.value for m in SimulationMode], case_sensitive=False),
    default=SimulationMode.EFFECTIVE.value,
    show_default=True,
    help="Rotating-wave propagators, or lab-frame integration of every pulse.",
)
@click.option(
    "--compensation-n",
    type=int,
    default=0,
    show_default=True,
    help="Smallest number of 2 pi turns allowed in the compensation pulse.",
)
@click.option(
    "--xml",
    "xml_out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Also write the gate report as XML to this file.",
)
@out_option
@nice_errors
def cnot(
    config: Path,
    mode: str,
    compensation_n: int,
    xml_out: t.Optional[Path],
    out: t.Optional[Path],
) -> int:
    """
    Run the carrier-plus-compensation CN sequence on the four register states
    and compare it with the ideal gate.  Exits with 0 only when the fidelity,
    phase-equivalence and leakage thresholds of CONFIG all pass.
    """
    cfg = ExperimentConfig.parse(config)
    simulation = SimulationMode(mode.lower())
    couplings = derive_couplings(cfg.trap, cfg.drive, cfg.spin_drive)
    try:
        sequence = cn_sequence(couplings, compensation_n)
    except InfeasibleCompensationError as e:
        log.warning(e)
        return constants.EXIT_INFEASIBLE
    carrier_time = sequence.pulses[0].duration
    _, turns = compensation_time(couplings, carrier_time, compensation_n)

    lab: t.Optional[LabContext] = None
    if simulation is SimulationMode.FULL:
        spec = HilbertSpec(axial_dim=cfg.sim.axial_dim, cyclotron_dim=1)
        if cfg.sim.cyclotron_dim > 1:
            log.info(
                f"Full mode freezes the cyclotron mode: cyclotron-dim "
                f"{cfg.sim.cyclotron_dim} from the config is replaced by 1."
            )
        lab = LabContext.from_configs(
            cfg.trap,
            cfg.drive,
            points_per_period=cfg.sim.points_per_period,
            step=cfg.sim.explicit_step,
        )
        tolerance = cfg.thresholds.full_phase_tolerance
        log.info("Integrating the lab-frame CN sequence; this can take a while.")
    else:
        spec = cfg.sim.hilbert_spec()
        tolerance = cfg.thresholds.phase_tolerance
    report = extract_gate(sequence, simulation, spec, lab, ideal=CN_SEQUENCE_MATRIX)
    equivalence = phase_equivalent(
        report.truth_table,
        CN_IDEAL,
        tol=tolerance,
        unitarity_tol=max(tolerance, constants.PHASE_TOLERANCE),
    )

    rows: t.List[t.Sequence[utils.Cell]] = [
        ("mode", simulation.value),
        ("cyclotron_dim", spec.cyclotron_dim),
        ("carrier_time", carrier_time),
        ("compensation_time", sequence.pulses[1].duration),
        ("compensation_turns", turns),
        ("fidelity", report.fidelity_vs_ideal),
        ("leakage", report.leakage),
        ("unitarity_defect", report.subspace_unitarity_defect),
        ("global_phase", report.global_phase),
        ("phase_equivalent", int(equivalence.equivalent)),
        ("phase_deviation", equivalence.deviation),
    ]
    for i, row_label in enumerate(REGISTER_LABELS):
        for j, col_label in enumerate(REGISTER_LABELS):
            rows.append(
                (f"M[{row_label},{col_label}]", complex(report.truth_table[i, j]))
            )
    _records(Scenario.CNOT, cfg, ("quantity", "value"), rows, out)
    if xml_out is not None:
        xml_out.write_text(gate_report_xml(report))

    passed = (
        report.fidelity_vs_ideal >= cfg.thresholds.fidelity
        and equivalence.equivalent
        and report.leakage < cfg.thresholds.leakage
    )
    if not passed:
        log.warning(
            f"CN gate misses its thresholds: fidelity {report.fidelity_vs_ideal:.12g}, "
            f"leakage {report.leakage:.3g}, phase equivalent {equivalence.equivalent}"
        )
        return constants.EXIT_THRESHOLD
    log.info(f"CN gate passes with fidelity {report.fidelity_vs_ideal:.12g}.")
    return constants.EXIT_OK


# geonium rwa-sweep
@main.command(
    name="rwa-sweep",
    short_help="Benchmark a rotating-wave model against lab-frame integration.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@click.option(
    "--case",
    type=click.Choice([c.value for c in RwaCase], case_sensitive=False),
    default=RwaCase.SIDEBAND_MINUS.value,
    show_default=True,
)
@click.option(
    "--scales",
    default=",".join(str(s) for s in constants.RWA_SCALES),
    show_default=True,
    help="Comma-separated coupling / omega_z values.",
)
@click.option(
    "--lamb-dicke",
    type=float,
    default=None,
    help="Lamb-Dicke parameter of the benchmark drive (case-dependent default).",
)
@click.option(
    "-j",
    "--jobs",
    type=int,
    default=1,
    show_default=True,
    help="Evaluate scale points in this many worker processes.",
)
@out_option
@nice_errors
def rwa_sweep(
    config: Path,
    case: str,
    scales: str,
    lamb_dicke: t.Optional[float],
    jobs: int,
    out: t.Optional[Path],
) -> int:
    """
    Sweep coupling / omega_z for one resonance and fit the log-log slope of
    the rotating-wave infidelity.
    """
    cfg = ExperimentConfig.parse(config)
    try:
        values = [float(s) for s in scales.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot read scales {scales!r}", param_hint="--scales")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        benchmark = rwa_benchmark(
            case.lower(),
            values,
            freqs=derive_frequencies(cfg.trap),
            lamb_dicke=lamb_dicke,
            points_per_period=cfg.sim.points_per_period,
            workers=jobs,
        )
    for warning in caught:
        click.echo(f"note: {warning.message}", err=True)
    rows: t.List[t.Sequence[utils.Cell]] = [
        ("point", point.scale, point.infidelity, "", "") for point in benchmark.points
    ]
    rows.append(("slope", "", "", benchmark.slope, benchmark.slope_stderr))
    _records(
        Scenario.RWA_SWEEP,
        cfg,
        ("record", "scale", "infidelity", "slope", "slope_stderr"),
        rows,
        out,
    )
    if not benchmark.slope_ok:
        log.warning(
            f"slope {benchmark.slope:.4g} is outside "
            f"{constants.RWA_SLOPE} +/- {constants.RWA_SLOPE_TOL}"
        )
    return constants.EXIT_OK


def _measurement_rows(
    cfg: ExperimentConfig, state: t.Any, shots: int, seed: int
) -> t.Tuple[t.List[t.Any], t.List[t.Sequence[utils.Cell]]]:
    bottle = cfg.bottle_config()
    records = measure_shots(state, shots, seed, bottle)
    rows: t.List[t.Sequence[utils.Cell]] = [
        (
            record.seed if record.seed is not None else "",
            record.n_c,
            record.s,
            record.probability,
            record.shift / bottle.omega_tilde,
        )
        for record in records
    ]
    return records, rows


# geonium readout
@main.command(
    short_help="Transfer and measure the state a pulse sequence prepares.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@click.option(
    "--sequence",
    "sequence_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
    help="Pulse sequence XML, as written by `geonium prepare --sequence-out`.",
)
@click.option("--shots", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@nice_errors
def readout(
    config: Path,
    sequence_path: Path,
    shots: int,
    seed: int,
    out: t.Optional[Path],
) -> int:
    """
    Run a pulse sequence from |0>|dn>, swap the axial qubit into the
    cyclotron mode and sample magnetic-bottle measurements.
    """
    cfg = ExperimentConfig.parse(config)
    couplings = derive_couplings(cfg.trap, cfg.drive, cfg.spin_drive)
    sequence = PulseSequence.from_xml(sequence_path.read_bytes())
    spec = cfg.sim.hilbert_spec()
    state = run(sequence, initial_state(spec))
    transferred = readout_transfer(state, couplings.transfer_strength)
    _, rows = _measurement_rows(cfg, transferred, shots, seed)
    _records(
        Scenario.READOUT,
        cfg,
        ("seed", "n_c", "s", "probability", "shift_over_omega_tilde"),
        rows,
        out,
    )
    return constants.EXIT_OK


# geonium roundtrip
@main.command(
    short_help="Prepare, transfer and measure a register state.",
    context_settings=CONTEXT_SETTINGS,
)
@config_argument
@amplitude_options
@click.option("--shots", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@nice_errors
def roundtrip(
    config: Path,
    alpha: complex,
    beta: complex,
    gamma: complex,
    delta: complex,
    shots: int,
    seed: int,
    out: t.Optional[Path],
) -> int:
    """
    Prepare alpha|0dn> + beta|0up> + gamma|1dn> + delta|1up>, read it out
    through the cyclotron mode, and compare outcome frequencies with the
    squared amplitudes.  Exits with 4 when the planner cannot reach the
    target without leakage.
    """
    cfg = ExperimentConfig.parse(config)
    couplings = derive_couplings(cfg.trap, cfg.drive, cfg.spin_drive)
    target: Amplitudes = (alpha, beta, gamma, delta)
    plan = prepare_state(target, couplings)
    if not plan.reachable:
        _records(
            Scenario.ROUNDTRIP,
            cfg,
            ("quantity", "value"),
            [("reachable", 0), ("leakage", plan.leakage), ("ordering", plan.ordering)],
            out,
        )
        log.warning(f"Target is unreachable without leakage ({plan.leakage:.3g}).")
        return constants.EXIT_UNREACHABLE
    spec = cfg.sim.hilbert_spec()
    state = run(plan.sequence, initial_state(spec))
    transferred = readout_transfer(state, couplings.transfer_strength)
    records = measure_shots(transferred, shots, seed, cfg.bottle_config())
    expected = {
        (0, -1): abs(alpha) ** 2,
        (0, 1): abs(beta) ** 2,
        (1, -1): abs(gamma) ** 2,
        (1, 1): abs(delta) ** 2,
    }
    born = expected_outcomes(transferred)
    drift = max(abs(born.get(key, 0.0) - p) for key, p in expected.items())
    log.debug(f"prepared populations differ from the target by {drift:.3g}")
    stats = outcome_statistics(records, expected)
    rows: t.List[t.Sequence[utils.Cell]] = [
        (
            row.n_c,
            row.s,
            row.count,
            row.frequency,
            row.expected,
            row.sigma,
            int(row.within_bounds),
        )
        for row in stats
    ]
    _records(
        Scenario.ROUNDTRIP,
        cfg,
        ("n_c", "s", "count", "frequency", "expected", "sigma", "within_3sigma"),
        rows,
        out,
    )
    if not all(row.within_bounds for row in stats):
        log.warning("Some outcome frequencies fall outside 3 sigma.")
    axial_left = float(transferred.populations(Mode.AXIAL)[1:].sum())
    log.debug(f"axial population left after transfer: {axial_left:.3g}")
    return constants.EXIT_OK
