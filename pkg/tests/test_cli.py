import shutil
import subprocess
import sys
from pathlib import Path
from typing import Dict, List, Tuple, cast

import pytest
from pytest_console_scripts import ScriptRunner

from geonium import VERSION, constants, utils
from geonium.pulses import PulseSequence

from .common import config_path

GEONIUM_CMD = cast(str, shutil.which("geonium"))
assert GEONIUM_CMD is not None
PY_CMD = sys.executable

BELL = ["--alpha", "0.7071067811865476", "--delta", "0.7071067811865476"]


def records(path: Path) -> Tuple[Dict[str, str], List[Dict[str, str]]]:
    return utils.parse_records(path.read_text())


def quantities(path: Path) -> Dict[str, str]:
    _, rows = records(path)
    return {row["quantity"]: row["value"] for row in rows}


def test_entry_points(script_runner: ScriptRunner) -> None:
    ret = script_runner.run([GEONIUM_CMD, "-v", "debug", "-h"])
    assert ret.success
    assert (
        subprocess.run([PY_CMD, "-m", "geonium", "-v", "debug", "-h"]).returncode
        == 0
    )


def test_version(script_runner: ScriptRunner) -> None:
    ret = script_runner.run([GEONIUM_CMD, "--version"])
    assert ret.stdout.strip() == VERSION


def test_freqs(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "freqs.csv"
    ret = script_runner.run(
        [GEONIUM_CMD, "freqs", str(config_path("reference")), "--out", str(out)]
    )
    assert ret.returncode == constants.EXIT_OK
    header, rows = records(out)
    assert header["scenario"] == "freqs"
    assert header["geonium"] == VERSION
    assert len(header["config"]) == 12
    table = {row["quantity"]: row for row in rows}
    assert table["omega_z"]["band"] == "MHz"
    assert table["omega_c"]["band"] == "GHz"
    assert table["omega_m"]["band"] == "kHz"
    assert table["hierarchy_ok"]["value"] == "1"
    assert float(table["lamb_dicke"]["value"]) == pytest.approx(0.1, rel=1e-2)
    assert "omega_plus" in table
    assert "detuning_carrier" in table


def test_freqs_to_stdout(script_runner: ScriptRunner) -> None:
    ret = script_runner.run([GEONIUM_CMD, "freqs", str(config_path("reference"))])
    assert ret.success
    header, rows = utils.parse_records(ret.stdout)
    assert header["scenario"] == "freqs"
    assert rows[0]["quantity"] == "omega_z"


def test_freqs_hierarchy_violation(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "freqs.csv"
    ret = script_runner.run(
        [GEONIUM_CMD, "freqs", str(config_path("absurd-v0")), "--out", str(out)]
    )
    assert ret.returncode == constants.EXIT_THRESHOLD
    table = quantities(out)
    assert table["hierarchy_ok"] == "0"
    assert "omega_plus" not in table


def test_missing_trap_is_an_error(script_runner: ScriptRunner) -> None:
    ret = script_runner.run([GEONIUM_CMD, "freqs", str(config_path("missing-trap"))])
    assert ret.returncode == constants.EXIT_ERROR
    assert "trap" in ret.stderr
    ret = script_runner.run([GEONIUM_CMD, "freqs", "no-such-file.xml"])
    assert ret.returncode == constants.EXIT_ERROR


def test_prepare_bell(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "prepare.csv"
    sequence = tmp_path / "bell.xml"
    ret = script_runner.run(
        [GEONIUM_CMD, "prepare", str(config_path("reference"))]
        + BELL
        + ["--sequence-out", str(sequence), "--out", str(out)]
    )
    assert ret.returncode == constants.EXIT_OK
    table = quantities(out)
    assert table["reachable"] == "1"
    assert float(table["simulated_fidelity"]) >= 1 - 1e-9
    assert float(table["concurrence"]) == pytest.approx(1.0)
    seq = PulseSequence.from_xml(sequence.read_bytes())
    assert [pulse.kind.value for pulse in seq.pulses] == ["sideband-plus"]


def test_prepare_unreachable(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "prepare.csv"
    amplitudes = ["--alpha", "0.5", "--beta", "0.5", "--gamma", "0.5", "--delta", "0.5"]
    ret = script_runner.run(
        [GEONIUM_CMD, "prepare", str(config_path("reference"))]
        + amplitudes
        + ["--out", str(out)]
    )
    assert ret.returncode == constants.EXIT_UNREACHABLE
    assert quantities(out)["reachable"] == "0"


def test_prepare_rejects_bad_amplitudes(script_runner: ScriptRunner) -> None:
    ret = script_runner.run(
        [GEONIUM_CMD, "prepare", str(config_path("reference")), "--beta", "1"]
    )
    assert ret.returncode == constants.EXIT_ERROR
    ret = script_runner.run(
        [GEONIUM_CMD, "prepare", str(config_path("reference")), "--alpha", "one"]
    )
    assert not ret.success


def test_cnot_effective(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "cnot.csv"
    report = tmp_path / "cnot.xml"
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "cnot",
            str(config_path("reference")),
            "--out",
            str(out),
            "--xml",
            str(report),
        ]
    )
    assert ret.returncode == constants.EXIT_OK
    table = quantities(out)
    assert float(table["fidelity"]) == pytest.approx(1.0, abs=1e-10)
    assert table["cyclotron_dim"] == "3"
    assert float(table["leakage"]) < 1e-10
    assert table["phase_equivalent"] == "1"
    assert abs(complex(table["M[1dn,1up]"])) == pytest.approx(1.0)
    assert abs(complex(table["M[0dn,0dn]"])) == pytest.approx(1.0)
    assert abs(complex(table["M[1dn,1dn]"])) < 1e-8
    assert report.read_text().startswith("<gate-report")


def test_cnot_is_deterministic(tmp_path: Path, script_runner: ScriptRunner) -> None:
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        ret = script_runner.run(
            [GEONIUM_CMD, "cnot", str(config_path("reference")), "--out", str(out)]
        )
        assert ret.success
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_cnot_compensation_turns(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "cnot.csv"
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "cnot",
            str(config_path("reference")),
            "--compensation-n",
            "3",
            "--out",
            str(out),
        ]
    )
    assert ret.success
    assert abs(int(quantities(out)["compensation_turns"])) >= 3


@pytest.mark.slow
def test_cnot_full_mode(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "cnot.csv"
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "cnot",
            str(config_path("weak-coupling")),
            "--mode",
            "full",
            "--out",
            str(out),
        ]
    )
    assert ret.returncode == constants.EXIT_OK
    table = quantities(out)
    assert table["mode"] == "full"
    assert table["cyclotron_dim"] == "1"
    assert float(table["fidelity"]) >= 0.99


@pytest.mark.slow
def test_cnot_threshold_failure(script_runner: ScriptRunner) -> None:
    ret = script_runner.run(
        [GEONIUM_CMD, "cnot", str(config_path("tight-threshold")), "--mode", "full"]
    )
    assert ret.returncode == constants.EXIT_THRESHOLD
    assert "cyclotron-dim 3 from the config is replaced by 1" in ret.stderr


def test_rwa_sweep(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "rwa.csv"
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "rwa-sweep",
            str(config_path("reference")),
            "--case",
            "sideband-minus",
            "--scales",
            "5e-3,1e-2",
            "--out",
            str(out),
        ]
    )
    assert ret.success
    header, rows = records(out)
    assert header["scenario"] == "rwa-sweep"
    assert [row["record"] for row in rows] == ["point", "point", "slope"]
    assert [float(row["scale"]) for row in rows[:2]] == [5e-3, 1e-2]
    assert float(rows[0]["infidelity"]) < float(rows[1]["infidelity"])


def test_rwa_sweep_empty_scales(script_runner: ScriptRunner) -> None:
    ret = script_runner.run(
        [GEONIUM_CMD, "rwa-sweep", str(config_path("reference")), "--scales", ""]
    )
    assert ret.returncode == constants.EXIT_ERROR


def test_readout(tmp_path: Path, script_runner: ScriptRunner) -> None:
    sequence = tmp_path / "bell.xml"
    ret = script_runner.run(
        [GEONIUM_CMD, "prepare", str(config_path("reference"))]
        + BELL
        + ["--sequence-out", str(sequence), "--out", str(tmp_path / "plan.csv")]
    )
    assert ret.success
    out = tmp_path / "readout.csv"
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "readout",
            str(config_path("reference")),
            "--sequence",
            str(sequence),
            "--shots",
            "5",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert ret.success
    header, rows = records(out)
    assert header["scenario"] == "readout"
    assert len(rows) == 5
    for row in rows:
        assert (row["n_c"], row["s"]) in {("0", "-1"), ("1", "1")}
        assert float(row["probability"]) == pytest.approx(0.5, abs=1e-6)
        assert int(row["seed"]) >= 0


def test_roundtrip(tmp_path: Path, script_runner: ScriptRunner) -> None:
    out = tmp_path / "roundtrip.csv"
    ret = script_runner.run(
        [GEONIUM_CMD, "roundtrip", str(config_path("reference"))]
        + BELL
        + ["--shots", "400", "--seed", "5", "--out", str(out)]
    )
    assert ret.success
    _, rows = records(out)
    assert [(row["n_c"], row["s"]) for row in rows] == [("0", "-1"), ("1", "1")]
    assert sum(int(row["count"]) for row in rows) == 400
    for row in rows:
        assert float(row["expected"]) == pytest.approx(0.5)


def test_roundtrip_unreachable(script_runner: ScriptRunner) -> None:
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "roundtrip",
            str(config_path("reference")),
            "--alpha",
            "0.5",
            "--beta",
            "0.5",
            "--gamma",
            "0.5",
            "--delta",
            "0.5",
        ]
    )
    assert ret.returncode == constants.EXIT_UNREACHABLE


def test_readout_rejects_bad_sequence(tmp_path: Path, script_runner: ScriptRunner) -> None:
    sequence = tmp_path / "bad.xml"
    sequence.write_text('<sequence><pulse kind="warp" duration_s="1"/></sequence>')
    ret = script_runner.run(
        [
            GEONIUM_CMD,
            "readout",
            str(config_path("reference")),
            "--sequence",
            str(sequence),
        ]
    )
    assert ret.returncode == constants.EXIT_ERROR
    assert "warp" in ret.stderr
