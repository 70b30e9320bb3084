import csv
import io
import logging
import logging.handlers
import typing as t
from pathlib import Path

import click

from . import constants, VERSION

log = logging.getLogger("geoniumlogger")

Cell = t.Union[str, int, float, complex]


def format_cell(value: Cell) -> str:
    """
    Stable text for one CSV cell: floats as %.12g, complex numbers as their
    real and imaginary parts joined by a sign.
    """
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return constants.OUTPUT_FLOAT_FORMAT % value
    if isinstance(value, complex):
        real = constants.OUTPUT_FLOAT_FORMAT % value.real
        imag = constants.OUTPUT_FLOAT_FORMAT % abs(value.imag)
        sign = "-" if value.imag < 0 else "+"
        return f"{real}{sign}{imag}j"
    return str(value)


def render_records(
    scenario: str,
    config_hash: str,
    columns: t.Sequence[str],
    rows: t.Iterable[t.Sequence[Cell]],
) -> str:
    """
    Header lines naming the version, config and scenario, then CSV rows.
    Identical inputs always render identical text.
    """
    buffer = io.StringIO()
    buffer.write(f"# geonium {VERSION}\n")
    buffer.write(f"# config {config_hash}\n")
    buffer.write(f"# scenario {scenario}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])
    return buffer.getvalue()


def parse_records(text: str) -> t.Tuple[t.Dict[str, str], t.List[t.Dict[str, str]]]:
    """
    Split rendered records back into header fields and row dictionaries.
    """
    header: t.Dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" ")
            header[key] = value
        elif line:
            body.append(line)
    return header, list(csv.DictReader(body))


def emit(text: str, out: t.Optional[Path]) -> None:
    """
    Write to `out`, or to stdout when no path is given.
    """
    if out is None:
        click.echo(text, nl=False)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    log.info(f"Wrote {out}")


def has_errors(mh: logging.handlers.MemoryHandler) -> bool:
    """
    Checks to see if anything (errors etc.) is in the memory handler.
    """
    return len(mh.buffer) > 0


def exit_command(mh: logging.handlers.MemoryHandler, code: t.Optional[int] = None) -> None:
    """
    Clean up at the end of a run.  Buffered errors are flushed to stderr and
    the run exits with 1; otherwise a nonzero scenario code becomes the exit
    status.
    """
    if has_errors(mh):
        log.info("\n----------------------------------------------------")
        log.info("While running geonium, the following errors occurred:\n")
        mh.flush()
        log.info("----------------------------------------------------")
        raise SystemExit(constants.EXIT_ERROR)
    if code:
        log.debug(f"Completed with exit code {code}.")
        raise SystemExit(code)
    log.debug("Completed without errors.")
