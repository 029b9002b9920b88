"""Command-line entry point.

Exit status: 0 success, 1 invalid input, 2 a spectral computation could
not be certified.  Outputs are deterministic and written atomically.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import click

from . import cohomology, fan as fanmod, heisenberg, spectral
from .lattice import IntMatrix, integer_kernel, matrix_from_csv, matrix_to_csv, smith_form

EXIT_OK, EXIT_INVALID, EXIT_INDETERMINATE = 0, 1, 2


class InvalidInput(click.ClickException):
    exit_code = EXIT_INVALID


class Indeterminate(click.ClickException):
    exit_code = EXIT_INDETERMINATE


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[Path, ...] = ()
    output: Path | None = None
    p: int | None = None
    quotient_type: str | None = None
    degrees: tuple[int, ...] = ()
    seed: int = 0  # reserved; no algorithm draws random numbers
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------
# io helpers

def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, output: Path | None) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        write_atomic(output, text)


def load_json(path: Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_fan(path: Path) -> fanmod.Fan:
    data = load_json(path)
    if isinstance(data, dict) and "resolved" in data:
        data = data["resolved"]
    try:
        return fanmod.Fan.from_json(data)
    except (fanmod.FanError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def load_resolution(path: Path | None, qtype: str | None) -> fanmod.ResolutionRecord:
    if qtype is not None:
        return fanmod.resolve_fan(fanmod.quotient_cone(parse_type(qtype)), label=qtype)
    if path is None:
        raise InvalidInput("give a resolution record file or --type")
    data = load_json(path)
    try:
        return fanmod.ResolutionRecord.from_json(data)
    except KeyError as exc:
        raise InvalidInput(f"{path}: missing field {exc.args[0]!r}") from exc
    except (fanmod.FanError, TypeError, ValueError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


def parse_type(text: str) -> fanmod.CyclicQuotientType:
    try:
        return fanmod.CyclicQuotientType.parse(text)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc


def parse_position(text: str) -> spectral.Position:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise InvalidInput(f"position must look like -2,6 (got {text!r})") from exc
    return (a, b)


def require_odd_prime(p: int) -> None:
    from sympy import isprime

    if p < 3 or not isprime(p):
        raise InvalidInput(f"--p must be an odd prime (got {p})")


# ---------------------------------------------------------------------
# commands

@click.group()
def main() -> None:
    """Toric resolutions, spectral sequences and Ekedahl invariants."""


@main.command()
@click.argument("quotient_type")
@click.option("-o", "--output", type=click.Path(path_type=Path), help="Resolution record JSON.")
@click.option("--fan-output", type=click.Path(path_type=Path), help="Resolved fan JSON.")
def resolve(quotient_type: str, output: Path | None, fan_output: Path | None) -> None:
    """Resolve the cyclic quotient singularity QUOTIENT_TYPE, e.g. 1/5(1,2,3,4)."""
    t = parse_type(quotient_type)
    rec = fanmod.resolve_fan(fanmod.quotient_cone(t), label=str(t))
    if not fanmod.fan_is_smooth(rec.resolved):
        raise click.ClickException("resolution is not smooth")
    if fan_output is not None:
        write_atomic(fan_output, dumps(rec.resolved.to_json()))
    emit(dumps(rec.to_json()), output)


@main.command("fan-check")
@click.argument("fan_file", type=click.Path(path_type=Path))
@click.option("-o", "--output", type=click.Path(path_type=Path))
def fan_check(fan_file: Path, output: Path | None) -> None:
    """Report whether a fan is simplicial, smooth and complete."""
    f = load_fan(fan_file)
    simplicial = fanmod.fan_is_simplicial(f)
    rep = {
        "rays": len(f.rays),
        "maximal_cones": len(f.maximal_cones),
        "simplicial": simplicial,
        "smooth": simplicial and fanmod.fan_is_smooth(f),
        "complete": simplicial and fanmod.is_complete(f),
        "intersections_are_faces": fanmod.intersections_are_faces(f),
    }
    emit(dumps(rep), output)


@main.command()
@click.argument("fan_file", type=click.Path(path_type=Path))
@click.option("-o", "--output", type=click.Path(path_type=Path))
def betti(fan_file: Path, output: Path | None) -> None:
    """Ranks of the integral cohomology of a smooth complete fan."""
    f = load_fan(fan_file)
    try:
        g = cohomology.betti_numbers(f)
    except fanmod.FanError as exc:
        raise InvalidInput(str(exc)) from exc
    emit(dumps({str(k): r for k, r in g.ranks().items()}), output)


@main.command("d1-matrix")
@click.argument("record", type=click.Path(path_type=Path), required=False)
@click.option("--type", "qtype", help="Resolve this quotient type instead of reading a record.")
@click.option("--position", required=True, help="Source position, e.g. -2,6.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("-o", "--output", type=click.Path(path_type=Path))
def d1_matrix(record: Path | None, qtype: str | None, position: str, fmt: str, output: Path | None) -> None:
    """The first differential leaving POSITION, with basis labels."""
    rec = load_resolution(record, qtype)
    page = spectral.build_e1(rec)
    try:
        d = spectral.d1_map(page, parse_position(position))
    except ValueError as exc:
        raise InvalidInput(str(exc)) from exc
    if fmt == "csv":
        emit(matrix_to_csv(d.matrix, header=d.domain), output)
    else:
        emit(dumps({"domain": list(d.domain), "codomain": list(d.codomain), "matrix": d.matrix.tolist()}), output)


@main.command("spectral")
@click.argument("record", type=click.Path(path_type=Path), required=False)
@click.option("--type", "qtype", help="Resolve this quotient type instead of reading a record.")
@click.option("--copies", default=1, show_default=True, help="Number of singular points of this type.")
@click.option("--degree", "degrees", multiple=True, type=int, help="Degrees to assemble (default: all).")
@click.option("-o", "--output", type=click.Path(path_type=Path), help="Page JSON.")
@click.option("--csv-dir", type=click.Path(path_type=Path), help="Also write each d_1 as CSV here.")
def spectral_cmd(record, qtype, copies, degrees, output, csv_dir) -> None:
    """E_1 and E_2 pages and cohomology supported on the exceptional locus."""
    rec = load_resolution(record, qtype)
    e1 = spectral.build_e1(rec)
    e2 = spectral.turn_page(e1)
    top = 2 * rec.resolved.dim + 1
    degrees = degrees or tuple(range(0, top + 1))
    reports = [spectral.supported_cohomology_of_exceptional_locus(rec, k, copies) for k in degrees]
    prefix = "d1"
    if csv_dir is not None:
        for pos in sorted(e1.differentials):
            write_atomic(Path(csv_dir) / f"{prefix}_{pos[0]}_{pos[1]}.csv", e1.differential_csv(pos))
    out = {
        "E1": e1.to_json(prefix if csv_dir is not None else None),
        "E2": e2.to_json(),
        "convergence": [r.to_json() for r in reports],
    }
    emit(dumps(out), output)
    if any(r.status != "determined" for r in reports):
        raise Indeterminate("some degrees are not determined")


@main.command("cartan-leray")
@click.option("--p", "p", type=int, required=True)
@click.option("--max-k", type=int, default=None, help="Largest degree (default 2p-3).")
@click.option("-o", "--output", type=click.Path(path_type=Path))
def cartan_leray(p: int, max_k: int | None, output: Path | None) -> None:
    """Cohomology of the free quotient U/(Z/p)^2 in degrees 0..max-k."""
    require_odd_prime(p)
    max_k = 2 * p - 3 if max_k is None else max_k
    if not 0 <= max_k < 2 * p - 2:
        raise InvalidInput(f"--max-k must lie in [0, {2 * p - 3}]")
    table = [spectral.cartan_leray_report(p, k).to_json() for k in range(max_k + 1)]
    for row, k in zip(table, range(max_k + 1)):
        row["rational_rank"] = spectral.rational_cohomology_of_quotient(p, k)
    emit(dumps({"p": p, "table": table}), output)
    if any(r["status"] != "determined" for r in table):
        raise Indeterminate("some degrees are not determined")


@main.command("heisenberg")
@click.option("--p", "p", type=int, default=5, show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path))
@click.option("--singular-locus", "locus_out", type=click.Path(path_type=Path), help="Also dump the singular locus.")
def heisenberg_cmd(p: int, output: Path | None, locus_out: Path | None) -> None:
    """Ekedahl invariants of the Heisenberg group of order p^3."""
    require_odd_prime(p)
    if locus_out is not None:
        write_atomic(locus_out, heisenberg.singular_locus_json(p) + "\n")
    try:
        rep = heisenberg.ekedahl_report(p)
    except spectral.IndeterminateError as exc:
        raise Indeterminate(str(exc)) from exc
    emit(rep.dumps() + "\n", output)
    if not rep.consistent:
        raise InvalidInput("; ".join(rep.contradictions))


# ---------------------------------------------------------------------
# verify

def matrix_invariants(m: IntMatrix) -> dict:
    s = smith_form(m)
    return {
        "shape": list(m.shape),
        "rank": s.rank,
        "smith": sorted(abs(x) for x in s.diagonal if x),
        "kernel_rank": integer_kernel(m).cols,
    }


def _read_csv_matrix(path: Path) -> IntMatrix:
    text = path.read_text(encoding="utf-8")
    first = next(csv.reader(io.StringIO(text)), [])
    has_header = any(not _is_int(x) for x in first)
    m, _ = matrix_from_csv(text, header=has_header)
    return m


def _is_int(x: str) -> bool:
    try:
        int(x)
        return True
    except ValueError:
        return False


def verify_dirs(golden: Path, fresh: Path) -> dict:
    g_files = {p.relative_to(golden).as_posix() for p in golden.rglob("*") if p.is_file()}
    f_files = {p.relative_to(fresh).as_posix() for p in fresh.rglob("*") if p.is_file()}
    report = {"missing": sorted(g_files - f_files), "extra": sorted(f_files - g_files), "different": [], "equivalent": []}
    for rel in sorted(g_files & f_files):
        a, b = golden / rel, fresh / rel
        if rel.endswith(".csv"):
            ia, ib = matrix_invariants(_read_csv_matrix(a)), matrix_invariants(_read_csv_matrix(b))
            if ia != ib:
                report["different"].append({"file": rel, "golden": ia, "fresh": ib})
            elif a.read_bytes() != b.read_bytes():
                report["equivalent"].append(rel)
        elif rel.endswith(".json"):
            if load_json(a) != load_json(b):
                report["different"].append({"file": rel})
        elif a.read_bytes() != b.read_bytes():
            report["different"].append({"file": rel})
    return report


@main.command()
@click.argument("golden", type=click.Path(path_type=Path, file_okay=False))
@click.argument("fresh", type=click.Path(path_type=Path, file_okay=False))
@click.option("-o", "--output", type=click.Path(path_type=Path))
def verify(golden: Path, fresh: Path, output: Path | None) -> None:
    """Compare an output directory against a golden one."""
    for d in (golden, fresh):
        if not d.is_dir():
            raise InvalidInput(f"{d} is not a directory")
    rep = verify_dirs(golden, fresh)
    emit(dumps(rep), output)
    if rep["missing"] or rep["different"]:
        raise InvalidInput(f"{len(rep['missing'])} missing, {len(rep['different'])} different")


def run(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit status; click's own usage errors
    count as invalid input."""
    try:
        main.main(args=argv, prog_name="ekedahl", standalone_mode=False)
    except (Indeterminate, spectral.IndeterminateError) as exc:
        click.echo(f"Error: {exc.format_message() if isinstance(exc, click.ClickException) else exc}", err=True)
        return EXIT_INDETERMINATE
    except click.ClickException as exc:
        exc.show()
        return EXIT_INVALID
    except click.Abort:
        return EXIT_INVALID
    except (fanmod.FanError, ValueError, KeyError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_INVALID
    return EXIT_OK


def console_main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    console_main()
