"""Command line front end.

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import secrets
import sys

import click

from . import __version__
from .csvio import InputError
from .dependence import DEFAULT_WINDOWS
from .inverse_stats import InsufficientCrossings
from .pipelines import NumericalFailure, RunConfig, rerun, run
from .series_core import SeriesError

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise click.BadParameter(f"expected integers, got {text!r}") from None


def _execute(cfg: RunConfig | None, out: str, report: str | None = None):
    try:
        paths = rerun(report, out) if report is not None else run(cfg, out)
    except (NumericalFailure, InsufficientCrossings, ArithmeticError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except (InputError, SeriesError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    for p in paths:
        click.echo(str(p))


def _entropy_seed() -> int:
    return secrets.randbits(63)


rho_option = click.option("--rho", default="0.05,-0.05", show_default=True,
                          help="Barrier levels (log return), comma separated.")
out_option = click.option("--out", required=True, type=click.Path(file_okay=False),
                          help="Output directory.")
format_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
                             default="json", show_default=True, help="Summary file format.")


@click.group()
@click.version_option(__version__, prog_name="gainloss")
def main():
    """Inverse statistics and up/down dependence analysis for price series."""


@main.command()
@click.argument("input", type=click.Path())
@click.option("--column", default=None, help="Price column to use in a multi-column file.")
@rho_option
@click.option("--min-waits", default=30, show_default=True,
              help="Crossings required per barrier for the asymmetry statistic.")
@out_option
@format_option
def fpt(input, column, rho, min_waits, out, fmt):
    """First passage time distributions and generalized gamma fits."""
    cfg = RunConfig("fpt", [input], column=column, rho=_floats(rho),
                    min_waits=min_waits, format=fmt)
    _execute(cfg, out)


@main.command()
@click.argument("input", type=click.Path())
@click.option("--column", default=None, help="Price column to use in a multi-column file.")
@rho_option
@click.option("--seed", type=int, default=None, help="Permutation seed (default: drawn from OS entropy and recorded).")
@click.option("--replicates", default=1, show_default=True,
              help="Scrambled realizations (seeds seed..seed+R-1) whose distributions are averaged.")
@click.option("--min-waits", default=30, show_default=True)
@click.option("--write-series", is_flag=True, help="Also write each scrambled series as CSV.")
@out_option
@format_option
def scramble(input, column, rho, seed, replicates, min_waits, write_series, out, fmt):
    """Same analysis as fpt on randomly permuted log returns."""
    cfg = RunConfig("scramble", [input], column=column, rho=_floats(rho),
                    seed=_entropy_seed() if seed is None else seed, replicates=replicates,
                    min_waits=min_waits, write_series=write_series, format=fmt)
    _execute(cfg, out)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--leave-one-out", is_flag=True, help="Also write every leave-one-out index.")
@click.option("--strict-dates", is_flag=True, help="Reject inputs whose dates differ.")
@out_option
def index(inputs, leave_one_out, strict_dates, out):
    """Equal-weight artificial index of a price panel."""
    cfg = RunConfig("index", list(inputs), leave_one_out=leave_one_out, strict_dates=strict_dates)
    _execute(cfg, out)


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path())
@click.option("--window-lengths", default=",".join(map(str, DEFAULT_WINDOWS)), show_default=True,
              help="Window lengths L in days, comma separated (may be empty).")
@click.option("--bins", default=8, show_default=True, help="Quantile bins per margin.")
@click.option("--equalize", is_flag=True, help="Thin the larger of U/D to the size of the smaller.")
@click.option("--seed", type=int, default=None, help="Seed for --equalize.")
@click.option("--strict-dates", is_flag=True, help="Reject inputs whose dates differ.")
@out_option
def dependence(inputs, window_lengths, bins, equalize, seed, strict_dates, out):
    """Mean mutual information and mean correlation on index up/down days."""
    if equalize and seed is None:
        seed = _entropy_seed()
    cfg = RunConfig("dependence", list(inputs), window_lengths=_ints(window_lengths), bins=bins,
                    equalize=equalize, seed=seed, strict_dates=strict_dates, format="csv")
    _execute(cfg, out)


@main.command()
@click.argument("generator", type=click.Choice(["gbm", "regime"]))
@click.option("--param", "params", multiple=True, metavar="NAME=VALUE",
              help="Generator parameter, e.g. --param T=5000 --param sigma=0.02.")
@click.option("--seed", type=int, default=None, help="Generator seed (default: OS entropy, recorded).")
@out_option
def simulate(generator, params, seed, out):
    """Write a synthetic series (gbm) or panel (regime) as CSV."""
    parsed = {}
    for item in params:
        name, sep, value = item.partition("=")
        if not sep:
            raise click.BadParameter(f"expected NAME=VALUE, got {item!r}")
        try:
            num = float(value)
        except ValueError:
            raise click.BadParameter(f"{name}: not a number: {value!r}") from None
        parsed[name.strip()] = int(num) if name.strip() in ("T", "N") else num
    cfg = RunConfig("simulate", generator=generator, generator_params=parsed,
                    seed=_entropy_seed() if seed is None else seed, format="csv")
    _execute(cfg, out)


@main.command(name="rerun")
@click.argument("report", type=click.Path(exists=True, dir_okay=False))
@out_option
def rerun_cmd(report, out):
    """Re-execute the run config embedded in a report file."""
    _execute(None, out, report=report)


if __name__ == "__main__":
    main()
