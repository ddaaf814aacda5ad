"""``distcomp`` command-line tool.

Exit status is 0 on success, 2 when a hypothesis of the requested
operation fails (the message names it), and 1 on I/O or parse errors.
"""

from __future__ import annotations

import csv
import io as _stdio
import sys
from pathlib import Path

import click

from . import experiments
from .errors import BudgetExceeded, PreconditionError
from .funclass import identity_function
from .io import (
    DocumentError,
    code_from_dict,
    dumps,
    function_from_dict,
    read_json,
    source_from_dict,
    vector_function_from_dict,
)

EXIT_OK, EXIT_IO, EXIT_PRECONDITION = 0, 1, 2


class _Failure(Exception):
    def __init__(self, status, message):
        super().__init__(message)
        self.status = status


def csv_text(rows) -> str:
    """Header from the union of keys in first-seen order; missing cells are blank."""
    fields = []
    for row in rows:
        for k in row:
            if k not in fields:
                fields.append(k)
    buf = _stdio.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(v) for k, v in row.items()})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_doc(doc, rows, fmt, out):
    if fmt == "csv":
        if rows is None:
            raise _Failure(EXIT_IO, "this command has no CSV form; use --format json")
        _emit(csv_text(rows), out)
    else:
        _emit(dumps(doc), out)


def _load(path, what):
    if path is None:
        raise _Failure(EXIT_IO, f"missing --{what}")
    try:
        return read_json(path)
    except OSError as exc:
        raise _Failure(EXIT_IO, f"cannot read {path}: {exc.strerror}") from exc


def _run(body):
    try:
        body()
    except _Failure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.status)
    except PreconditionError as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_PRECONDITION)
    except (DocumentError, BudgetExceeded, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


def _source(path):
    return source_from_dict(_load(path, "source"))


def _function(path, n, source):
    if path is None:
        return identity_function(n, source.x_size, source.y_size)
    return vector_function_from_dict(_load(path, "function"), n)


_fmt = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
_out = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")
_seed = click.option("--seed", type=int, required=True, help="Seed for every random choice.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="distcomp")
def main():
    """Distributed function computation: classify, bound, construct and simulate."""


@main.command()
@click.option("--function", "function_path", type=click.Path(), help="Function JSON.")
@click.option("--input", "input_path", type=click.Path(), help="Alias of --function.")
@click.option("--n", type=int, default=2, show_default=True)
@_out
def classify(function_path, input_path, n, out):
    """Sensitivity classes of a function."""
    def body():
        doc = _load(function_path or input_path, "function")
        if isinstance(doc, dict) and doc.get("kind", "symbolwise") == "symbolwise":
            f = function_from_dict(doc)
        else:
            f = vector_function_from_dict(doc, n)
        _emit(dumps(experiments.classify(f, n)), out)
    _run(body)


@main.command("check-source")
@click.option("--source", "source_path", type=click.Path())
@click.option("--n", type=int, default=2, show_default=True)
@_out
def check_source(source_path, n, out):
    """Smoothness constants of a source at block length n."""
    _run(lambda: _emit(dumps(experiments.check_source(_source(source_path), n)), out))


@main.command()
@click.option("--source", "source_path", type=click.Path())
@click.option("--r", type=float, default=None, help="Include the outer bound for this r.")
@_fmt
@_out
def region(source_path, r, fmt, out):
    """Rate regions as JSON, or their corner points as CSV."""
    def body():
        doc, rows = experiments.region(_source(source_path), r)
        _emit_doc(doc, rows, fmt or "json", out)
    _run(body)


@main.command()
@click.option("--source", "source_path", type=click.Path())
@click.option("--function", "function_path", type=click.Path())
@click.option("--input", "code_path", type=click.Path(), help="Code JSON to evaluate.")
@click.option("--n", type=int, default=3, show_default=True)
@click.option("--rate", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.25, show_default=True)
@click.option("--trials", type=int, default=experiments.DEFAULT_TRIALS, show_default=True)
@_seed
@_fmt
@_out
def simulate(source_path, function_path, code_path, n, rate, delta, trials, seed, fmt, out):
    """Exact and Monte Carlo error with code lengths."""
    def body():
        source = _source(source_path)
        code = code_from_dict(_load(code_path, "input")) if code_path else None
        fn = _function(function_path, code.n if code else n, source)
        rows = experiments.simulate(source, fn, rate, delta, trials, seed, code)
        _emit_doc(rows, rows, fmt or "csv", out)
    _run(body)


@main.command("verify-lemma")
@click.option("--source", "source_path", type=click.Path())
@click.option("--function", "function_path", type=click.Path())
@click.option("--input", "code_path", type=click.Path(), help="Code JSON to test.")
@click.option("--n", type=int, default=3, show_default=True)
@click.option("--rate", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.25, show_default=True)
@click.option("--beta", type=float, default=0.3, show_default=True)
@click.option("--r", type=float, default=None)
@_seed
@_fmt
@_out
def verify_lemma(source_path, function_path, code_path, n, rate, delta, beta, r, seed, fmt, out):
    """Error-versus-typicality bounds for one code."""
    def body():
        source = _source(source_path)
        code = code_from_dict(_load(code_path, "input")) if code_path else None
        fn = _function(function_path, code.n if code else n, source)
        rows = experiments.verify_lemma(source, fn, delta, beta, rate, seed, r, code)
        _emit_doc(rows, rows, fmt or "csv", out)
    _run(body)


@main.command("theorem9-demo")
@click.option("--x-size", type=int, default=2, show_default=True)
@click.option("--y-size", type=int, default=2, show_default=True)
@click.option("--r", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=0.1, show_default=True)
@click.option("--epsilon", type=float, default=None, help="Noise level; default is the largest admitted.")
@click.option("--n", type=int, default=200, show_default=True)
@click.option("--rate", type=float, default=0.4, show_default=True)
@click.option("--trials", type=int, default=experiments.DEFAULT_TRIALS, show_default=True)
@_seed
@_fmt
@_out
def theorem9_demo(x_size, y_size, r, delta, epsilon, n, rate, trials, seed, fmt, out):
    """Gap between the modulo-sum inner region and the Slepian-Wolf outer bound."""
    def body():
        doc, rows = experiments.theorem9_demo(x_size, y_size, r, delta, epsilon, n, rate, trials, seed)
        _emit_doc(doc, rows, fmt or "csv", out)
    _run(body)


@main.command()
@click.option("--source", "source_path", type=click.Path())
@click.option("--function", "function_path", type=click.Path())
@click.option("--t", type=float, default=0.25, show_default=True)
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.option("--n", "n_list", type=int, multiple=True, help="Block length; repeat for several.")
@_seed
@_fmt
@_out
def moddev(source_path, function_path, t, gamma, n_list, seed, fmt, out):
    """Moderate-deviation scaling table."""
    def body():
        source = _source(source_path)
        if function_path is None:
            f = lambda n: identity_function(n, source.x_size, source.y_size)  # noqa: E731
        else:
            doc = _load(function_path, "function")
            if doc.get("kind", "symbolwise") == "symbolwise":
                f = function_from_dict(doc)
            else:
                f = lambda n: vector_function_from_dict(doc, n)  # noqa: E731
        rows = experiments.moddev(source, f, t, gamma, list(n_list) or [4, 6, 8], seed)
        _emit_doc(rows, rows, fmt or "csv", out)
    _run(body)


if __name__ == "__main__":  # pragma: no cover
    main()
