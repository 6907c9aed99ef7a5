"""Batch command-line interface.

Exit codes are a stable contract for scripting: 0 success, 2 configuration
error, 3 I/O or format error, 4 numerical failure. JSON summaries go to
stdout, diagnostics to stderr. All randomness flows from --seed, so a
fixed seed gives byte-identical archives and CSV values (timing columns
excepted). SKETCHPRESS_THREADS caps the BLAS worker count.
"""

from __future__ import annotations

import functools
import json
import os
import sys
import time

import click
import numpy as np

from . import analysis, archive as arch, datagen
from .config import RunConfig
from .errors import (ConfigError, FormatError, NumericalError,
                     SketchpressError, StreamPoisonedError)
from .sketch import SketchSpec, build_sketch
from .snapshot_io import open_stream, read_matrix, write_snapshots

_EXIT_CONFIG = 2
_EXIT_IO = 3
_EXIT_NUMERICAL = 4


def _fail(code: int, exc: BaseException) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(_EXIT_CONFIG, exc)
        except (FormatError, StreamPoisonedError, OSError) as exc:
            _fail(_EXIT_IO, exc)
        except (NumericalError, np.linalg.LinAlgError) as exc:
            _fail(_EXIT_NUMERICAL, exc)
        except SketchpressError as exc:
            _fail(_EXIT_NUMERICAL, exc)
    return wrapper


@click.group()
def cli():
    """Streaming low-rank compression of snapshot matrices."""


def _algorithm_options(fn):
    options = [
        click.option("--algorithm",
                     type=click.Choice(["spc-svd", "tpc-svd", "spc-id", "tpc-id",
                                        "proto-tpc"]),
                     default="spc-svd", show_default=True),
        click.option("--sketch", type=click.Choice(["injection", "neighbor", "global",
                                                    "gaussian", "hybrid"]),
                     default="injection", show_default=True),
        click.option("--coarsen", type=float, default=10.0, show_default=True,
                     help="Target ratio of fine to coarse columns."),
        click.option("--rank", type=int, default=4, show_default=True),
        click.option("--oversample", type=int, default=10, show_default=True),
        click.option("--lift-rank", type=int, default=None,
                     help="Lifting rank for single-pass ID (default min(2k, rank))."),
        click.option("--power", type=int, default=0, show_default=True,
                     help="Power iteration count (0 disables)."),
        click.option("--reorth/--no-reorth", default=False, show_default=True),
        click.option("--stride", type=int, default=10, show_default=True,
                     help="Column stride for the power-iteration Gramian."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--codec", type=click.Choice(["lossless", "fixedpoint"]),
                     default="lossless", show_default=True),
        click.option("--bits", type=int, default=20, show_default=True),
        click.option("--deflate/--no-deflate", default=True, show_default=True),
    ]
    for opt in reversed(options):
        fn = opt(fn)
    return fn


def _run_config(**kw) -> RunConfig:
    return RunConfig(
        algorithm=kw["algorithm"], rank=kw["rank"], sketch=kw["sketch"],
        coarsen=kw["coarsen"], oversample=kw["oversample"],
        lift_rank=kw["lift_rank"], power=kw["power"], reorth=kw["reorth"],
        stride=kw["stride"], seed=kw["seed"], codec=kw["codec"],
        bits=kw["bits"], deflate=kw["deflate"],
    )


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@_algorithm_options
@click.option("--verify", is_flag=True,
              help="Spend one extra, explicitly reported pass measuring the true error.")
@handle_errors
def compress(input_path, output_path, verify, **kw):
    """Compress a snapshot file into a factor archive."""
    cfg = _run_config(**kw)
    started = time.perf_counter()
    with open_stream(input_path) as stream:
        archive = arch.compress_dataset(stream, cfg)
        algo_passes = stream.passes_completed
        summary = {
            "algorithm": cfg.algorithm,
            "rank": archive.rank,
            "sketch": cfg.sketch,
            "m": archive.m,
            "n": archive.n,
            "cf": arch.spatio_temporal_cf(archive),
            "temporal_cf": arch.temporal_cf(archive),
            "passes": algo_passes,
            "archive_bytes": len(archive.to_bytes()),
        }
        if verify:
            stream.rewind()
            err_sq = 0.0
            ref_sq = 0.0
            row = 0
            blocks = arch.decompress_blocks(archive, block_rows=cfg.block_rows)
            for block in stream.blocks(cfg.block_rows):
                approx = next(blocks)
                err_sq += float(np.sum((block - approx) ** 2))
                ref_sq += float(np.sum(block**2))
                row += block.shape[0]
            summary["verify"] = {
                "rel_frob": (err_sq / ref_sq) ** 0.5 if ref_sq > 0 else float("nan"),
                "extra_passes": stream.passes_completed - algo_passes,
            }
    archive.save(output_path)
    summary["wall_time_s"] = time.perf_counter() - started
    click.echo(json.dumps(summary, sort_keys=True))


@cli.command()
@click.argument("archive_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_path", type=click.Path(dir_okay=False))
@handle_errors
def decompress(archive_path, output_path):
    """Reconstruct a snapshot file from an archive."""
    archive = arch.Archive.load(archive_path)
    matrix = arch.decompress(archive)
    write_snapshots(output_path, matrix)
    click.echo(json.dumps({"m": archive.m, "n": archive.n,
                           "output": output_path}, sort_keys=True))


@cli.command()
@click.argument("archive_path", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def inspect(archive_path):
    """Print archive metadata as JSON."""
    archive = arch.Archive.load(archive_path)
    click.echo(json.dumps({
        "algorithm": archive.algorithm,
        "rank": archive.rank,
        "sketch": archive.config.get("sketch"),
        "m": archive.m,
        "n": archive.n,
        "cf": arch.spatio_temporal_cf(archive),
        "temporal_cf": arch.temporal_cf(archive),
        "eps1": archive.eps1,
        "eps2": archive.eps2,
    }, sort_keys=True))


@cli.command("estimate-error")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sketch", type=click.Choice(["injection", "neighbor", "global"]),
              default="injection", show_default=True)
@click.option("--coarsen", type=float, default=10.0, show_default=True)
@click.option("--mc", type=int, required=True,
              help="Number of rows retained by the streaming estimator.")
@handle_errors
def estimate_error(input_path, sketch, coarsen, mc):
    """Single-pass Gramian-gap sweep; CSV (tau, eps_hat) plus the minimizer."""
    with open_stream(input_path) as stream:
        n_c = max(1, round(stream.n / coarsen))
        op = build_sketch(SketchSpec(kind=sketch, n=stream.n, n_c=n_c))
        sweep = analysis.streaming_epsilon_sweep(stream, op, mc)
    click.echo("tau,eps_hat")
    for tau, value in zip(sweep.taus, sweep.values):
        click.echo(f"{float(tau)!r},{float(value)!r}")
    click.echo(f"# minimizer,{sweep.min_tau!r},{sweep.min_value!r}")


@cli.command("gen-data")
@click.argument("output_path", type=click.Path(dir_okay=False))
@click.option("--kind", type=click.Choice(["heat2d", "spectrum"]), required=True)
@click.option("--grid", type=int, default=32, show_default=True)
@click.option("--rows", type=int, default=100, show_default=True)
@click.option("--cols", type=int, default=1000, show_default=True)
@click.option("--kappa", type=float, default=0.02, show_default=True)
@click.option("--decay", type=click.Choice(["exponential", "power", "exact-rank"]),
              default="power", show_default=True)
@click.option("--rate", type=float, default=1.0, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def gen_data(output_path, kind, grid, rows, cols, kappa, decay, rate, alpha, k, seed):
    """Write a synthetic snapshot file."""
    if kind == "heat2d":
        matrix = datagen.gen_heat2d(grid, rows, diffusivity=kappa, seed=seed,
                                    path=output_path)
    else:
        spec = datagen.SpectrumSpec(m=rows, n=cols, decay=decay.replace("-", "_"),
                                    rate=rate, alpha=alpha, k=k, seed=seed)
        matrix = datagen.gen_spectrum(spec, path=output_path)
    click.echo(json.dumps({"m": matrix.shape[0], "n": matrix.shape[1],
                           "output": output_path}, sort_keys=True))


@cli.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--algorithms", default="spc-svd,tpc-svd", show_default=True,
              help="Comma-separated list.")
@click.option("--ranks", default="1,2,4", show_default=True,
              help="Comma-separated target ranks.")
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--sketch", type=click.Choice(["injection", "neighbor", "global",
                                             "gaussian", "hybrid"]),
              default="hybrid", show_default=True)
@click.option("--coarsen", type=float, default=10.0, show_default=True)
@click.option("--oversample", type=int, default=10, show_default=True)
@click.option("--power", type=int, default=0, show_default=True)
@click.option("--stride", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def bench(input_path, algorithms, ranks, trials, sketch, coarsen, oversample,
          power, stride, seed):
    """Error/runtime sweep; CSV columns rank, mreo, mean_runtime, algorithm.

    Trial t derives its projection seed from --seed + t; deterministic
    sketches are identical across trials by construction.
    """
    with open_stream(input_path) as stream:
        reference = read_matrix(stream)
    ref_norm = np.linalg.norm(reference)
    algo_list = [a.strip() for a in algorithms.split(",") if a.strip()]
    rank_list = [int(r) for r in ranks.split(",") if r.strip()]
    click.echo("rank,mreo,mean_runtime,algorithm")
    for algo in algo_list:
        for rank in rank_list:
            oracle_rel = analysis.oracle_error(reference, rank) / ref_norm
            errors = []
            elapsed = 0.0
            for trial in range(trials):
                cfg = RunConfig(algorithm=algo, rank=rank, sketch=sketch,
                                coarsen=coarsen, oversample=oversample,
                                power=power, stride=stride, seed=seed + trial)
                started = time.perf_counter()
                with open_stream(input_path) as stream:
                    result, _ = arch.run_algorithm(stream, cfg)
                elapsed += time.perf_counter() - started
                left, right = arch.factor_pair(result)
                errors.append(float(np.linalg.norm(reference - left @ right) / ref_norm))
            ratio = float(analysis.mreo(errors, oracle_rel))
            click.echo(f"{rank},{ratio!r},{elapsed / trials:.6e},{algo}")


def main():
    limit = os.environ.get("SKETCHPRESS_THREADS")
    if limit:
        try:
            workers = int(limit)
        except ValueError:
            click.echo(f"error: SKETCHPRESS_THREADS={limit!r} is not an integer", err=True)
            sys.exit(_EXIT_CONFIG)
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=workers):
            cli()
        return
    cli()


if __name__ == "__main__":
    main()
