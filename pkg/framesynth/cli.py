"""Command-line interface for framesynth."""

import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
import yaml
from tqdm import tqdm

from framesynth.core.decomposer import SpectralState, decompose, synthesize_frame, tight_frame
from framesynth.core.errors import FrameSynthError, InputError, VerificationFailed
from framesynth.core.feasibility import check_finite
from framesynth.core.models import RankOneDecomposition, Tolerances
from framesynth.core.problem import (
    PROBLEM_TEMPLATE, ProblemFile, load_decomposition_file, load_problem_file, load_tolerances,
    vectors_to_csv, write_result,
)
from framesynth.core.spectral import eigh
from framesynth.core.streaming import WeightStream, identity_blocks
from framesynth.core.verifier import verify_decomposition, verify_frame


logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False, quiet: bool = False):
    """Setup logging configuration."""
    if quiet:
        level = logging.WARNING
    elif verbose:
        level = logging.DEBUG
    else:
        level = logging.INFO

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        stream=sys.stderr,
        force=True,
    )


def _fail(error: Exception) -> None:
    if isinstance(error, FrameSynthError):
        click.echo(f"❌ {type(error).__name__}: {error}", err=True)
        sys.exit(error.exit_code)
    click.echo(f"❌ Error: {error}", err=True)
    sys.exit(1)


def _tolerances(ctx: click.Context, problem: Optional[ProblemFile], tol: Optional[float]) -> Tolerances:
    tolerances = ctx.obj['tolerances']
    if problem is not None:
        tolerances = problem.tolerances(tolerances)
    if tol is not None:
        tolerances = tolerances.with_base(tol)
    return tolerances


def _emit(result: Dict[str, Any], out: Optional[str], csv_text: Optional[str] = None) -> None:
    if csv_text is not None:
        if out is not None:
            Path(out).write_text(csv_text, encoding="utf-8")
        else:
            click.echo(csv_text, nl=False)
        return
    text = write_result(result, out)
    if out is None:
        click.echo(text)


def _parse_norms(norms: str) -> List[float]:
    try:
        return [float(x) for x in norms.split(',') if x.strip()]
    except ValueError as e:
        raise InputError(f"Norms must be a comma-separated list of numbers: {e}") from e


def _decomposition_dict(decomposition: RankOneDecomposition) -> Dict[str, Any]:
    return {
        "dim": decomposition.dim,
        "weights": decomposition.weights.tolist(),
        "vectors": decomposition.vectors.tolist(),
        "source_indices": list(decomposition.source_indices or ()),
        "steps": [step.to_dict() for step in decomposition.steps],
    }


tol_option = click.option('--tol', type=float, help='Rescale all tolerances so the base tolerance is TOL')
out_option = click.option('--out', '-o', type=click.Path(), help='Write the result to this file instead of stdout')
format_option = click.option('--format', 'fmt', type=click.Choice(['json', 'csv']), default='json',
                             help='Output format (csv exports vectors only)')


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.option('--quiet', '-q', is_flag=True, help='Quiet mode (warnings only)')
@click.option('--config', type=click.Path(), help='Tolerance configuration file (YAML or JSON)')
@click.pass_context
def cli(ctx, verbose: bool, quiet: bool, config: Optional[str]):
    """framesynth - rank-one decompositions of positive operators and frames with prescribed norms."""
    ctx.ensure_object(dict)
    ctx.obj['verbose'] = verbose
    ctx.obj['quiet'] = quiet
    setup_logging(verbose, quiet)
    try:
        ctx.obj['tolerances'] = load_tolerances(config)
    except FrameSynthError as e:
        _fail(e)


@cli.command()
@click.argument('problem_file', type=click.Path())
@tol_option
@click.pass_context
def feasible(ctx, problem_file: str, tol: Optional[float]):
    """Check whether the weights admit a rank-one decomposition of the operator."""
    try:
        problem = load_problem_file(problem_file)
        tolerances = _tolerances(ctx, problem, tol)
        eigenvalues = SpectralState.from_spectrum(eigh(problem.operator(), tolerances), tolerances).eigenvalues
        report = check_finite(eigenvalues, problem.weight_sequence(), tolerances)
    except Exception as e:
        _fail(e)

    _emit(report.to_dict(), None)
    if report.feasible:
        click.echo("✅ Feasible", err=True)
    else:
        click.echo(f"❌ {report.describe()}", err=True)
        sys.exit(2)


@cli.command(name='decompose')
@click.argument('problem_file', type=click.Path())
@tol_option
@format_option
@out_option
@click.pass_context
def decompose_command(ctx, problem_file: str, tol: Optional[float], fmt: str, out: Optional[str]):
    """Decompose the operator into weighted rank-one projections."""
    try:
        problem = load_problem_file(problem_file)
        tolerances = _tolerances(ctx, problem, tol)
        operator = problem.operator()
        state = SpectralState.from_spectrum(eigh(operator, tolerances), tolerances)
        decomposition = decompose(state, problem.weight_sequence(), tolerances)
        report = verify_decomposition(
            operator, decomposition.weights, decomposition.vectors, tolerances,
            progress=not ctx.obj['quiet'],
        )
    except Exception as e:
        _fail(e)

    result = {**_decomposition_dict(decomposition), "matrix": operator.tolist(), "report": report.to_dict()}
    csv_text = vectors_to_csv(decomposition.vectors, decomposition.weights) if fmt == 'csv' else None
    _emit(result, out, csv_text)
    click.echo(f"✅ {len(decomposition)} rank-one terms, reconstruction error {report.reconstruction_error:.3e}",
               err=True)


@cli.command()
@click.option('--dim', '-n', type=int, required=True, help='Dimension of the space')
@click.option('--norms', required=True, help='Comma-separated vector norms')
@tol_option
@format_option
@out_option
@click.pass_context
def tight(ctx, dim: int, norms: str, tol: Optional[float], fmt: str, out: Optional[str]):
    """Build a tight frame of R^DIM with the given vector norms."""
    try:
        tolerances = _tolerances(ctx, None, tol)
        norm_list = _parse_norms(norms)
        frame = tight_frame(dim, norm_list, tolerances)
        report = verify_frame(frame, tolerances=tolerances)
    except Exception as e:
        _fail(e)

    frame_bound = math.fsum(a * a for a in norm_list) / dim
    result = {**frame.to_dict(), "tight": frame.is_tight(tolerances), "frame_bound": frame_bound,
              "report": report.to_dict()}
    csv_text = vectors_to_csv(frame.vectors) if fmt == 'csv' else None
    _emit(result, out, csv_text)
    click.echo(f"✅ Tight frame of {len(frame)} vectors, frame bound {frame_bound:.6g}", err=True)


@cli.command()
@click.argument('problem_file', type=click.Path())
@tol_option
@format_option
@out_option
@click.pass_context
def frame(ctx, problem_file: str, tol: Optional[float], fmt: str, out: Optional[str]):
    """Build a frame with the given frame operator and vector norms."""
    try:
        problem = load_problem_file(problem_file)
        if problem.norms is None:
            raise InputError("The frame command needs 'norms' in the problem file")
        tolerances = _tolerances(ctx, problem, tol)
        operator = problem.operator()
        result_frame = synthesize_frame(operator, problem.norms, tolerances)
        report = verify_frame(result_frame, operator, tolerances)
    except Exception as e:
        _fail(e)

    result = {**result_frame.to_dict(), "report": report.to_dict()}
    csv_text = vectors_to_csv(result_frame.vectors) if fmt == 'csv' else None
    _emit(result, out, csv_text)
    lower, upper = result_frame.bounds
    click.echo(f"✅ Frame of {len(result_frame)} vectors, bounds ({lower:.6g}, {upper:.6g})", err=True)


@cli.command()
@click.argument('decomposition_file', type=click.Path())
@tol_option
@out_option
@click.pass_context
def verify(ctx, decomposition_file: str, tol: Optional[float], out: Optional[str]):
    """Recompute the checks of a decomposition written by 'decompose'."""
    try:
        tolerances = _tolerances(ctx, None, tol)
        data = load_decomposition_file(decomposition_file)
        report = verify_decomposition(
            data.operator(), data.weights, data.vectors, tolerances, progress=not ctx.obj['quiet'],
        )
    except Exception as e:
        _fail(e)

    _emit(report.to_dict(), out)
    if not report.passed(tolerances):
        _fail(VerificationFailed(
            f"reconstruction error {report.reconstruction_error:.3e}, "
            f"min intermediate eigenvalue {report.min_intermediate_eigenvalue:.3e}"
        ))
    click.echo("✅ Decomposition verified", err=True)


@cli.command()
@click.argument('weights_source')
@click.option('--blocks', '-b', type=int, default=3, show_default=True, help='Number of blocks to decompose')
@click.option('--cap', type=int, help='Maximum number of stream values to consume')
@click.option('--terms/--no-terms', default=True, help='Include the emitted rank-one terms')
@tol_option
@out_option
@click.pass_context
def stream(ctx, weights_source: str, blocks: int, cap: Optional[int], terms: bool, tol: Optional[float],
           out: Optional[str]):
    """Decompose the identity on l^2 with weights from WEIGHTS_SOURCE (const:<v>, ratio or a file)."""
    try:
        if blocks < 0:
            raise InputError(f"--blocks must be nonnegative, got {blocks}")
        tolerances = _tolerances(ctx, None, tol)
        weights = WeightStream.from_source(weights_source, cap=cap or tolerances.stream_cap)

        block_reports = []
        emitted = []
        running = np.zeros((0, 0))
        results = identity_blocks(weights, tolerances)
        for _ in tqdm(range(blocks), desc="Decomposing blocks", disable=ctx.obj['quiet']):
            result = next(results)
            plan = result.plan
            local = result.operator()
            block_error = float(np.max(np.abs(local - np.diag(result.block.eigenvalues))))

            grown = np.zeros((plan.n + 1, plan.n + 1))
            grown[:running.shape[0], :running.shape[0]] = running
            grown[plan.n_prev:, plan.n_prev:] += local
            running = grown
            expected = np.diag([1.0] * plan.n + [float(plan.residual)])
            partial_sum_error = float(np.max(np.abs(running - expected)))

            if partial_sum_error > tolerances.reconstruction_tolerance(plan.n):
                raise VerificationFailed(f"Partial sum after block {plan.index} is off by {partial_sum_error:.3e}")
            block_reports.append({
                **plan.to_dict(),
                "terms": len(result.terms),
                "block_error": block_error,
                "partial_sum_error": partial_sum_error,
            })
            emitted.extend(term.to_dict() for term in result.terms)
    except Exception as e:
        _fail(e)

    output = {"stream": weights_source, "consumed": weights.consumed, "blocks": block_reports}
    if terms:
        output["terms"] = emitted
    _emit(output, out)
    click.echo(f"✅ {blocks} blocks, {len(emitted)} terms, identity reproduced on the first "
               f"{running.shape[0] - 1 if blocks else 0} coordinates", err=True)


@cli.command(name='init-problem')
@click.option('--output', '-o', type=click.Path(), default='problem.yaml',
              help='Output problem file path')
def init_problem(output: str):
    """Create a sample problem file."""
    output_path = Path(output)
    with open(output_path, 'w') as f:
        if output_path.suffix.lower() == '.json':
            f.write(write_result(PROBLEM_TEMPLATE) + "\n")
        else:
            yaml.dump(PROBLEM_TEMPLATE, f, default_flow_style=False, indent=2)

    click.echo(f"✅ Problem template created: {output_path}", err=True)
    click.echo("Edit this file to set your operator and weights.", err=True)


def main():
    """Main entry point for the CLI."""
    cli()


if __name__ == '__main__':
    main()
