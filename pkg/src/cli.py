"""Command-line interface for the ePCA toolkit"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .core.error_handler import EXIT_OK, EXIT_USAGE, handle_errors
from .core.exceptions import ConfigurationError, DataError, UsageError
from .core.logging import get_logger, get_performance_metrics, setup_logging
from .core.rng import RNG_NAME, resolve_seed
from .core.settings import get_settings
from .families import ExponentialFamily, parse_family
from .models.batch_models import DataBatch
from .models.covariance_models import DenoiseMethod, EstimatorKind, MpDistribution
from .models.simulation_models import LowRankConfig, SpikedPoissonConfig
from .services.covariance_pipeline import Normalization, baseline_estimators, fit_epca, pc_scores
from .services.denoiser import build_denoiser, denoise, denoise_mse
from .services.experiments import bench_rows, experiment_registry, run_bench
from .services.genotype_ingest import ingest_genotypes
from .services.matrix_storage import (
    MatrixFormat, format_table, read_matrix, sniff_format, write_matrix, write_table
)
from .services.metrics import matrix_errors, signal_subspace, sq_correlation, subspace_error
from .services.model_storage import save_model, load_model
from .services.rmt import estimated_improvement, mp_pdf
from .services.simulation import check_spiked_config, gen_low_rank_poisson, gen_spiked_poisson, run_trials

logger = get_logger(__name__)


class EPCAArgumentParser(argparse.ArgumentParser):
    """Argument parser that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def parse_families(text: str) -> List[ExponentialFamily]:
    """Comma-separated family strings: one shared family or one per column"""
    return [parse_family(part) for part in text.split(",") if part.strip()]


def load_batch(path: str, families: Sequence[ExponentialFamily], values: Optional[np.ndarray] = None) -> DataBatch:
    """Read a matrix file and validate it against its families"""
    matrix = read_matrix(path) if values is None else values
    try:
        return DataBatch.from_array(matrix, list(families))
    except ValidationError as e:
        raise DataError(f"{path}: {e.errors()[0]['msg']}")


def build_config(cls, **fields):
    """Construct a pydantic config, reporting invalid values as configuration errors"""
    try:
        return cls(**fields)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {cls.__name__}: {e.errors()[0]['msg']}")


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _padded(values: np.ndarray, size: int) -> np.ndarray:
    # NaN where an estimator kept fewer eigenvalues than the table has rows
    out = np.full(size, np.nan)
    out[:min(size, values.size)] = values[:size]
    return out


class EPCACLI:
    """Command-line interface for ePCA covariance estimation and denoising"""

    def __init__(self):
        """Initialize CLI"""
        self.settings = get_settings()
        logger.debug(f"CLI initialized - Environment: {self.settings.environment}")

    def _seed(self, cli_seed: Optional[int]) -> int:
        return resolve_seed(cli_seed, self.settings.seed)

    def create_parser(self) -> argparse.ArgumentParser:
        """Create command-line argument parser"""
        parser = EPCAArgumentParser(
            prog="epca",
            description="Covariance estimation, PCA and denoising for exponential-family noise",
            formatter_class=argparse.RawDescriptionHelpFormatter
        )

        subparsers = parser.add_subparsers(dest='command', help='Available commands')

        # Fit command
        fit_parser = subparsers.add_parser('fit', help='Fit the ePCA covariance model')
        fit_parser.add_argument('--input', required=True, help='Data matrix (CSV or epm1), rows are samples')
        fit_parser.add_argument('--family', default='poisson', help='Family string, or one per column separated by commas (default: poisson)')
        fit_parser.add_argument('--rank', type=int, required=True, help='Number of spikes to estimate')
        fit_parser.add_argument('--out', required=True, help='Output bundle directory')
        fit_parser.add_argument('--epsilon', type=float, default=None, help='Default ridge weight stored with the bundle')
        fit_parser.add_argument('--seed', type=int, default=None, help='Seed the input was generated with (provenance only)')
        fit_parser.add_argument('--clamp-means', action='store_true', help='Clamp out-of-domain column means')
        fit_parser.add_argument(
            '--drop-degenerate', dest='drop_degenerate', action=argparse.BooleanOptionalAction,
            default=self.settings.drop_degenerate, help='Drop zero-noise columns instead of failing'
        )

        # Denoise command
        denoise_parser = subparsers.add_parser('denoise', help='Denoise observations with a fitted model')
        denoise_parser.add_argument('--model', required=True, help='Model bundle directory')
        denoise_parser.add_argument('--input', required=True, help='Noisy data matrix')
        denoise_parser.add_argument('--out', required=True, help='Output file (same format as the input)')
        denoise_parser.add_argument('--method', choices=[m.value for m in DenoiseMethod], default='eblp')
        denoise_parser.add_argument('--epsilon', type=float, default=None, help='Ridge weight (default: bundle value)')
        denoise_parser.add_argument('--clamp', action='store_true', help='Clip negative outputs to 0')
        denoise_parser.add_argument('--truth', default=None, help='Clean matrix for an MSE report')

        # Simulate command
        simulate_parser = subparsers.add_parser('simulate', help='Generate seeded data from a simulation model')
        simulate_parser.add_argument('--scenario', choices=['spiked', 'lowrank', 'null'], required=True)
        simulate_parser.add_argument('--n', type=int, required=True, help='Number of samples')
        simulate_parser.add_argument('--p', type=int, required=True, help='Number of features')
        simulate_parser.add_argument('--rank', type=int, default=1, help='Rank of the low-rank model (default: 1)')
        simulate_parser.add_argument('--ell', type=float, default=1.0, help='Spike strength of the spiked model')
        simulate_parser.add_argument('--signal-strength', type=float, default=None, help='Coefficient total A of the low-rank model')
        simulate_parser.add_argument('--mean-intensity', type=float, default=None, help='Average clean entry of the low-rank model')
        simulate_parser.add_argument('--seed', type=int, default=None, help='Base seed (EPCA_SEED overrides)')
        simulate_parser.add_argument('--trials', type=int, default=1, help='Number of trials (default: 1)')
        simulate_parser.add_argument('--format', choices=[f.value for f in MatrixFormat], default='csv')
        simulate_parser.add_argument('--out', required=True, help='Output directory')

        # MP command
        mp_parser = subparsers.add_parser('mp', help='Tabulate the Marchenko-Pastur density')
        mp_parser.add_argument('--gamma', type=float, required=True, help='Aspect ratio p/n')
        mp_parser.add_argument('--grid', type=int, default=200, help='Number of grid points (default: 200)')
        mp_parser.add_argument('--out', default=None, help='Output file (default: stdout)')

        # Eigen command
        eigen_parser = subparsers.add_parser('eigen', help='PC scores of normalized data')
        eigen_parser.add_argument('--input', required=True, help='Data matrix')
        eigen_parser.add_argument('--family', default='poisson', help='Family string (default: poisson)')
        eigen_parser.add_argument('--rank', type=int, required=True, help='Number of PCs')
        eigen_parser.add_argument('--normalization', choices=[n.value for n in Normalization], default='homogenize')
        eigen_parser.add_argument('--genotypes', action='store_true', help='Read input as genotypes with NA tokens')
        eigen_parser.add_argument('--out', default=None, help='Output file (default: stdout)')

        # Bench command
        bench_parser = subparsers.add_parser('bench', help='Run the acceptance experiments')
        bench_parser.add_argument(
            '--experiments', default=None,
            help=f"Comma-separated subset of: {', '.join(experiment_registry.available())}"
        )
        bench_parser.add_argument('--full', action='store_true', help='Run at acceptance scale instead of quick scale')
        bench_parser.add_argument('--seed', type=int, default=None, help='Base seed (EPCA_SEED overrides)')
        bench_parser.add_argument('--workers', type=int, default=None, help='Trial worker threads')
        bench_parser.add_argument('--out', default=None, help='Summary table file (default: stdout)')

        return parser

    @handle_errors("fit")
    def fit_command(self, args) -> int:
        """Execute fit command"""
        families = parse_families(args.family)
        batch = load_batch(args.input, families)
        baselines = baseline_estimators(
            batch, args.rank, drop_degenerate=args.drop_degenerate, clamp_means=args.clamp_means or None
        )
        model = baselines[EstimatorKind.SCALED]
        save_model(model, args.out, epsilon=args.epsilon, seed=args.seed)

        print(f"✅ Fitted rank-{args.rank} model on {batch.n}x{batch.p} data (gamma={model.gamma:.4g})")
        print(f"   • Spikes above the transition: {model.kept_count}")
        print(f"   • Dropped columns: {len(model.dropped_columns)}")
        print(f"   • Bundle saved to: {args.out}")
        sample = _padded(baselines[EstimatorKind.SAMPLE].eigenvalues, model.kept_count)
        debiased = _padded(baselines[EstimatorKind.DEBIASED].eigenvalues, model.kept_count)
        rows = [
            [i, model.homogenized_spikes[i], model.het_eigvals[i], model.alphas[i],
             model.eigenvalues[i], estimated_improvement(model, i), sample[i], debiased[i]]
            for i in range(model.kept_count)
        ]
        sys.stdout.write(format_table(
            np.array(rows) if rows else np.empty((0, 8)),
            header=[
                "index", "ell_hat", "het_eigval", "alpha", "scaled_eigval", "improvement",
                "sample_eigval", "debiased_eigval",
            ],
        ))
        return EXIT_OK

    @handle_errors("denoise")
    def denoise_command(self, args) -> int:
        """Execute denoise command"""
        model, metadata = load_model(args.model)
        families = [parse_family(f) for f in metadata.families]
        values = read_matrix(args.input)
        if len(families) > 1 and values.shape[1] == model.p and model.p != len(families):
            dropped = set(model.dropped_columns)
            families = [f for j, f in enumerate(families) if j not in dropped]
        batch = load_batch(args.input, families, values)

        epsilon = metadata.epsilon if args.epsilon is None else args.epsilon
        denoiser = build_denoiser(model, epsilon, DenoiseMethod(args.method))
        denoised = denoise(denoiser, batch, clamp=args.clamp)
        write_matrix(args.out, denoised, fmt=sniff_format(args.input))

        print(f"✅ Denoised {batch.n}x{batch.p} data with {args.method} (epsilon={epsilon})")
        print(f"   • Output saved to: {args.out}")
        if args.truth:
            truth = read_matrix(args.truth)
            print(f"   • MSE noisy: {denoise_mse(batch.values, truth):.6g}")
            print(f"   • MSE denoised: {denoise_mse(denoised, truth):.6g}")
        return EXIT_OK

    @handle_errors("simulate")
    def simulate_command(self, args) -> int:
        """Execute simulate command"""
        base_seed = self._seed(args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        suffix = ".epm" if args.format == MatrixFormat.EPM1.value else ".csv"
        scenario = args.scenario
        params: Dict[str, float] = {"n": args.n, "p": args.p}

        if scenario == 'lowrank':
            params.update({"rank": args.rank})
            base_cfg = build_config(
                LowRankConfig, n=args.n, p=args.p, rank=args.rank, signal_strength=args.signal_strength,
                mean_intensity=args.mean_intensity, seed=base_seed
            )
            params["strength"] = base_cfg.strength
        else:
            ell = 0.0 if scenario == 'null' else args.ell
            params.update({"ell": ell})
            base_cfg = build_config(SpikedPoissonConfig, n=args.n, p=args.p, ell=ell, seed=base_seed)
            spike_u, spike_v = check_spiked_config(base_cfg)
            params["t"] = ell
            write_matrix(out / f"truth_u{suffix}", spike_u.reshape(-1, 1))
            write_matrix(out / f"truth_v{suffix}", spike_v.reshape(-1, 1))

        def trial(seed: int) -> Dict[str, float]:
            index = seed - base_seed
            cfg = base_cfg.model_copy(update={"seed": seed})
            if scenario == 'lowrank':
                batch, truth = gen_low_rank_poisson(cfg)
                model = fit_epca(batch, args.rank)
                kept = model.kept_columns
                kept_cov = truth.covariance()[np.ix_(kept, kept)]
                basis = signal_subspace(kept_cov, args.rank)
                metrics = {
                    "mean_count": float(batch.values.mean()),
                    "kept_spikes": float(model.kept_count),
                    "subspace_error": subspace_error(model.het_eigvecs[:, :basis.shape[1]], basis),
                    "operator_error": matrix_errors(model.covariance(), kept_cov)["operator"],
                }
                write_matrix(out / f"truth_basis_{index}{suffix}", truth.basis)
            else:
                batch, truth = gen_spiked_poisson(cfg)
                model = fit_epca(batch, 1)
                kept = model.kept_count > 0
                metrics = {
                    "mean_count": float(batch.values.mean()),
                    "kept_spikes": float(model.kept_count),
                    "t_scaled": float(model.eigenvalues[0]) if kept else 0.0,
                    "sq_corr": sq_correlation(model.het_eigvecs[:, 0], truth.v[model.kept_columns]) if kept else 0.0,
                }
            write_matrix(out / f"batch_{index}{suffix}", batch.values)
            write_matrix(out / f"truth_{index}{suffix}", truth.signal)
            return metrics

        report = run_trials(trial, args.trials, base_seed, scenario, params)
        comments = [f"scenario={scenario} rng={RNG_NAME} base_seed={base_seed}"] + [
            f"{k}={v!r}" for k, v in params.items()
        ]
        names = report.metric_names
        write_table(
            out / "report.csv",
            np.column_stack([np.arange(report.n_trials)] + [report.metrics[k] for k in names]),
            header=["trial"] + names,
            comments=comments,
        )
        write_table(
            out / "summary.csv",
            np.array([[report.means[k], report.stds[k]] for k in names]),
            header=["mean", "std"],
            comments=comments + ["rows: " + ",".join(names)],
        )

        print(f"✅ Simulated {args.trials} {scenario} trial(s) into {out}")
        for name, mean, std in report.summary_rows():
            print(f"   • {name}: {mean:.6g} ± {std:.3g}")
        return EXIT_OK

    @handle_errors("mp")
    def mp_command(self, args) -> int:
        """Execute mp command"""
        if args.grid < 2:
            raise UsageError("--grid must be at least 2")
        law = build_config(MpDistribution, gamma=args.gamma)
        xs = np.linspace(law.support_lo, law.support_hi, args.grid)
        text = format_table(
            np.column_stack([xs, mp_pdf(law, xs)]),
            header=["x", "pdf"],
            comments=[
                f"gamma={law.gamma!r}",
                f"support_lo={law.support_lo!r}",
                f"support_hi={law.support_hi!r}",
                f"atom_at_zero={law.atom_at_zero!r}",
            ],
        )
        _emit(text, args.out)
        return EXIT_OK

    @handle_errors("eigen")
    def eigen_command(self, args) -> int:
        """Execute eigen command"""
        families = parse_families(args.family)
        if args.genotypes:
            genotypes = ingest_genotypes(args.input)
            batch = load_batch(args.input, families, genotypes.values)
        else:
            batch = load_batch(args.input, families)
        result = pc_scores(batch, args.rank, Normalization(args.normalization))
        text = format_table(
            result.scores,
            header=[f"pc{i + 1}" for i in range(args.rank)],
            comments=[
                f"normalization={result.normalization.value}",
                "eigenvalues=" + ",".join(f"{v!r}" for v in result.eigenvalues),
                f"columns_used={len(result.kept_columns)}",
            ],
        )
        _emit(text, args.out)
        return EXIT_OK

    @handle_errors("bench")
    def bench_command(self, args) -> int:
        """Execute bench command"""
        names = [x.strip() for x in args.experiments.split(",")] if args.experiments else None
        results = run_bench(names, quick=not args.full, base_seed=self._seed(args.seed), workers=args.workers)
        rows = bench_rows(results)
        text = "experiment,check,passed,seconds,rss_mb\n" + "".join(
            ",".join(str(x) for x in row) + "\n" for row in rows
        )
        _emit(text, args.out)

        failed = [r.name for r in results if not r.passed]
        print(f"{'✅' if not failed else '⚠️ '} {len(results) - len(failed)}/{len(results)} experiments passed")
        for operation, stats in get_performance_metrics().items():
            print(f"   • {operation}: {stats['total_calls']} calls, avg {stats['avg_duration']:.4f}s, peak {stats['peak_rss_mb']:.0f} MB")
        return EXIT_OK

    def dispatch(self, args) -> int:
        """Run the selected command"""
        commands = {
            'fit': self.fit_command,
            'denoise': self.denoise_command,
            'simulate': self.simulate_command,
            'mp': self.mp_command,
            'eigen': self.eigen_command,
            'bench': self.bench_command,
        }
        return commands[args.command](args)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point"""
    setup_logging()
    cli = EPCACLI()
    parser = cli.create_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return int(e.code or 0)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        return cli.dispatch(args)
    except KeyboardInterrupt:
        print("\n⚠️  Operation cancelled by user")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
