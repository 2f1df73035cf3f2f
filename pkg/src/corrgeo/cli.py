"""Command-line interface: ``corrgeo <command> [options]``.

Exit status is 0 on success, 1 for invalid input or usage and 2 for a
numerical failure. Analysis commands print a JSON report (or write it to
``-o``); the report echoes the effective configuration, and ``argv`` in
the report re-runs the same analysis.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CorrGeoError, InvalidInput, NumericalError, ValidationError
from .graph import default_j_max, gap_spectrum, gap_spectrum_select_k, subject_spectrum
from .io import read_basis, read_manifest, read_matrix, write_cohort, write_manifest, write_matrix
from .manifold import Metric, dist, embed_many, euclidean_mean, frechet_mean
from .ml.cv import make_cv_plan
from .ml.pipelines import run_brainage, run_classification, run_grassmann_pipeline, subspace_discriminant_cv, aggregate_folds
from .report import _float, dumps
from .stats import coordinate_distances, permutation_test
from .synth import SynthSpec, inject_age_trend, inject_group_effect, inject_subspace_effect

THREADS_ENV = "CORRGEO_THREADS"
# flags left out of the echoed configuration: they never change the results
NOT_ECHOED = {"threads", "func", "command"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42, help="random seed (default 42)")
    p.add_argument("--metric", default="offlog", choices=[m.value for m in Metric],
                   help="geometry for embeddings and distances (default offlog)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1); never changes results")
    p.add_argument("--shrink", action="store_true", help="repair rank-deficient matrices by shrinkage")
    p.add_argument("-o", "--output", default=None, help="output path")
    return p


def _cv_flags(p):
    p.add_argument("--folds", type=int, default=5, help="outer folds (default 5)")
    p.add_argument("--inner-folds", type=int, default=5, help="inner folds (default 5)")


def build_parser():
    common = _common()
    parser = _Parser(prog="corrgeo", description="Geometry-aware connectivity analysis.")
    parser.add_argument("--version", action="version", version=f"corrgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("dist", parents=[common], help="distance between two matrices")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("mean", parents=[common], help="Frechet mean of a cohort (CSV to -o)")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser("tangent", parents=[common], help="flat coordinates of every subject (CSV to -o)")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_tangent)

    p = sub.add_parser("bgtest", parents=[common], help="two-group interpoint-distance permutation test")
    p.add_argument("manifest")
    p.add_argument("--n-perm", type=int, default=1000)
    p.set_defaults(func=cmd_bgtest)

    p = sub.add_parser("brainage", parents=[common], help="nested-CV age regression")
    p.add_argument("manifest")
    p.add_argument("--variance-target", type=float, default=0.8)
    _cv_flags(p)
    p.set_defaults(func=cmd_brainage)

    p = sub.add_parser("classify", parents=[common], help="nested-CV two-class SVM")
    p.add_argument("manifest")
    _cv_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("grassmann", parents=[common], help="Grassmann subspace discriminant")
    p.add_argument("manifest")
    p.add_argument("--density", type=float, default=0.20)
    p.add_argument("--j-max", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="fix the subspace dimension")
    p.add_argument("--bases", action="store_true", help="manifest lists orthonormal n x k bases, not correlations")
    p.add_argument("--lda-shrinkage", type=float, default=0.1)
    _cv_flags(p)
    p.set_defaults(func=cmd_grassmann)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic cohort to -o DIR")
    p.add_argument("--preset", required=True, choices=["group-effect", "age-trend", "subspace"])
    p.add_argument("--n", type=int, default=None, help="matrix dimension (20; 60 for subspace)")
    p.add_argument("--m-per-group", type=int, default=None, help="subjects per group (20; 30 for subspace)")
    p.add_argument("--effect-size", type=float, default=1.0, help="Off-log effect norm (age-trend: latent sd)")
    p.add_argument("--noise-scale", type=float, default=0.2)
    p.add_argument("--slope", type=float, default=5.0, help="age-trend: years per unit of the planted coordinate")
    p.add_argument("--age-noise", type=float, default=5.0)
    p.add_argument("--k", type=int, default=4, help="subspace: dimension")
    p.add_argument("--angle", type=float, default=0.5, help="subspace: angle between class centers")
    p.add_argument("--subspace-noise", type=float, default=0.1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("laplacian", parents=[common], help="graph harmonics of one matrix")
    p.add_argument("a")
    p.add_argument("--density", type=float, default=0.20)
    p.add_argument("--j-max", type=int, default=None)
    p.set_defaults(func=cmd_laplacian)
    return parser


def _threads(args):
    value = args.threads
    if value is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        try:
            value = int(env) if env else 1
        except ValueError:
            raise InvalidInput(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if value < 1:
        raise InvalidInput("--threads must be at least 1")
    return value


def config_of(args):
    return {k: v for k, v in vars(args).items() if k not in NOT_ECHOED}


def argv_from_config(command, config, parser=None):
    """Command line that reproduces a report with the given configuration."""
    parser = parser or build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[command]
    argv = [command]
    for action in sub._actions:
        if action.dest not in config or action.dest == "help":
            continue
        value = config[action.dest]
        if not action.option_strings:
            argv.append(str(value))
        elif isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(action.option_strings[-1])
        elif value is not None:
            argv += [action.option_strings[-1], str(value)]
    return argv


def _emit(args, results, warnings=(), path=None):
    config = config_of(args)
    report = {
        "command": args.command,
        "version": __version__,
        "config": config,
        "argv": argv_from_config(args.command, config),
        "results": results,
        "warnings": list(warnings),
    }
    text = dumps(report)
    path = path if path is not None else args.output
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report


def _plan(args, y, regression=False):
    return make_cv_plan(y, k_outer=args.folds, k_inner=args.inner_folds, seed=args.seed, regression=regression)


def cmd_dist(args):
    notes = []
    A = read_matrix(args.a, args.shrink, notes)
    B = read_matrix(args.b, args.shrink, notes)
    d = dist(A, B, args.metric)
    if args.output:
        _emit(args, {"distance": d}, notes)
    else:
        for msg in notes:
            print(f"warning: {msg}", file=sys.stderr)
        print(_float(d))


def _need_output(args, what):
    if not args.output:
        raise InvalidInput(f"{args.command} needs -o for the {what}")


def cmd_mean(args):
    _need_output(args, "mean matrix CSV")
    cohort = read_manifest(args.manifest, args.shrink)
    metric = Metric.parse(args.metric)
    M = euclidean_mean(cohort.matrices) if metric is Metric.EUCLIDEAN else frechet_mean(cohort.matrices, metric)
    write_matrix(args.output, M)
    _emit(args, {"n_subjects": len(cohort), "n": cohort.n}, cohort.notes, path="")


def cmd_tangent(args):
    _need_output(args, "coordinate CSV")
    cohort = read_manifest(args.manifest, args.shrink)
    X = embed_many(cohort.matrices, args.metric)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write("subject_id," + ",".join(f"x{j}" for j in range(X.shape[1])) + "\n")
        for sid, row in zip(cohort.ids, X):
            fh.write(sid + "," + ",".join(format(v, ".17g") for v in row) + "\n")
    _emit(args, {"n_subjects": len(cohort), "n_coords": X.shape[1]}, cohort.notes, path="")


def cmd_bgtest(args):
    cohort = read_manifest(args.manifest, args.shrink)
    metric = Metric.parse(args.metric)
    y, names = cohort.binary_labels()
    D = coordinate_distances(embed_many(cohort.matrices, metric), metric.coord_scale)
    res = permutation_test(D, y, n_perm=args.n_perm, seed=args.seed, threads=_threads(args))
    results = {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "n_permutations": res.n_permutations,
        "groups": {names[0]: int((~y).sum()), names[1]: int(y.sum())},
    }
    _emit(args, results, cohort.notes)


def _report_results(report):
    return {
        "representation": report.representation,
        "aggregate": report.aggregate,
        "folds": report.folds,
        **report.extra,
    }


def cmd_brainage(args):
    cohort = read_manifest(args.manifest, args.shrink)
    plan = _plan(args, cohort.require_ages(), regression=True)
    report = run_brainage(cohort, args.metric, plan, variance_target=args.variance_target, threads=_threads(args))
    _emit(args, _report_results(report), report.warnings)


def cmd_classify(args):
    cohort = read_manifest(args.manifest, args.shrink)
    plan = _plan(args, cohort.binary_labels()[0])
    report = run_classification(cohort, args.metric, plan, threads=_threads(args))
    _emit(args, _report_results(report), report.warnings)


def _bases_report(args, cohort):
    y, names = cohort.binary_labels()
    plan = _plan(args, y)
    folds = subspace_discriminant_cv(cohort.matrices, y, plan, args.lda_shrinkage, _threads(args))
    keys = ("accuracy", "auc", "sensitivity", "specificity")
    n = cohort.n
    counts = np.zeros(n)
    out = []
    for f in folds:
        scores = f["model"].region_scores
        counts[np.lexsort((np.arange(n), -scores))[: max(1, int(np.ceil(0.1 * n)))]] += 1
        out.append({
            "fold": f["fold"],
            "n_test": len(f["test"]),
            "k": f["model"].k,
            "metrics": f["metrics"],
            "lda_metrics": f["lda_metrics"],
            "converged": f["model"].converged,
        })
    warnings = [f"fold {f['fold']}: center optimization hit the iteration limit" for f in out if not f["converged"]]
    return {
        "representation": "grassmann",
        "aggregate": aggregate_folds(out, keys),
        "folds": out,
        "classes": {"negative": names[0], "positive": names[1]},
        "lda_aggregate": aggregate_folds([{"metrics": f["lda_metrics"]} for f in out], keys),
        "region_selection_frequency": counts / len(out),
    }, warnings


def cmd_grassmann(args):
    if args.bases:
        cohort = read_manifest(args.manifest, loader=read_basis)
        results, warnings = _bases_report(args, cohort)
    else:
        cohort = read_manifest(args.manifest, args.shrink)
        plan = _plan(args, cohort.binary_labels()[0])
        report = run_grassmann_pipeline(cohort, args.density, args.j_max, plan, k=args.k,
                                        threads=_threads(args), lda_shrinkage=args.lda_shrinkage)
        results, warnings = _report_results(report), report.warnings
    freq = results.pop("region_selection_frequency")
    results["regions"] = [{"region": i, "selection_frequency": float(v)} for i, v in enumerate(freq)]
    _emit(args, results, warnings)


def cmd_synth(args):
    _need_output(args, "cohort directory")
    out = Path(args.output)
    if args.preset == "subspace":
        n = args.n or 60
        m = args.m_per_group or 30
        coh = inject_subspace_effect(n, args.k, m, args.angle, args.subspace_noise, seed=args.seed)
        (out / "matrices").mkdir(parents=True, exist_ok=True)
        rows = []
        for name, pts in (("A", coh.group_a), ("B", coh.group_b)):
            for i, U in enumerate(pts):
                rel = f"matrices/{name}{i:03d}.csv"
                write_matrix(out / rel, U)
                rows.append((f"{name}{i:03d}", rel, name, None))
        write_manifest(out / "manifest.csv", rows)
        results = {"manifest": str(out / "manifest.csv"), "n_subjects": len(rows), "kind": "bases"}
    else:
        n = args.n or 20
        m = args.m_per_group or 20
        spec = SynthSpec(n, (m, m), args.effect_size, None, args.noise_scale, args.seed)
        if args.preset == "group-effect":
            cohort = inject_group_effect(spec)
        else:
            cohort = inject_age_trend(spec, args.slope, age_noise=args.age_noise)
        manifest = write_cohort(out, cohort)
        results = {"manifest": str(manifest), "n_subjects": len(cohort), "kind": "correlation"}
    _emit(args, results, path="")


def cmd_laplacian(args):
    notes = []
    C = read_matrix(args.a, args.shrink, notes)
    spec = subject_spectrum(C, args.density)
    j_max = args.j_max if args.j_max is not None else default_j_max(spec.n)
    results = {
        "eigenvalues": spec.eigenvalues,
        "gap_spectrum": gap_spectrum(spec.eigenvalues),
        "j_max": j_max,
        "k": gap_spectrum_select_k(spec, j_max),
    }
    _emit(args, results, notes)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _threads(args)
        args.func(args)
    except ValidationError as exc:
        print(f"corrgeo: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"corrgeo: numerical failure: {exc}", file=sys.stderr)
        return 2
    except CorrGeoError as exc:
        print(f"corrgeo: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"corrgeo: error: {exc}", file=sys.stderr)
        return 1
    return 0
