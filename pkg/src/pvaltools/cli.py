"""Command-line entry point: ``pvaltools <subcommand> ...``.

Exit codes: 0 success, 2 argument or validation error, 3 numerical failure.

Every run emits a manifest (subcommand, parameters, seed, version, output
paths). With ``--out FILE`` it is written next to the output as
``FILE.manifest.json``; otherwise it goes to stderr. Worker counts are not
part of the manifest because they never change results.
"""
import argparse
import csv
import io
import json
import os
import sys
from importlib import resources


from . import __version__, design, evidence, inference, multiplicity
from . import montecarlo as mc
from .errors import NumericalFailure, UndefinedStatistic

FIG_SEED = 2019
FIG1_TARGETS = (0.06, 0.04)
FIG2_TARGETS = (0.05, 0.005, 0.0005, 0.0001)
FIG5_REFERENCE = (0.05, 0.005)


class UsageError(Exception):
    pass


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _emit(args, text, extra_outputs=()):
    outputs = list(extra_outputs)
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        outputs.insert(0, args.out)
    else:
        sys.stdout.write(text)
    _write_manifest(args, outputs)


def _params(args):
    skip = {"func", "out", "workers", "command", "outdir"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _manifest(args, outputs):
    params = _params(args)
    return {
        "tool": "pvaltools",
        "version": __version__,
        "subcommand": args.command,
        "params": params,
        "seed": params.get("seed"),
        "outputs": list(outputs),
    }


def _write_manifest(args, outputs):
    manifest = _manifest(args, outputs)
    if outputs:
        with open(outputs[0] + ".manifest.json", "w") as fh:
            fh.write(_dump_json(manifest))
    else:
        sys.stderr.write(json.dumps(manifest, sort_keys=False) + "\n")


def _header(args):
    """'#' metadata lines echoing seed and parameters."""
    return [f"{k}={v}" for k, v in _params(args).items()]


# --------------------------------------------------------------------------
# input helpers


def _read_columns(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise UsageError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for r in body:
        for name, cell in zip(header, r):
            cell = cell.strip()
            if cell:
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise UsageError(f"{path}: non-numeric value {cell!r} in column {name!r}") from None
    return header, cols


def _first_column(path):
    header, cols = _read_columns(path)
    return cols[header[0]]


def bundled_control():
    """The packaged 5-point control dataset used for the pseudo-data figures."""
    text = resources.files("pvaltools").joinpath("data/control5.csv").read_text()
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not r[0].startswith("#")]
    return [float(r[0]) for r in rows[1:]]


def _sim_config(args, mu=None):
    return mc.SimConfig(
        reps=args.reps,
        seed=args.seed,
        n_per_group=args.n,
        population=mc.PopulationSpec(args.mu if mu is None else mu, args.sigma),
        null_mu=getattr(args, "null_mu", 0.0),
        alpha=args.alpha,
        tails=args.tails,
        workers=args.workers,
    )


def _summary_csv(args, report):
    d = report.to_dict()
    buf = io.StringIO()
    for line in _header(args):
        buf.write(f"# {line}\n")
    buf.write(",".join(d) + "\n")
    buf.write(",".join("" if v is None else repr(v) for v in d.values()) + "\n")
    return buf.getvalue()


def _sim_json(args, report, cfg):
    return _dump_json({
        "seed": args.seed,
        "rng": mc.rng.ALGORITHM,
        "params": _params(args),
        "config": cfg.to_dict(),
        "report": report.to_dict(),
    })


# --------------------------------------------------------------------------
# subcommands


def cmd_ttest(args):
    if args.data:
        header, cols = _read_columns(args.data)
        a = cols[header[0]]
        b = cols[header[1]] if len(header) > 1 else None
    elif args.a:
        a = _first_column(args.a)
        b = _first_column(args.b) if args.b else None
    else:
        raise UsageError("give a CSV file or --a/--b")
    spec = inference.TestSpec(args.variant, args.null_delta, args.tails)
    if spec.variant == "one-sample":
        b = None
    res = inference.t_test_data(a, b, spec)
    d = res.to_dict()
    keys = ["t", "df", "p", "tails", "mean_diff", "pooled_sd", "cohen_d", "variant", "scale", "degenerate"]
    _emit(args, _dump_json({k: d[k] for k in keys}))


def _fitp_table(control, targets, spec):
    cols = {"control": list(control)}
    achieved = {}
    for tp in targets:
        ctl, trt = inference.fit_pseudo_data(control, len(control), tp, spec)
        cols[f"p={tp!r}"] = list(trt)
        achieved[tp] = inference.t_test_data(trt, ctl, spec).p
    return cols, achieved


def _fitp_csv(cols, achieved, header_lines):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    for tp, p in achieved.items():
        buf.write(f"# target={tp!r} achieved_p={p!r}\n")
    names = list(cols)
    buf.write(",".join(names) + "\n")
    for i in range(len(cols["control"])):
        buf.write(",".join(repr(float(cols[c][i])) for c in names) + "\n")
    return buf.getvalue()


def cmd_fitp(args):
    control = _first_column(args.control) if args.control else bundled_control()
    spec = inference.TestSpec(args.variant, args.null_delta, args.tails)
    cols, achieved = _fitp_table(control, args.target, spec)
    if args.format == "json":
        text = _dump_json({
            "groups": cols,
            "achieved_p": {repr(k): v for k, v in achieved.items()},
            "tails": spec.tails,
            "variant": spec.variant,
        })
    else:
        text = _fitp_csv(cols, achieved, _header(args))
    _emit(args, text)


def cmd_power(args):
    q = design.DesignQuery(args.effect, args.n, args.alpha, args.tails, args.variant, args.n2)
    pw = design.power(q)
    if args.format == "json":
        text = _dump_json({"power": pw, "df": q.df, "ncp": q.ncp, **_params(args)})
    else:
        text = f"power = {pw:.6f}\n"
    _emit(args, text)


def cmd_nsolve(args):
    n = design.solve_n(args.effect, args.alpha, args.power, args.tails, args.variant)
    n_up = design.round_n(n)
    if args.format == "json":
        text = _dump_json({"n": n, "n_rounded": n_up, **_params(args)})
    else:
        text = f"n = {n:.6f}\nn_rounded = {n_up}\n"
    _emit(args, text)


def _grids(args):
    n_list = list(range(args.n_min, args.n_max + 1))
    effects = design.default_effect_grid(args.effect_max, args.effect_step)
    return n_list, effects


def _table_text(table):
    buf = io.StringIO()
    table.to_csv(buf)
    return buf.getvalue()


def cmd_curves(args):
    n_list, effects = _grids(args)
    table = design.power_curve(n_list, effects, args.alpha, args.tails, workers=args.workers)
    _emit(args, _table_text(table))


def cmd_epv(args):
    n_list, effects = _grids(args)
    if args.mean:
        table = design.p_mean_curve(n_list, effects, args.tails, workers=args.workers)
    else:
        table = design.p_quantile_curve(args.q, n_list, effects, args.tails, workers=args.workers)
    _emit(args, _table_text(table))


def cmd_sim_filter(args):
    cfg = _sim_config(args)
    report, rec = mc.sim_significance_filter(cfg)
    if args.format == "csv":
        buf = io.StringIO()
        rec.to_csv(buf, _header(args) + [f"rng={mc.rng.ALGORITHM}"])
        text = buf.getvalue()
    else:
        text = _sim_json(args, report, cfg)
    _emit(args, text)


def cmd_typem(args):
    # sim_type_m places the population mean at null_mu + effect * sigma
    cfg = _sim_config(args, mu=args.null_mu + args.effect * args.sigma)
    report = mc.sim_type_m(cfg, args.effect)
    text = _summary_csv(args, report) if args.format == "csv" else _sim_json(args, report, cfg)
    _emit(args, text)


def cmd_sim_stopping(args):
    rule = mc.StoppingRule(args.n1, args.n_add, args.alpha_stop, args.p_continue)
    cfg = mc.SimConfig(
        reps=args.reps, seed=args.seed, n_per_group=args.n1,
        population=mc.PopulationSpec(args.mu, args.sigma),
        alpha=args.alpha_stop, tails=args.tails, workers=args.workers,
    )
    report = mc.sim_optional_stopping(rule, cfg)
    text = _summary_csv(args, report) if args.format == "csv" else _sim_json(args, report, cfg)
    _emit(args, text)


def cmd_sim_fwer(args):
    cfg = mc.SimConfig(
        reps=args.reps, seed=args.seed, n_per_group=args.n,
        population=mc.PopulationSpec(args.mu, args.sigma),
        alpha=args.alpha, tails=args.tails, workers=args.workers,
    )
    report = mc.sim_fwer(args.k, args.alpha, cfg)
    text = _summary_csv(args, report) if args.format == "csv" else _sim_json(args, report, cfg)
    _emit(args, text)


def cmd_adjust(args):
    if args.input:
        if args.input == "-":
            payload = json.load(sys.stdin)
        else:
            with open(args.input) as fh:
                payload = json.load(fh)
    else:
        payload = {}
    p_values = payload.get("p_values", args.p or [])
    k = payload.get("k", args.k)
    alpha = payload.get("alpha_family", args.alpha)
    if k is None:
        k = len(p_values)
    if k < 1:
        raise UsageError("need P-values or --k")
    fam = multiplicity.Family(int(k), alpha, tuple(p_values) if p_values else None)
    out = {
        "k": fam.k,
        "alpha_family": fam.alpha_family,
        "threshold": fam.threshold,
        "fwer_unadjusted": multiplicity.fwer_analytic(alpha, fam.k),
        "fwer_bonferroni": multiplicity.fwer_analytic(fam.threshold, fam.k),
    }
    if p_values:
        out["p_values"] = list(fam.p_values)
        out["adjusted"] = fam.adjusted()
        out["significant"] = fam.rejected()
    _emit(args, _dump_json(out))


def cmd_describe(args):
    scale = evidence.DescriptorScale.from_json(args.scale) if args.scale else evidence.default_scale()
    if args.table:
        buf = io.StringIO()
        buf.write("lower,upper,label\n")
        for lo, hi, label in scale.bands():
            buf.write(f"{lo!r},{hi!r},{label}\n")
        text = buf.getvalue()
    elif args.p:
        if args.format == "json":
            text = _dump_json([{"p": p, "label": evidence.describe(p, scale)} for p in args.p])
        else:
            text = "".join(f"{p!r}\t{evidence.describe(p, scale)}\n" for p in args.p)
    else:
        raise UsageError("give P-values with --p or use --table")
    _emit(args, text)


def cmd_reproduce(args):
    outdir = args.outdir
    os.makedirs(outdir, exist_ok=True)
    written = reproduce_figure(args.fig, outdir, seed=args.seed, reps=args.reps, workers=args.workers)
    sys.stdout.write("".join(p + "\n" for p in written))
    _write_manifest(args, written)


def reproduce_figure(fig, outdir, seed=FIG_SEED, reps=100, workers=1):
    """Write the data tables behind a figure and return their paths."""
    written = []

    def put(name, text):
        path = os.path.join(outdir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        written.append(path)

    spec = inference.TestSpec("two-sample-pooled", 0.0, "one-greater")
    if fig in (1, 2):
        targets = FIG1_TARGETS if fig == 1 else FIG2_TARGETS
        cols, achieved = _fitp_table(bundled_control(), targets, spec)
        put(f"fig{fig}_pseudo_data.csv", _fitp_csv(cols, achieved, [f"figure={fig}", "tails=one-greater", "n=5"]))
    elif fig == 4:
        n_list, effects = design.default_n_list(), design.default_effect_grid()
        for alpha in (0.05, 0.005):
            table = design.power_curve(n_list, effects, alpha, "one", workers=workers)
            put(f"fig4_power_alpha{alpha!r}.csv", _table_text(table))
    elif fig == 5:
        n_list, effects = design.default_n_list(), design.default_effect_grid()
        for q, name in ((0.5, "median"), (0.9, "p90")):
            table = design.p_quantile_curve(q, n_list, effects, "one", workers=workers)
            put(f"fig5_p_{name}.csv", _table_text(table))
        put("fig5_reference_lines.csv", "p\n" + "".join(f"{p!r}\n" for p in FIG5_REFERENCE))
    elif fig == 6:
        cfg = mc.SimConfig(reps=reps, seed=seed, n_per_group=5, population=mc.PopulationSpec(1.0, 1.0),
                           null_mu=0.0, alpha=0.05, tails="one-greater", workers=workers)
        report, rec = mc.sim_significance_filter(cfg)
        buf = io.StringIO()
        rec.to_csv(buf, [f"seed={seed}", f"reps={reps}", "n=5", "mu=1.0", "sigma=1.0",
                         "null_mu=0.0", "alpha=0.05", "tails=one-greater", f"rng={mc.rng.ALGORITHM}"])
        put("fig6_scatter.csv", buf.getvalue())
        put("fig6_summary.json", _dump_json({"seed": seed, "config": cfg.to_dict(), "report": report.to_dict()}))
    else:
        raise UsageError(f"no reproduction recipe for figure {fig}")
    return written


# --------------------------------------------------------------------------
# parser


def _tails_arg(p, default="one"):
    p.add_argument("--tails", default=default,
                   choices=["one", "one-greater", "one-less", "two"],
                   help="tail direction; 'one' means one-greater (default: %(default)s)")


def _sim_args(p, reps=100_000, fmt="json"):
    p.add_argument("--seed", type=int, default=mc.DEFAULT_SEED, help="master seed (default: %(default)s)")
    p.add_argument("--reps", type=int, default=reps, help="replicates (default: %(default)s)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default=fmt)
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")


def _grid_args(p):
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--effect-max", type=float, default=4.0)
    p.add_argument("--effect-step", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1, help="processes for table rows")
    p.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pvaltools",
        description="t tests, power and expected P-value curves, and seeded error-rate simulations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    p = sub.add_parser("ttest", help="t test on CSV data")
    p.add_argument("data", nargs="?", help="CSV with one column per group and a header row")
    p.add_argument("--a", help="CSV holding group 1 in its first column")
    p.add_argument("--b", help="CSV holding group 2 in its first column")
    p.add_argument("--variant", default="pooled", choices=["pooled", "welch", "one-sample"])
    p.add_argument("--null-delta", type=float, default=0.0)
    _tails_arg(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ttest)

    p = sub.add_parser("fitp", help="shift a control dataset to hit target P-values")
    p.add_argument("--control", help="CSV with control values in the first column (default: bundled 5-point set)")
    p.add_argument("--target", type=float, nargs="+", default=list(FIG1_TARGETS))
    p.add_argument("--variant", default="pooled", choices=["pooled", "welch"])
    p.add_argument("--null-delta", type=float, default=0.0)
    _tails_arg(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fitp)

    p = sub.add_parser("power", help="power of a t test design")
    p.add_argument("--effect", type=float, required=True, help="standardised effect delta/sigma")
    p.add_argument("--n", type=float, required=True, help="sample size per group")
    p.add_argument("--n2", type=float, help="second group size for unequal designs")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tails", default="one", choices=["one", "two"])
    p.add_argument("--variant", default="two-sample", choices=list(design.DESIGN_VARIANTS))
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("nsolve", help="sample size for a target power")
    p.add_argument("--effect", type=float, default=1.5, help="standardised effect delta/sigma")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--power", type=float, default=0.8)
    p.add_argument("--tails", default="one", choices=["one", "two"])
    p.add_argument("--variant", default="two-sample", choices=list(design.DESIGN_VARIANTS))
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_nsolve)

    p = sub.add_parser("curves", help="power curve table")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tails", default="one", choices=["one", "two"])
    _grid_args(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("epv", help="expected P-value curve table")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--q", type=float, default=0.5, help="quantile of the P-value distribution")
    g.add_argument("--mean", action="store_true", help="tabulate the mean P-value instead")
    p.add_argument("--tails", default="one", choices=["one", "two"])
    _grid_args(p)
    p.set_defaults(func=cmd_epv)

    p = sub.add_parser("sim-filter", help="significance filter simulation")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--null-mu", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    _tails_arg(p)
    _sim_args(p)
    p.set_defaults(func=cmd_sim_filter)

    p = sub.add_parser("typem", help="type M exaggeration simulation")
    p.add_argument("--effect", type=float, default=1.0, help="true standardised effect")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--null-mu", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.05)
    _tails_arg(p)
    _sim_args(p)
    p.set_defaults(func=cmd_typem)

    p = sub.add_parser("sim-stopping", help="optional stopping false positive rate")
    p.add_argument("--n1", type=int, default=5)
    p.add_argument("--n-add", type=int, default=5)
    p.add_argument("--alpha-stop", type=float, default=0.05)
    p.add_argument("--p-continue", type=float, default=0.1)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    _tails_arg(p)
    _sim_args(p)
    p.set_defaults(func=cmd_sim_stopping)

    p = sub.add_parser("sim-fwer", help="family-wise error simulation")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    _tails_arg(p)
    _sim_args(p)
    p.set_defaults(func=cmd_sim_fwer)

    p = sub.add_parser("adjust", help="Bonferroni threshold and adjusted P-values (JSON)")
    p.add_argument("--p", type=float, nargs="+")
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--input", help='JSON file ("-" for stdin): {"p_values": [...], "k": .., "alpha_family": ..}')
    p.add_argument("--out")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("describe", help="evidence descriptors for P-values")
    p.add_argument("--p", type=float, nargs="+")
    p.add_argument("--table", action="store_true", help="print the band table")
    p.add_argument("--scale", help='JSON config {"edges": [...], "labels": [...]}')
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("reproduce", help="write the data behind a figure")
    p.add_argument("--fig", type=int, required=True, choices=[1, 2, 4, 5, 6])
    p.add_argument("--outdir", default=".")
    p.add_argument("--seed", type=int, default=FIG_SEED)
    p.add_argument("--reps", type=int, default=100, help="replicates for figure 6")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_reproduce)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalFailure as exc:
        print(f"pvaltools: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, UndefinedStatistic, UsageError, OSError, KeyError) as exc:
        print(f"pvaltools: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None):
    try:
        return run(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad arguments, 0 on --help
        return exc.code if isinstance(exc.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
