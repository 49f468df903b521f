"""Command-line front end.

Subcommands:
  simulate  run a JSON experiment spec and tabulate/emit the summary
  analytic  evaluate the closed forms at the spec's sweep points
  compare   run the spec and report simulation vs closed forms with z-scores
  sweep     grid shorthand: build the spec from axis flags and run it

Output goes to stdout as a table; ``--out``/``--format`` add a CSV or JSON
file, and ``--plot DIR`` renders the report figures next to it.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import (
    CSV_HEADER,
    ExperimentSpec,
    SpecError,
    analytic_report,
    compare_rows,
    emit,
    emit_compare,
    run_experiment,
)

_COLS = CSV_HEADER.split(",")


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="64-bit stream seed override")
    p.add_argument("--trials", type=int, default=None, help="trials per sweep point override")
    p.add_argument("--out", default=None, help="write the summary to this path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=1, help="worker processes (speed only)")
    p.add_argument("--plot", metavar="DIR", default=None,
                   help="also render report figures into DIR")


def _add_spec_arg(p):
    p.add_argument("--spec", required=True, help="JSON experiment spec file")


def _int_list(text):
    out = []
    for part in text.split(","):
        if ":" in part:
            pieces = [int(x) for x in part.split(":")]
            start, stop = pieces[0], pieces[1]
            step = pieces[2] if len(pieces) > 2 else 1
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    return out


def _float_list(text):
    return [float(x) for x in text.split(",")]


def _path_list(text):
    out = []
    for part in text.split(","):
        out.append({"c": float(part[1:])} if part.startswith("c") else int(part))
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="beamtrain",
        description="Beam-based interleaved training: simulation and closed forms.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run an experiment spec")
    _add_spec_arg(p)
    _add_common(p)

    p = sub.add_parser("analytic", help="evaluate closed forms at the spec points")
    _add_spec_arg(p)
    _add_common(p)

    p = sub.add_parser("compare", help="simulation vs closed forms")
    _add_spec_arg(p)
    _add_common(p)

    p = sub.add_parser("sweep", help="grid shorthand without a spec file")
    p.add_argument("--mode", choices=("su", "mu"), default="su")
    p.add_argument("--scheme", default="it")
    p.add_argument("--method", choices=("exhaustive", "maxmin"), default=None)
    p.add_argument("--n-t", required=True, type=_int_list,
                   help="comma list or start:stop:step range")
    p.add_argument("--l", required=True, type=_path_list,
                   help="path counts; prefix c for a fraction of N_t (e.g. c0.1)")
    p.add_argument("--n-rf", required=True, type=_int_list)
    p.add_argument("--u", type=_int_list, default=[1])
    p.add_argument("--alpha", type=_float_list, default=None)
    p.add_argument("--power-db", type=_float_list, default=None)
    p.add_argument("--rate", type=_float_list, default=None)
    p.add_argument("--l-trained", type=_int_list, default=None)
    _add_common(p)

    return ap


def _spec_from_args(args) -> ExperimentSpec:
    if args.command == "sweep":
        axes = {"n_t": args.n_t, "l": args.l, "n_rf": args.n_rf, "u": args.u}
        for name in ("alpha", "power_db", "rate", "l_trained"):
            v = getattr(args, name)
            if v is not None:
                axes[name] = v
        d = {
            "mode": args.mode,
            "scheme": args.scheme,
            "trials": args.trials if args.trials is not None else 100_000,
            "seed": args.seed if args.seed is not None else 0,
            "axes": axes,
        }
        if args.method:
            d["method"] = args.method
        return ExperimentSpec.from_dict(d)
    spec = ExperimentSpec.from_file(args.spec)
    if args.seed is not None:
        spec = ExperimentSpec.from_dict({**_spec_dict(spec), "seed": args.seed})
    if args.trials is not None:
        spec = ExperimentSpec.from_dict({**_spec_dict(spec), "trials": args.trials})
    return spec


def _spec_dict(spec: ExperimentSpec) -> dict:
    axes = {"n_t": list(spec.n_t), "n_rf": list(spec.n_rf), "u": list(spec.n_users)}
    axes["l"] = [
        p.count if hasattr(p, "count") else {"c": p.fraction} for p in spec.paths
    ]
    for name in ("alpha", "power_db", "rate", "l_trained"):
        v = getattr(spec, name)
        if v is not None:
            axes[name] = list(v)
    d = {"mode": spec.mode, "scheme": spec.scheme, "trials": spec.trials,
         "seed": spec.seed, "axes": axes}
    if spec.method:
        d["method"] = spec.method
    return d


def _print_summary(summary):
    cols = ["mode", "scheme", "method", "N_t", "L", "N_RF", "U", "alpha", "trials",
            "mean_len", "se_len", "outage", "se_outage", "analytic_len",
            "analytic_outage", "flags"]
    widths = {c: max(len(c), 11) for c in cols}
    print("  ".join(c.rjust(widths[c]) for c in cols))
    for ps in summary.points:
        vals = {
            "mode": ps.mode, "scheme": ps.scheme, "method": ps.method or "-",
            "N_t": ps.n_t, "L": ps.n_paths, "N_RF": ps.n_rf, "U": ps.n_users,
            "alpha": f"{ps.alpha:g}", "trials": ps.trials,
            "mean_len": f"{ps.mean_len:.4f}", "se_len": f"{ps.se_len:.2e}",
            "outage": f"{ps.outage:.6f}", "se_outage": f"{ps.se_outage:.2e}",
            "analytic_len": "-" if ps.analytic_len is None else f"{ps.analytic_len:.4f}",
            "analytic_outage": "-" if ps.analytic_outage is None else f"{ps.analytic_outage:.6f}",
            "flags": ps.flags or "-",
        }
        print("  ".join(str(vals[c]).rjust(widths[c]) for c in cols))


def _print_compare(rows):
    hdr = ["N_t", "L", "N_RF", "alpha", "sim_len", "analytic_len", "z_len",
           "sim_outage", "analytic_outage", "z_outage", "flags"]
    print("  ".join(h.rjust(12) for h in hdr))
    for r in rows:
        z1 = "-" if r.z_len is None else f"{r.z_len:+.2f}"
        z2 = "-" if r.z_outage is None else f"{r.z_outage:+.2f}"
        al = "-" if r.analytic_len is None else f"{r.analytic_len:.4f}"
        ao = "-" if r.analytic_outage is None else f"{r.analytic_outage:.6f}"
        cells = [r.n_t, r.n_paths, r.n_rf, f"{r.alpha:g}", f"{r.sim_len:.4f}", al, z1,
                 f"{r.sim_outage:.6f}", ao, z2, r.flags or "-"]
        print("  ".join(str(c).rjust(12) for c in cells))


def _maybe_plot(args, spec, summary):
    if args.plot is None:
        return
    from .plotting import render_report_figures

    stem = "report"
    if args.out:
        stem = os.path.splitext(os.path.basename(args.out))[0]
    for path in render_report_figures(spec, summary, args.plot, stem=stem):
        print(f"wrote {path}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
        if args.command == "analytic":
            summary = analytic_report(spec)
            _print_summary(summary)
            if args.out:
                emit(summary, args.format, args.out)
                print(f"wrote {args.out}")
            return 0
        summary = run_experiment(spec, threads=max(1, args.threads))
        if args.command == "compare":
            rows = compare_rows(summary)
            _print_compare(rows)
            if args.out:
                emit_compare(rows, args.format, args.out)
                print(f"wrote {args.out}")
        else:
            _print_summary(summary)
            if args.out:
                emit(summary, args.format, args.out)
                print(f"wrote {args.out}")
        _maybe_plot(args, spec, summary)
        return 0
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
