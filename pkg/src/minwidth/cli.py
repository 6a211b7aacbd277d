"""Command-line interface.

Subcommands mirror the pipelines: build-1d, fit-flow, compile-flow,
build-emd, certify, evaluate, plot-data.  Exit codes: 0 on success, 2 on
precondition or structural errors, 3 when a measured error exceeds the
requested budget.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds, emd, flowmap, uoe1d
from .errors import BudgetError, MinWidthError
from .measure import error_lp, error_uniform
from .network import deserialize, eval_batch, serialize
from .pipelines import _scalarize
from .targets import corpus, corpus_by_name


def _read_config(path):
    defaults = {"alpha": 0.99, "seed": 0, "grid_n": 101}
    if path is None:
        return defaults
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = (part.strip() for part in line.split("=", 1))
            if key in ("seed", "grid_n"):
                defaults[key] = int(value)
            else:
                defaults[key] = float(value)
    return defaults


def _parse_box(text):
    spans = []
    for part in text.split(","):
        lo, hi = part.split(":")
        spans.append((float(lo), float(hi)))
    return np.asarray(spans)


def _write(path, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


def _cmd_build_1d(args, cfg):
    spec = corpus_by_name(args.target)
    if spec.d_in != 1 or spec.d_out != 1:
        raise MinWidthError("build-1d needs a scalar 1D target")
    fn = _scalarize(spec)
    if args.norm == "lp":
        net = uoe1d.build_lp_uap_1d(fn, args.eps, args.p)
        report = error_lp(net, spec, spec.box, args.p, method="grid", n=20001)
    else:
        net = uoe1d.build_c_uap_1d(fn, args.eps)
        report = error_uniform(net, spec, spec.box, grid_n=10001)
    _write(args.out, serialize(net))
    print(
        f"built width-{net.declared_width} depth-{net.depth} net "
        f"({'/'.join(sorted(net.activation_tags()) or ['affine'])}); "
        f"{report.norm} error {report.value:.4g} (budget {args.eps})"
    )
    if report.value > args.eps:
        raise BudgetError(f"measured error {report.value:.4g} exceeds eps {args.eps}")


def _cmd_fit_flow(args, cfg):
    spec = corpus_by_name(args.target)
    d = max(spec.d_in, spec.d_out)
    rng = np.random.default_rng(args.seed)
    xs = rng.uniform(
        [b[0] for b in spec.box], [b[1] for b in spec.box], size=(200, spec.d_in)
    )
    samples = []
    for x in xs:
        xp = np.zeros(d)
        xp[: spec.d_in] = x
        yp = np.zeros(d)
        yp[: spec.d_out] = spec(x)
        samples.append((xp, yp))
    controls, history = flowmap.fit_controls(
        samples, args.pieces, budget=args.budget, seed=args.seed
    )
    _write(args.out, flowmap.controls_to_json(controls))
    if args.report:
        with open(args.report, "w") as fh:
            fh.write("iteration,loss\n")
            for it, loss in history:
                fh.write(f"{it},{loss!r}\n")
    print(f"fit {args.pieces} piece(s); final loss {history[-1][1]:.4g}")


def _cmd_compile_flow(args, cfg):
    with open(args.controls, "rb") as fh:
        controls = flowmap.controls_from_json(fh.read())
    box = _parse_box(args.box)
    net = flowmap.compile_flow(controls, args.dt, args.alpha, box, args.eps_per_map)
    _write(args.out, serialize(net))
    print(f"compiled width-{net.declared_width} depth-{net.depth} leaky-ReLU net")


def _cmd_build_emd(args, cfg):
    spec = corpus_by_name(args.target)
    q = emd.QuantSpec(spec.d_in, spec.d_out, args.kin, args.kout)
    net = emd.build_emd(spec, q, args.variant)
    _write(args.out, serialize(net))
    print(
        f"built width-{net.declared_width} depth-{net.depth} "
        f"{args.variant}+floor net for {spec.name}"
    )


def _cmd_certify(args, cfg):
    with open(args.net, "rb") as fh:
        net = deserialize(fh.read())
    spec = corpus_by_name(args.target)
    if args.kind == "null-direction":
        cert = bounds.null_direction_certificate(
            net,
            lambda x: spec(x),
            np.asarray(spec.box),
            lipschitz=spec.lipschitz,
        )
    else:
        ts = np.linspace(spec.box[0][0], spec.box[0][1], 200)
        samples = np.stack([spec(np.array([t])) for t in ts])
        last_width = net.layers[-1].out_width if net.layers else net.in_width
        cert = bounds.affine_range_certificate(last_width, samples)
    _write(args.out, cert.to_json())
    flag = "certified" if cert.certified else "measured only"
    print(f"{cert.kind}: {cert.norm} lower bound {cert.bound:.5g} ({flag})")


def _cmd_evaluate(args, cfg):
    with open(args.net, "rb") as fh:
        net = deserialize(fh.read())
    spec = corpus_by_name(args.target)
    kind, *rest = args.method.split(":")
    if kind == "grid":
        n = int(rest[0]) if rest else cfg["grid_n"]
        if args.norm == "uniform":
            report = error_uniform(net, spec, spec.box, grid_n=n)
        else:
            report = error_lp(net, spec, spec.box, args.p, method="grid", n=n)
    elif kind == "mc":
        n = int(rest[0])
        seed = int(rest[1]) if len(rest) > 1 else cfg["seed"]
        report = error_lp(
            net, spec, spec.box, args.p, method="monte_carlo", n=n, seed=seed
        )
    else:
        raise MinWidthError(f"unknown method {args.method!r}")
    row = (
        f"{spec.name},{report.norm},{report.value!r},{report.method},"
        f"{report.confidence_halfwidth!r}\n"
    )
    if args.report:
        with open(args.report, "a") as fh:
            fh.write(row)
    print(row.strip())


def _cmd_plot_data(args, cfg):
    with open(args.net, "rb") as fh:
        net = deserialize(fh.read())
    lo, hi, n = args.range.split(":")
    xs = np.linspace(float(lo), float(hi), int(n))
    spec = corpus_by_name(args.target) if args.target else None
    base = np.zeros((len(xs), net.in_width))
    base[:, args.axis] = xs
    outs = eval_batch(net, base)
    lines = []
    for i, x in enumerate(xs):
        row = [repr(float(x))] + [repr(float(v)) for v in outs[i]]
        if spec is not None:
            row += [repr(float(v)) for v in spec(base[i, : spec.d_in])]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="minwidth",
        description="minimum-width universal approximation constructions",
    )
    parser.add_argument("--config", default=None, help="key=value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-1d", help="width-1 builder for scalar targets")
    p.add_argument("--target", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--norm", choices=("lp", "uniform"), default="lp")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build_1d)

    p = sub.add_parser("fit-flow", help="fit piecewise-constant ODE controls")
    p.add_argument("--target", required=True)
    p.add_argument("--pieces", type=int, default=1)
    p.add_argument("--budget", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="CSV of (iteration, loss)")
    p.set_defaults(fn=_cmd_fit_flow)

    p = sub.add_parser("compile-flow", help="compile controls to a leaky-ReLU net")
    p.add_argument("--controls", required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--eps-per-map", type=float, default=2e-3)
    p.add_argument("--box", required=True, help="per-axis lo:hi, comma separated")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_compile_flow)

    p = sub.add_parser("build-emd", help="floor encoder-memorizer-decoder net")
    p.add_argument("--target", required=True)
    p.add_argument("--kin", type=int, required=True)
    p.add_argument("--kout", type=int, required=True)
    p.add_argument("--variant", choices=("uoe", "relu"), default="uoe")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build_emd)

    p = sub.add_parser("certify", help="emit an error lower-bound certificate")
    p.add_argument("--net", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--kind", choices=("null-direction", "affine-range"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_certify)

    p = sub.add_parser("evaluate", help="measure a net against a corpus target")
    p.add_argument("--net", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--norm", choices=("lp", "uniform"), default="lp")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--method", default="grid:101", help="grid:N or mc:N:SEED")
    p.add_argument("--report", default=None)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("plot-data", help="CSV of (x, net(x), target(x)) on one axis")
    p.add_argument("--net", required=True)
    p.add_argument("--axis", type=int, default=0)
    p.add_argument("--range", required=True, help="a:b:n")
    p.add_argument("--target", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_plot_data)

    p = sub.add_parser("targets", help="list the demo target corpus")
    p.set_defaults(fn=lambda a, c: print("\n".join(s.name for s in corpus())))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _read_config(args.config)
    try:
        args.fn(args, cfg)
    except BudgetError as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return 3
    except MinWidthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
