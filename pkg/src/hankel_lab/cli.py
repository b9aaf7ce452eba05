"""Command-line driver: ``hankel-lab <subcommand> [--config FILE] [-p key=value ...]``.

Exit codes: 0 success, 2 accuracy failure, 3 precondition error,
1 any other library error.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import (
    ScaleGrid,
    XGrid,
    a_const,
    b_const,
    besov_condition,
    condition_iii,
    condition_iv,
    lf_norm,
    lp2_condition,
)
from .errors import AccuracyFailure, HankelLabError, InvalidArgumentError, PreconditionError
from .experiments import (
    ExperimentConfig,
    emit_report,
    find_signs,
    lambda_ratio,
    make_report,
    parse_value,
    run_chirp,
    run_equivalence,
    run_sharpness,
    run_zafran,
    default_frequency_set,
)
from .kernel_ops import decompose_hse, kernel_kab, kernest_check
from .multiplier_bank import resolve_label
from .spaces import WeightedMeasure, norm_report
from .special_functions import b_kernel
from .transforms import QuadratureSpec, fourier_bessel

SUBCOMMANDS = ("transform", "norm", "criterion", "kernel", "decompose", "sharpness", "chirp",
               "zafran", "lambda", "equivalence")


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _test_function(name):
    """(callable, support, oracle) for 'gaussian' or 'bump[:lam]' on the half-line."""
    head, _, arg = str(name).partition(":")
    if head == "gaussian":
        return (lambda s: np.exp(-0.5 * np.asarray(s) ** 2), (0.0, 40.0),
                lambda d, r: np.exp(-0.5 * np.asarray(r) ** 2))
    if head == "bump":
        lam = float(arg) if arg else 4.0
        c = 2.0 ** lam * math.gamma(lam + 1.0)
        return (lambda s: np.where(np.asarray(s) < 1, np.clip(1 - np.asarray(s) ** 2, 0, None)
                                   ** lam, 0.0), (0.0, 1.0),
                lambda d, r: c * b_kernel(d + 2.0 * lam + 2.0, np.asarray(r)))
    raise InvalidArgumentError(f"unknown test function {name!r}")


# ---------------------------------------------------------------------------
# subcommands: each takes the merged parameter dict and returns a report

def cmd_transform(P):
    d = float(P.get("d", 2.0))
    f, support, oracle = _test_function(P.get("f", "gaussian"))
    rho = np.linspace(0.0, float(P.get("rho_max", 8.0)), int(P.get("n", 65)))
    out = fourier_bessel(d, f, rho, QuadratureSpec(), support=support)
    err = float(np.max(np.abs(out.values - oracle(d, rho))))
    rows = [[float(r), float(np.real(v)), float(np.imag(v))] for r, v in zip(rho, out.values)]
    return make_report("transform", {"d": d, "f": P.get("f", "gaussian"), "n": rho.size,
                                     "rho_max": float(rho[-1])},
                       {"oracle_max_error": err, "quad_error": out.meta["quad_error"]},
                       {"columns": ["rho", "re", "im"], "rows": rows},
                       {"B_d f": {"x": rho.tolist(), "y": np.real(out.values).tolist()}})


def cmd_norm(P):
    """Lorentz/Lebesgue/dyadic norm of s^{-a} on [lo, hi] or a test function."""
    measure = str(P.get("measure", "radial:2"))
    head, _, arg = measure.partition(":")
    mu = (WeightedMeasure.radial_power(float(arg)) if head == "radial"
          else WeightedMeasure.line_weight(float(arg)))
    q = float(P.get("q", 2.0))
    sigma = float(P.get("sigma", q))
    lo, hi = float(P.get("lo", 1.0)), float(P.get("hi", 64.0))
    a = float(P.get("a", 1.0))
    n = int(P.get("n", 4096))

    def sample(n):
        x = np.geomspace(lo, hi, n)
        edges = np.concatenate([[lo], np.sqrt(x[1:] * x[:-1]), [hi]])
        return x ** -a, np.diff(mu.primitive(edges))

    rep = norm_report(sample(n), mu, q, sigma, str(P.get("kind", "lorentz")), sample(2 * n))
    return make_report("norm", {"measure": measure, "q": q, "sigma": sigma, "a": a, "lo": lo,
                                "hi": hi, "n": n, "kind": rep.norm_kind},
                       {"value": rep.value, "refinement_ratio": rep.refinement_ratio},
                       {"columns": ["kind", "value"], "rows": [[rep.norm_kind, rep.value]]})


_CRITERIA = {"iii": condition_iii, "iv": condition_iv}


def cmd_criterion(P):
    m = resolve_label(P.get("label", "br:1"))
    name = str(P.get("name", "iv"))
    d, p, q = float(P.get("d", 2.0)), float(P.get("p", 1.2)), float(P.get("q", 1.2))
    sigma = float(P.get("sigma", q))
    grid = ScaleGrid(int(P.get("j_min", -3)), int(P.get("j_max", 3)), int(P.get("steps", 1)))
    xgrid = XGrid(x_max=float(P.get("x_max", 1024.0)))
    refine = bool(P.get("refine", True))
    strict = bool(P.get("strict", True))
    if name in ("iii", "iv"):
        rep = _CRITERIA[name](m, d, p, q, sigma, grid=grid, xgrid=xgrid, refine=refine,
                              strict=strict)
    elif name == "besov":
        rep = besov_condition(m, d, p, q, grid=grid, xgrid=xgrid, refine=refine, strict=strict)
    elif name == "lf":
        rep = lf_norm(m, float(P.get("lf_p", 1.0)), float(P.get("a", 0.0)),
                      float(P.get("b", 0.0)), grid=grid, xgrid=xgrid, refine=refine,
                      strict=strict)
    elif name == "lp2":
        rep = lp2_condition(m, d, p, grid=grid, refine=refine)
    elif name == "a_const":
        rep = a_const(m, d, p, q, sigma, grid=grid, xgrid=xgrid, refine=refine, strict=strict)
    elif name == "b_const":
        eps = P.get("eps")
        rep = b_const(m, None if eps is None else float(eps), p, q, d, grid=grid, xgrid=xgrid,
                      refine=refine, strict=strict)
    else:
        raise InvalidArgumentError(f"unknown criterion {name!r}")
    data = rep.to_dict()
    rows = [[float(t), float(v), float(r)] for t, v, r in zip(rep.scales, rep.values, rep.raw)]
    return make_report("criterion", {"label": m.label, "name": name, "d": d, "p": p, "q": q,
                                     "sigma": sigma, "grid": grid.to_dict(),
                                     "xgrid": xgrid.to_dict(), "refine": refine},
                       data, {"columns": ["t", "value", "raw"], "rows": rows},
                       {name: {"x": np.log2(rep.scales).tolist(), "y": rep.values.tolist()}})


def cmd_kernel(P, out_dir=None):
    m = resolve_label(P.get("label", "phi"))
    a, b = float(P.get("a", 3.0)), float(P.get("b", 3.0))
    n = int(P.get("n", 161))
    r = np.linspace(0.0, float(P.get("r_max", 40.0)), n)
    checks = {}
    for beta in (0, 1):
        for gamma in (0, 1):
            rep = kernest_check(m, a, b, int(P.get("N", 4)), beta, gamma, r, r)
            checks[f"{beta}{gamma}"] = {"empirical_C": rep["empirical_C"],
                                        "worst_point": list(rep["worst_point"])}
    K = kernel_kab(m, a, b, r, r, QuadratureSpec())
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        K.save(Path(out_dir) / "kernel.bin")
    rows = [[k, v["empirical_C"], *v["worst_point"]] for k, v in sorted(checks.items())]
    return make_report("kernel", {"label": m.label, "a": a, "b": b, "n": n,
                                  "r_max": float(r[-1]), "N": int(P.get("N", 4))},
                       {"checks": checks, "symmetry_error": K.symmetry_error() if a == b else None,
                        "quad_error": K.meta["quad_error"]},
                       {"columns": ["beta_gamma", "empirical_C", "r", "s"], "rows": rows})


def cmd_decompose(P):
    m = resolve_label(P.get("label", "one"))
    j, d = int(P.get("j", 0)), float(P.get("d", 2.0))
    f, support, _ = _test_function(P.get("f", "bump"))
    lo = float(P.get("s_min", 1.0 / 32))
    r = np.geomspace(float(P.get("r_min", 1.0 / 64)), float(P.get("r_max", 64.0)),
                     int(P.get("n", 200)))
    D = decompose_hse(m, j, f, d, r, (lo, support[1]))
    rows = ([["H", k, float(np.max(np.abs(v.values)))] for k, v in sorted(D.H.items())]
            + [["S", f"{k[0]}:{k[1]}", float(np.max(np.abs(v.values)))]
               for k, v in sorted(D.S.items())]
            + [["E", k, float(np.max(np.abs(v.values)))] for k, v in sorted(D.E.items())])
    return make_report("decompose", {"label": m.label, "j": j, "d": d, "s_min": lo,
                                     "n": r.size},
                       {"partition_error": D.partition_error(), "pieces": {
                           "H": len(D.H), "S": len(D.S), "E": len(D.E)},
                        "index_ranges": D.index_ranges},
                       {"columns": ["piece", "index", "sup_abs"], "rows": rows})


def cmd_sharpness(P):
    return run_sharpness([int(n) for n in _listify(P.get("N_list", [16, 32, 64, 128, 256]))],
                         float(P.get("d", 2.0)),
                         [float(s) for s in _listify(P.get("sigma_list", [1.0, 2.0]))],
                         float(P.get("c", 0.125)))


def cmd_chirp(P):
    return run_chirp([int(n) for n in _listify(P.get("N_list", [64, 128, 256, 512, 1024]))],
                     [float(q) for q in _listify(P.get("q_list", [1.0, 4.0 / 3.0, 2.0]))])


def cmd_zafran(P, seed):
    S = P.get("S")
    return run_zafran(int(P.get("N", 16)), P.get("R"), float(P.get("p", 1.2)),
                      [float(q) for q in _listify(P.get("q_list", [1.0, 1.2, 1.5, 2.0]))],
                      seed, None if S is None else [int(k) for k in _listify(S)],
                      int(P.get("attempts", 200)))


def cmd_lambda(P, seed):
    kind = str(P.get("set", "lacunary"))
    rows, results = [], {}
    for N in [int(n) for n in _listify(P.get("N_list", [8, 16, 32]))]:
        if kind == "lacunary":
            S = [2 ** k for k in range(int(math.log2(N)))]
            rep = lambda_ratio(S, int(P.get("p_prime", 4)), int(P.get("trials", 100)), seed)
        elif kind == "interval":
            S = list(range(1, N + 1))
            rep = lambda_ratio(S, int(P.get("p_prime", 4)), coeffs=np.full(N, N ** -0.5))
        elif kind == "signs":
            R = int(P.get("R", 4096))
            S = default_frequency_set(N, R, seed)
            fs = find_signs(S, R, seed, int(P.get("attempts", 200)))
            rep = {"ratio": fs["sup"], "threshold": fs["threshold"], "success": fs["success"]}
        else:
            raise InvalidArgumentError(f"unknown set kind {kind!r}")
        results[str(N)] = rep
        rows.append([N, rep["ratio"]])
    return make_report("lambda", {"set": kind, "p_prime": int(P.get("p_prime", 4)),
                                  "trials": int(P.get("trials", 100)), "seed": seed},
                       results, {"columns": ["N", "ratio"], "rows": rows})


def cmd_equivalence(P):
    pqs = P.get("pqs", [[1.2, 1.2, 1.2]])
    if pqs and not isinstance(pqs[0], (list, tuple)):
        pqs = [pqs]
    return run_equivalence(_listify(P.get("labels", ["one", "imagpow:1", "br:0.5"])),
                           [float(d) for d in _listify(P.get("d_list", [2.0]))],
                           [tuple(float(v) for v in t) for t in pqs],
                           tuple(_listify(P.get("conditions", ["iii", "iv"]))),
                           refine=bool(P.get("refine", True)))


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="hankel-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="plain-text key=value file")
        sp.add_argument("-p", "--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config entry (repeatable)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--format", action="append", choices=("csv", "json", "svg"),
                        help="output format (repeatable; default json and csv)")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    cfg = (ExperimentConfig.from_file(args.config, args.command) if args.config
           else ExperimentConfig(args.command))
    for item in args.param:
        if "=" not in item:
            raise InvalidArgumentError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        cfg.params[k.strip()] = parse_value(v.strip())
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None:
        seed = 0
    P = cfg.params
    cmd = args.command
    if cmd == "kernel":
        report = cmd_kernel(P, args.out)
    elif cmd in ("zafran", "lambda"):
        report = globals()[f"cmd_{cmd}"](P, seed)
    else:
        report = globals()[f"cmd_{cmd}"](P)
    report["config"]["seed"] = seed
    formats = args.format or ["json", "csv"]
    paths = emit_report(report, args.out, formats, stem=cmd)
    for path in paths:
        print(path)
    return 0


def main(argv=None):
    try:
        return run(argv)
    except AccuracyFailure as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return 3
    except HankelLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
