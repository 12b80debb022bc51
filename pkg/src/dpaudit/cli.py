"""Command-line interface: ``dpaudit audit | sample | kstest``.

Exit codes: 0 success, 2 usage/configuration error, 3 a mechanism marked
with ``--expect-dp`` violated its budget, 4 a KS test failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from . import _backend
from .audit import AuditConfig, AuditResult, TieBreak, run_audit
from .errors import ConfigurationError
from .mechanisms import MECHANISM_NAMES, MechanismKind
from .rng import UniformStream
from .samplers import (
    LaplaceParams,
    NanPolicy,
    SamplerKind,
    dptext_raw_array,
    sample_array,
)
from .stats import histogram, ks_test

log = logging.getLogger("dpaudit")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATION = 3
EXIT_KS_FAILED = 4

DEFAULT_DIMS = (1, 2, 4, 8, 16, 32, 64, 128)
DEFAULT_EPSILONS = (0.01, 0.1, 1.0, 10.0)

CSV_FIELDS = (
    "mechanism",
    "nan_policy",
    "delta_claimed",
    "n",
    "epsilon",
    "trials",
    "repeats",
    "seed",
    "p_x",
    "p_xprime",
    "eps_forward",
    "eps_backward",
    "eps_emp_mean",
    "eps_emp_std",
    "violated",
)


def _fmt(x: float) -> str:
    # repr gives the shortest round-tripping form, and "inf"/"-inf"/"nan".
    return repr(float(x))


def _json_float(x: float):
    return x if math.isfinite(x) else _fmt(x)


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("dimensions must be positive integers")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError("epsilons must be positive and finite")
    return vals


def _name_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    unknown = [n for n in names if n not in MECHANISM_NAMES]
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"unknown mechanism(s) {unknown}; choose from {', '.join(MECHANISM_NAMES)}"
        )
    return names


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("DP_AUDIT_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ConfigurationError(f"DP_AUDIT_THREADS must be an integer, got {env!r}")
        if v < 1:
            raise ConfigurationError("DP_AUDIT_THREADS must be >= 1")
        return v
    return 1


@contextmanager
def _open_output(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# --------------------------------------------------------------------------
# audit


def result_record(result: AuditResult) -> dict[str, str]:
    """One CSV row (all values already formatted as strings)."""
    cfg = result.config
    m = cfg.mechanism
    return {
        "mechanism": m.name,
        "nan_policy": m.policy.value if m.policy is not None else "",
        "delta_claimed": _fmt(m.delta_claimed) if m.delta_claimed is not None else "",
        "n": str(cfg.n),
        "epsilon": _fmt(cfg.epsilon),
        "trials": str(cfg.trials),
        "repeats": str(cfg.repeats),
        "seed": str(cfg.master_seed),
        "p_x": _fmt(result.p_x),
        "p_xprime": _fmt(result.p_xprime),
        "eps_forward": _fmt(result.eps_forward),
        "eps_backward": _fmt(result.eps_backward),
        "eps_emp_mean": _fmt(result.eps_emp_mean),
        "eps_emp_std": _fmt(result.eps_emp_std),
        "violated": "true" if result.violated else "false",
    }


def result_json(result: AuditResult) -> dict:
    cfg = result.config
    m = cfg.mechanism
    return {
        "mechanism": m.name,
        "nan_policy": m.policy.value if m.policy is not None else None,
        "delta_claimed": m.delta_claimed,
        "n": cfg.n,
        "epsilon": cfg.epsilon,
        "trials": cfg.trials,
        "repeats": cfg.repeats,
        "seed": cfg.master_seed,
        "p_x": result.p_x,
        "p_xprime": result.p_xprime,
        "eps_forward": _json_float(result.eps_forward),
        "eps_backward": _json_float(result.eps_backward),
        "eps_emp_mean": _json_float(result.eps_emp_mean),
        "eps_emp_std": _json_float(result.eps_emp_std),
        "violated": result.violated,
        "per_repeat_eps": [_json_float(e) for e in result.per_repeat_eps],
    }


def write_csv(results, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(result_record(r))


def write_json(results, fh) -> None:
    json.dump([result_json(r) for r in results], fh, indent=2)
    fh.write("\n")


def cmd_audit(args) -> int:
    threads = _threads(args.threads)
    backend = _backend.resolve(args.backend)
    mechanisms = [MechanismKind.from_name(n, args.delta_claimed) for n in args.mechanism]
    if args.expect_dp is None:
        expected = set()
    elif args.expect_dp == "*":
        expected = set(args.mechanism)
    else:
        expected = set(_name_list(args.expect_dp))
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.output.endswith(".json") else "csv"

    results = []
    for mech in mechanisms:
        for n in args.n:
            for eps in args.epsilon:
                cfg = AuditConfig(
                    n=n,
                    epsilon=eps,
                    trials=args.trials,
                    repeats=args.repeats,
                    master_seed=args.seed,
                    mechanism=mech,
                    tie_break=TieBreak(args.tie_break),
                    margin=args.margin,
                )
                res = run_audit(cfg, backend=backend, threads=threads)
                log.info(
                    "%s n=%d eps=%g: eps_emp_mean=%s violated=%s",
                    mech.name, n, eps, _fmt(res.eps_emp_mean), res.violated,
                )
                results.append(res)

    with _open_output(args.output) as fh:
        (write_json if fmt == "json" else write_csv)(results, fh)

    bad = [r for r in results if r.violated and r.config.mechanism.name in expected]
    for r in bad:
        print(
            f"violation: {r.config.mechanism.name} n={r.config.n} eps={r.config.epsilon:g} "
            f"eps_emp_mean={_fmt(r.eps_emp_mean)}",
            file=sys.stderr,
        )
    return EXIT_VIOLATION if bad else EXIT_OK


# --------------------------------------------------------------------------
# sample / kstest


def _sampler_setup(args, allow_raw: bool):
    kind = SamplerKind(args.kind)
    policy = args.policy
    if kind is SamplerKind.DPTEXT_BROKEN:
        policy = policy or NanPolicy.RESAMPLE.value
        if policy == "raw" and not allow_raw:
            raise ConfigurationError("raw output is only available for `sample`")
    elif policy is not None:
        raise ConfigurationError(f"{kind.value} does not take --policy")
    params = LaplaceParams(args.mu, args.b)
    stream = UniformStream(args.seed, args.stream)
    return kind, policy, params, stream


def _draw(kind, policy, params, stream, count):
    """Returns (values, invalid_count)."""
    if policy == "raw":
        values = dptext_raw_array(params, stream, count)
        return values, int(np.isnan(values).sum())
    batch = sample_array(
        kind, params, stream, count, NanPolicy(policy) if policy is not None else None
    )
    return batch.values, batch.invalid_count


def cmd_sample(args) -> int:
    if args.count < 1:
        raise ConfigurationError("--count must be >= 1")
    kind, policy, params, stream = _sampler_setup(args, allow_raw=True)
    values, invalid = _draw(kind, policy, params, stream, args.count)

    buf = io.StringIO()
    meta = [
        ("kind", kind.value),
        ("policy", policy or ""),
        ("mu", _fmt(params.mu)),
        ("b", _fmt(params.b)),
        ("count", str(args.count)),
        ("invalid_count", str(invalid)),
        ("seed", str(args.seed)),
        ("stream", str(args.stream)),
    ]
    if args.hist is not None:
        if kind is SamplerKind.DPTEXT_BROKEN:
            lo_default, hi_default = params.mu - params.b, params.mu + 12 * params.b
        else:
            lo_default, hi_default = params.mu - 8 * params.b, params.mu + 8 * params.b
        lo = args.lo if args.lo is not None else lo_default
        hi = args.hi if args.hi is not None else hi_default
        h = histogram(values, args.hist, lo, hi)
        meta += [
            ("bins", str(args.hist)),
            ("underflow", str(h.underflow)),
            ("overflow", str(h.overflow)),
            ("nan_in_output", str(h.invalid_count)),
        ]
        for key, val in meta:
            buf.write(f"# {key}={val}\n")
        buf.write("bin_left\tbin_right\tcount\n")
        for left, right, c in zip(h.bin_edges[:-1], h.bin_edges[1:], h.counts):
            buf.write(f"{_fmt(left)}\t{_fmt(right)}\t{int(c)}\n")
    else:
        for key, val in meta:
            buf.write(f"# {key}={val}\n")
        buf.write("value\n")
        buf.writelines(f"{_fmt(v)}\n" for v in values)

    with _open_output(args.output) as fh:
        fh.write(buf.getvalue())
    return EXIT_OK


def cmd_kstest(args) -> int:
    kind, policy, params, stream = _sampler_setup(args, allow_raw=False)
    values, invalid = _draw(kind, policy, params, stream, args.count)
    report = ks_test(values, params, args.alpha)
    out = {
        "kind": kind.value,
        "policy": policy,
        "mu": params.mu,
        "b": params.b,
        "seed": args.seed,
        "invalid_count": invalid,
        **report.to_dict(),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK if report.passed else EXIT_KS_FAILED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpaudit",
        description="Laplace samplers, DP mechanisms and an empirical DP-violation check.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="run the sanity check over a mechanism x n x epsilon grid")
    a.add_argument("--mechanism", type=_name_list, default=["laplace"],
                   help=f"comma-separated list from: {', '.join(MECHANISM_NAMES)}")
    a.add_argument("--n", type=_int_list, default=list(DEFAULT_DIMS),
                   help="comma-separated dimensions (default 1,2,4,...,128)")
    a.add_argument("--epsilon", type=_float_list, default=list(DEFAULT_EPSILONS),
                   help="comma-separated budgets (default 0.01,0.1,1,10)")
    a.add_argument("--trials", type=_positive_int, default=1_000_000, help="runs per dataset")
    a.add_argument("--repeats", type=_positive_int, default=1)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--delta-claimed", type=float, default=1.0,
                   help="claimed sensitivity for wrong-sensitivity (default 1)")
    a.add_argument("--tie-break", choices=[t.value for t in TieBreak], default="zeros")
    a.add_argument("--margin", type=float, default=None,
                   help="violation margin (default 3*std across repeats, 0.01 if repeats=1)")
    a.add_argument("--expect-dp", nargs="?", const="*", default=None, metavar="NAMES",
                   help="exit 3 if these mechanisms (default: all listed) violate the budget")
    a.add_argument("--output", default="-", help="output path, '-' for stdout")
    a.add_argument("--format", choices=["csv", "json"], default=None)
    a.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (falls back to DP_AUDIT_THREADS, then 1)")
    a.add_argument("--backend", choices=list(_backend.BACKENDS), default=None)
    a.set_defaults(func=cmd_audit)

    def sampler_args(p, count_default):
        p.add_argument("--kind", required=True, choices=[k.value for k in SamplerKind])
        p.add_argument("--mu", type=float, default=0.0)
        p.add_argument("--b", type=float, default=1.0)
        p.add_argument("--count", type=int, default=count_default)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stream", type=int, default=0)

    s = sub.add_parser("sample", help="emit sampler draws or a histogram TSV")
    sampler_args(s, 100_000)
    s.add_argument("--policy", choices=[p.value for p in NanPolicy] + ["raw"], default=None,
                   help="dptext-broken only (default resample; 'raw' keeps NaNs)")
    s.add_argument("--hist", type=_positive_int, default=None, metavar="BINS")
    s.add_argument("--lo", type=float, default=None)
    s.add_argument("--hi", type=float, default=None)
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_sample)

    k = sub.add_parser("kstest", help="one-sample KS test of a sampler against Lap(mu, b)")
    sampler_args(k, 100_000)
    k.add_argument("--policy", choices=[p.value for p in NanPolicy], default=None)
    k.add_argument("--alpha", type=float, default=0.01)
    k.set_defaults(func=cmd_kstest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ConfigurationError, ValueError) as exc:
        print(f"dpaudit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
