"""Command-line frontend: ``rates``, ``sample-verify``, ``simulate`` and ``verify``.

Configuration precedence is command-line flags, then a flat ``key=value``
config file (``--config``), then built-in defaults. The effective
configuration is always written as ``#``-prefixed header lines so that
every output file is self-describing.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 resource guard.
"""

import argparse
import io
import math
import os
import sys

import numpy as np

from . import extractor, qsim, rates, sampling
from .entmath import extended_dary_entropy, relative_weight

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3

DEFAULTS = {
    "d": 4,
    "noise": 0.02,
    "fraction": 0.07,
    "epsilon": 1e-36,
    "beta": 1.0 / 3.0,
    "eps_prime_l2": 4e-12,
    "n_start": 1e3,
    "n_stop": 1e8,
    "points": 60,
    "log": True,
    "n_list": None,
    "trials": 100_000,
    "seed": 0,
    "out": None,
    "workers": os.cpu_count() or 1,
    "raw": False,
    # sample-verify
    "d_list": "2,4,16",
    "sizes": "100,1000",
    "fractions": "0.07,0.25,half",
    "deltas": "0.05,0.1,0.2",
    "zero_q": False,
    # simulate
    "N": 100_000,
    "mode": "auto",
    "source": "honest",
    # verify
    "inject_fault": None,
}

CSV_COLUMNS = ["N", "m", "n", "delta", "ell_ours", "ell_1", "ell_2",
               "rate_ours", "rate_1", "rate_2", "flags"]
RAW_COLUMNS = ["raw_ours", "raw_1", "raw_2"]

SUBCOMMAND_KEYS = {
    "rates": ["d", "noise", "fraction", "epsilon", "beta", "eps_prime_l2", "n_start", "n_stop",
              "points", "log", "n_list", "workers", "raw", "out"],
    "sample-verify": ["d_list", "sizes", "fractions", "deltas", "trials", "seed", "zero_q",
                      "workers", "out"],
    "simulate": ["d", "noise", "fraction", "epsilon", "beta", "N", "mode", "source", "seed", "out"],
    "verify": ["seed", "inject_fault"],
}


class ConfigError(ValueError):
    pass


def fmt(x):
    """12 significant digits, plain text for integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _intlike(text):
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _optional(conv):
    def inner(text):
        if text is None or str(text).strip().lower() in ("", "none"):
            return None
        return conv(text)
    return inner


CONVERTERS = {
    "d": _intlike, "noise": float, "fraction": float, "epsilon": float, "beta": float,
    "eps_prime_l2": float, "n_start": float, "n_stop": float, "points": _intlike, "log": _bool,
    "n_list": _optional(str), "trials": _intlike, "seed": _intlike, "out": _optional(str),
    "workers": _intlike, "raw": _bool, "d_list": str, "sizes": str, "fractions": str,
    "deltas": str, "zero_q": _bool, "N": _intlike, "mode": str, "source": str,
    "inject_fault": _optional(str),
}


def read_config_file(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {lineno} is not key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in CONVERTERS:
            raise ConfigError(f"config: unknown key {key!r} on line {lineno}")
        values[key] = value
    return values


def resolve_config(command, args):
    """Merge defaults, config file and explicit flags; convert and validate."""
    merged = {key: DEFAULTS[key] for key in SUBCOMMAND_KEYS[command]}
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            if key in merged:
                merged[key] = value
    for key in merged:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    cfg = {}
    for key, value in merged.items():
        try:
            cfg[key] = CONVERTERS[key](value) if value is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--{key.replace('_', '-')}: {exc}") from exc
    cfg["command"] = command
    _validate(cfg)
    return cfg


def _require(cond, key, message):
    if not cond:
        raise ConfigError(f"--{key.replace('_', '-')}: {message}")


def _validate(cfg):
    if "d" in cfg:
        _require(2 <= cfg["d"] <= 2**20, "d", "must be an integer in [2, 2^20]")
    if "noise" in cfg:
        _require(0.0 <= cfg["noise"] <= 1.0, "noise", "must lie in [0, 1]")
    if "fraction" in cfg:
        _require(0.0 < cfg["fraction"] < 0.5, "fraction", "must lie in (0, 1/2)")
    if "epsilon" in cfg:
        _require(0.0 < cfg["epsilon"] < 1.0, "epsilon", "must lie in (0, 1)")
    if "beta" in cfg:
        _require(0.0 < cfg["beta"] < 0.5, "beta", "must lie in (0, 1/2)")
    if "eps_prime_l2" in cfg:
        _require(0.0 < cfg["eps_prime_l2"] < 1.0, "eps_prime_l2", "must lie in (0, 1)")
    if "points" in cfg:
        _require(cfg["points"] >= 1, "points", "must be at least 1")
        _require(cfg["n_start"] >= 30, "n_start", "must be at least 30")
        _require(cfg["n_stop"] >= cfg["n_start"], "n_stop", "must not be below --n-start")
    if "workers" in cfg:
        _require(cfg["workers"] >= 1, "workers", "must be at least 1")
    if cfg["command"] == "sample-verify":
        _require(cfg["trials"] >= 10_000, "trials", "sample-verify needs at least 1e4 trials")
    if cfg["command"] == "simulate":
        _require(cfg["mode"] in ("auto", "statevector", "fast"), "mode",
                 "must be auto, statevector or fast")
        _require(cfg["source"] in ("honest", "random", "product-z"), "source",
                 "must be honest, random or product-z")
        _require(cfg["N"] >= 3, "N", "must be at least 3")
    if cfg["command"] == "verify" and cfg["inject_fault"] is not None:
        _require(cfg["inject_fault"] in ("fourier",), "inject_fault", "known faults: fourier")


def header_lines(cfg, extra=()):
    lines = [f"# hdeur {cfg['command']}"]
    for key in sorted(k for k in cfg if k != "command"):
        lines.append(f"# {key}={fmt(cfg[key]) if cfg[key] is not None else 'none'}")
    lines.extend(f"# {line}" for line in extra)
    return lines


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _emit(cfg, lines):
    fh, close = _open_out(cfg.get("out"))
    try:
        fh.write("\n".join(lines) + "\n")
    finally:
        if close:
            fh.close()


def n_grid(cfg):
    if cfg["n_list"]:
        try:
            Ns = [_intlike(v) for v in cfg["n_list"].split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"--n-list: {exc}") from exc
        _require(Ns and min(Ns) >= 30, "n_list", "every N must be at least 30")
        return Ns
    start, stop, points = cfg["n_start"], cfg["n_stop"], cfg["points"]
    if points == 1:
        return [int(round(start))]
    if cfg["log"]:
        return rates.log_spaced_N(start, stop, points)
    return sorted(set(int(round(v)) for v in np.linspace(start, stop, points)))


def rates_table(cfg):
    """CSV lines (header included) for the rate sweep described by ``cfg``."""
    template = rates.ProtocolParams(cfg["d"], 1000, cfg["fraction"], cfg["epsilon"], cfg["beta"],
                                    cfg["eps_prime_l2"])
    points = rates.sweep(template, cfg["noise"], n_grid(cfg), workers=cfg["workers"])
    consts = rates.security_constants(cfg["epsilon"], cfg["beta"])
    extra = [
        "log_base=2 (all key lengths in bits)",
        *(f"{k}={fmt(v)}" for k, v in consts.items()),
        "eps_prime_l2 is a chosen default; the l2 baseline does not fix it",
        "d0=noise (optimistic for the l2 baseline)",
        "negative key lengths clamped to 0",
    ]
    cols = CSV_COLUMNS[:-1] + (RAW_COLUMNS if cfg["raw"] else []) + CSV_COLUMNS[-1:]
    lines = header_lines(cfg, extra) + [",".join(cols)]
    for pt in points:
        row = [pt.N, pt.m, pt.n, pt.delta, pt.ell_ours, pt.ell_1, pt.ell_2, *pt.rates]
        if cfg["raw"]:
            row += [pt.raw_ours, pt.raw_1, pt.raw_2]
        flags = list(pt.flags) if pt.valid else ["invalid"] + list(pt.flags)
        row.append(";".join(f.replace(",", ";") for f in flags))
        lines.append(",".join(fmt(v) for v in row))
    return lines


def cmd_rates(cfg):
    _emit(cfg, rates_table(cfg))
    return EXIT_OK


def _parse_list(text, key, conv=float):
    try:
        return [conv(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{key.replace('_', '-')}: {exc}") from exc


def _grid_m(N, frac_token):
    if frac_token.strip() == "half":
        return math.floor(0.5 * (1 - 1 / N) * N)
    f = float(frac_token)
    return math.floor(f * N)


def sample_verify_rows(cfg):
    """Worst-case Monte Carlo error vs. the analytic bound on a (d, N, m, delta) grid."""
    ds = _parse_list(cfg["d_list"], "d_list", _intlike)
    sizes = _parse_list(cfg["sizes"], "sizes", _intlike)
    deltas = _parse_list(cfg["deltas"], "deltas")
    tokens = [t for t in cfg["fractions"].split(",") if t.strip()]
    for t in tokens:
        if t.strip() != "half":
            _parse_list(t, "fractions")
    _require(all(d >= 2 for d in ds), "d_list", "every d must be at least 2")
    _require(all(x >= 0 for x in deltas), "deltas", "must be non-negative")
    gen = np.random.default_rng(cfg["seed"])
    rows = []
    for d in ds:
        for N in sizes:
            for tok in tokens:
                m = _grid_m(N, tok)
                _require(1 <= m < N - m, "fractions", f"m={m} must satisfy 1 <= m < n at N={N}")
                n = N - m
                for delta in deltas:
                    if cfg["zero_q"]:
                        est = sampling.estimate_error_probability(
                            np.zeros(N, dtype=int), delta, m, cfg["trials"], gen,
                            method="monte_carlo", workers=cfg["workers"])
                        weight, p, half, se = 0, est.estimate, est.ci_halfwidth, est.stderr
                    else:
                        res = sampling.worst_case_error_estimate(
                            d, m, n, delta, cfg["trials"], gen, workers=cfg["workers"])
                        weight, p, half, se = res.worst_weight, res.estimate, res.ci_halfwidth, res.stderr
                    bound = sampling.lemma2_bound(delta, m, n) if delta > 0 else 1.0
                    rows.append({"d": d, "N": N, "m": m, "n": n, "delta": delta,
                                 "worst_weight": weight, "estimate": p, "ci99_halfwidth": half,
                                 "stderr": se, "tail_bound": bound,
                                 "pass": p <= bound + 5 * se})
    return rows


SAMPLE_COLUMNS = ["d", "N", "m", "n", "delta", "worst_weight", "estimate", "ci99_halfwidth",
                  "stderr", "tail_bound", "pass"]


def cmd_sample_verify(cfg):
    rows = sample_verify_rows(cfg)
    lines = header_lines(cfg, ["pass = estimate <= tail_bound + 5 stderr"])
    lines.append(",".join(SAMPLE_COLUMNS))
    lines += [",".join(fmt(r[c]) for c in SAMPLE_COLUMNS) for r in rows]
    _emit(cfg, lines)
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def simulate(cfg):
    """Run source -> sampling test -> Z readout -> key length -> extraction. Returns a report dict."""
    d, N, x = cfg["d"], cfg["N"], cfg["noise"]
    try:
        p = rates.ProtocolParams(d, N, cfg["fraction"], cfg["epsilon"], cfg["beta"])
    except ValueError as exc:
        raise ConfigError(f"--N: {exc}") from exc
    m, n = p.m, p.n
    gen = np.random.default_rng(cfg["seed"])
    fits = d**N <= qsim.MAX_AMPLITUDES
    mode = cfg["mode"]
    if mode == "auto":
        mode = "statevector" if fits else "fast"
    if mode == "statevector":
        if not fits:
            raise qsim.ResourceError(f"{d}^{N} amplitudes exceed the 2^24 statevector limit")
        if cfg["source"] == "honest":
            state = qsim.honest_state(d, N)
        elif cfg["source"] == "random":
            state = qsim.random_state(d, N, gen)
        else:
            state = qsim.product_state([np.eye(d)[0]] * N)
        out = qsim.run_experiment(state, m, rng=gen)
        t, q = out.t, out.q
        dist = out.distribution(qsim.computational_basis(d))
        dist = dist / dist.sum()
        flat = gen.choice(dist.size, p=dist)
        r = np.array(np.unravel_index(flat, (d,) * n)).reshape(-1)
    else:
        # site-wise honest source through a depolarizing channel: each test
        # site fails the x0 projection with probability x, Z readout uniform
        t = sampling.sample_subset(N, m, gen)
        q = (gen.random(m) < x).astype(np.int8)
        r = gen.integers(0, d, size=n)
    w = relative_weight(q)
    ell = int(math.floor(rates.ell_ours(p, w)))
    bits, seed = extractor.extract(r, ell, gen, d=d)
    log2d = math.log2(d)
    h_lb = n * log2d - n * extended_dary_entropy(w + p.delta, d) * log2d
    eps_smooth, eps_fail = p.sampling.epsilons
    report = {
        "mode": mode, "N": N, "m": m, "n": n,
        "t_head": " ".join(str(i) for i in t.indices[:20]) + (" ..." if m > 20 else ""),
        "w_q": w, "delta": p.delta, "h_min_lower_bound": h_lb, "ell": ell,
        "rate": ell / N, "eps_smooth": eps_smooth, "eps_fail": eps_fail,
        "eps_pa": sampling.pa_epsilon(cfg["epsilon"], cfg["beta"]),
        "pa_distance_bound": extractor.pa_distance_bound(h_lb, ell, eps_smooth) if ell else 0.0,
        "extracted_bits": int(bits.size),
        "entropy_label": "non-smoothed lower bound",
    }
    return report, bits, seed


def cmd_simulate(cfg):
    report, bits, seed = simulate(cfg)
    lines = header_lines(cfg) + [f"{k}={fmt(v)}" for k, v in report.items()]
    if cfg.get("out"):
        bits_path, seed_path = extractor.write_output(cfg["out"] + ".bin", bits, seed)
        lines += [f"bits_file={bits_path}", f"seed_file={seed_path}"]
    cfg_stdout = dict(cfg, out=cfg["out"] + ".report" if cfg.get("out") else None)
    _emit(cfg_stdout, lines)
    return EXIT_OK


def cmd_verify(cfg):
    from .invariants import run_invariants

    faults = [cfg["inject_fault"]] if cfg["inject_fault"] else []
    results = run_invariants(cfg["seed"], faults)
    buf = io.StringIO()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        buf.write(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}\n")
    failed = [name for name, ok, _ in results if not ok]
    buf.write(f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    if failed:
        buf.write(f"FAILED: {failed[0]}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"rates": cmd_rates, "sample-verify": cmd_sample_verify, "simulate": cmd_simulate,
            "verify": cmd_verify}


def build_parser():
    parser = argparse.ArgumentParser(prog="hdeur", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, keys):
        p.add_argument("--config", help="flat key=value file; flags override it")
        flags = {
            "d": dict(type=str, help="qudit dimension"),
            "noise": dict(type=str, help="depolarizing noise x"),
            "fraction": dict(type=str, help="fraction of signals used for sampling"),
            "epsilon": dict(type=str), "beta": dict(type=str),
            "eps_prime_l2": dict(type=str, help="security parameter inside delta' of the l2 baseline"),
            "n_start": dict(type=str), "n_stop": dict(type=str), "points": dict(type=str),
            "log": dict(action=argparse.BooleanOptionalAction, default=None,
                        help="log-spaced N grid (default on)"),
            "n_list": dict(type=str, help="comma-separated N values; overrides the range"),
            "trials": dict(type=str), "seed": dict(type=str),
            "out": dict(type=str, help="output path (default stdout)"),
            "workers": dict(type=str, help="worker threads"),
            "raw": dict(action="store_true", default=None, help="append unclamped key lengths"),
            "d_list": dict(type=str), "sizes": dict(type=str, help="comma-separated N values"),
            "fractions": dict(type=str, help="comma-separated m/N values; 'half' = (1-1/N)/2"),
            "deltas": dict(type=str),
            "zero_q": dict(action="store_true", default=None, help="use the all-zero string"),
            "N": dict(type=str, help="total number of signals"),
            "mode": dict(type=str, help="auto, statevector or fast"),
            "source": dict(type=str, help="honest, random or product-z (statevector mode)"),
            "inject_fault": dict(type=str, help="negative control, e.g. 'fourier'"),
        }
        for key in keys:
            opt = "--N" if key == "N" else "--" + key.replace("_", "-")
            p.add_argument(opt, dest=key, **flags[key])

    for name, keys in SUBCOMMAND_KEYS.items():
        common(sub.add_parser(name, allow_abbrev=False), keys)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except qsim.ResourceError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
