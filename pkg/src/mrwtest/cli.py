"""Command-line front end.

Every subcommand writes CSV files plus a ``<subcommand>.manifest.json`` into
the output directory. A manifest can be passed back with ``--config`` to
reproduce a run. Option precedence is: command-line flags, then the config
file, then built-in defaults.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
import argparse
import contextlib
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .calibrate import calibrate as calibrate_returns, log_vol_autocov
from .errors import DataError, EstimationError, InvalidParamsError, MrwError
from .mctest import TestConfig, exceedance_histogram, run_test
from .scaling import empirical_zeta, ghe_many, theoretical_zeta
from .synth import MrwParams, make_variant, simulate_fbm, simulate_mrw
from .timeseries import log_returns, read_price_csv

log = logging.getLogger("mrwtest")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "MRWTEST_OUTPUT_DIR"

_MODEL = {"lam": 0.2, "T": 1250.0, "sigma": 1.0, "dt": 1.0, "variant": "lognormal",
          "nu": 4.0, "k": 1.0, "gamma_theta": 1.0}
_TAU = {"tau_max_min": 10, "tau_max_max": 30}
_TEST = {**_TAU, "variant": "lognormal", "nu": 4.0, "k": 1.0, "gamma_theta": 1.0,
         "window": 1250, "shift": 100, "sims": 1000, "sim_length": 1250,
         "seed": 0, "theta": 415.0, "fit_lo": 1, "fit_hi": 100, "workers": 1}

DEFAULTS = {
    "simulate": {**_MODEL, "n": 1250, "seed": 0, "ensemble": 1, "per_seed_files": False},
    "fbm": {"hurst": 0.75, "n": 1250, "seed": 0, "sigma": 1.0},
    "ghe": {**_TAU, "input": None, "q": [1.0, 2.0, 3.0], "weighted": False, "theta": 415.0},
    "zeta": {**_TAU, "input": None, "q_grid": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "lam": None},
    "calibrate": {"input": None, "fit_lo": 1, "fit_hi": 100, "dump_curve": False},
    "test": {**_TEST, "input": None},
    "batch-test": {**_TEST, "input_dir": None, "bin_width": 5.0},
}


class UsageError(MrwError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model(p):
    p.add_argument("--lambda", dest="lam", type=float, help="intermittency coefficient (default 0.2)")
    p.add_argument("--T", dest="T", type=float, help="integral scale in days (default 1250)")
    p.add_argument("--sigma", type=float, help="residual scale per sqrt(day) (default 1)")
    p.add_argument("--dt", type=float, help="increment scale in days (default 1)")


def _add_variant(p):
    p.add_argument("--variant", choices=["lognormal", "student-t", "log-gamma"],
                   help="null model variant (default lognormal)")
    p.add_argument("--nu", type=float, help="Student-t degrees of freedom (default 4)")
    p.add_argument("--k", type=float, help="log-gamma shape (default 1)")
    p.add_argument("--gamma-theta", dest="gamma_theta", type=float,
                   help="log-gamma scale, relative to the Gaussian log-vol std (default 1)")


def _add_tau(p):
    p.add_argument("--tau-max-min", type=int, help="smallest tau_max of the fit range (default 10)")
    p.add_argument("--tau-max-max", type=int, help="largest tau_max of the fit range (default 30)")


def _add_test(p):
    _add_variant(p)
    _add_tau(p)
    p.add_argument("--window", type=int, help="rolling window length in days (default 1250)")
    p.add_argument("--shift", type=int, help="window shift in days (default 100)")
    p.add_argument("--sims", type=int, help="number of null simulations (default 1000)")
    p.add_argument("--sim-length", type=int, help="length of each simulated path (default 1250)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--theta", type=float, help="wGHE damping time in days (default 415)")
    p.add_argument("--fit-lo", type=int, help="first lag of the calibration fit (default 1)")
    p.add_argument("--fit-hi", type=int, help="last lag of the calibration fit (default 100)")
    p.add_argument("--workers", type=int, help="worker processes for the null ensemble (default 1)")


def build_parser():
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file or manifest of a previous run")
    common.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_ENV} or .)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog="mrwtest", description=__doc__.split("\n\n")[0],
                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=f"mrwtest {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate MRW paths",
                       argument_default=argparse.SUPPRESS)
    _add_model(p)
    _add_variant(p)
    p.add_argument("--n", type=int, help="path length (default 1250)")
    p.add_argument("--seed", type=int, help="seed (default 0)")
    p.add_argument("--ensemble", type=int, help="number of paths, seeds seed..seed+N-1 (default 1)")
    p.add_argument("--per-seed-files", action="store_true",
                   help="write one file per seed instead of one long-format file")

    p = sub.add_parser("fbm", parents=[common], help="simulate fractional Brownian motion",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--hurst", type=float, help="Hurst exponent in (0, 1) (default 0.75)")
    p.add_argument("--n", type=int, help="path length (default 1250)")
    p.add_argument("--seed", type=int, help="seed (default 0)")
    p.add_argument("--sigma", type=float, help="increment standard deviation (default 1)")

    p = sub.add_parser("ghe", parents=[common], help="generalised Hurst exponents of a price CSV",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("input", nargs="?", help="price CSV")
    p.add_argument("--q", type=float, nargs="+", help="moment orders (default 1 2 3)")
    _add_tau(p)
    p.add_argument("--weighted", action="store_true", help="use the weighted estimator")
    p.add_argument("--theta", type=float, help="damping time in days (default 415)")

    p = sub.add_parser("zeta", parents=[common], help="empirical scaling function of a price CSV",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("input", nargs="?", help="price CSV")
    p.add_argument("--q-grid", type=float, nargs="+", help="moment orders (default 0.5 .. 3 step 0.5)")
    _add_tau(p)
    p.add_argument("--lambda", dest="lam", type=float,
                   help="add the log-normal MRW parabola for this intermittency")

    p = sub.add_parser("calibrate", parents=[common], help="estimate MRW parameters from a price CSV",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("input", nargs="?", help="price CSV")
    p.add_argument("--fit-lo", type=int, help="first lag of the fit (default 1)")
    p.add_argument("--fit-hi", type=int, help="last lag of the fit (default 100)")
    p.add_argument("--dump-curve", action="store_true", help="also write the C(h) curve")

    p = sub.add_parser("test", parents=[common], help="exceedance test on one price CSV",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("input", nargs="?", help="price CSV")
    _add_test(p)

    p = sub.add_parser("batch-test", parents=[common], help="exceedance test on a directory of price CSVs",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("input_dir", nargs="?", help="directory of price CSVs")
    _add_test(p)
    p.add_argument("--bin-width", type=float, help="histogram bin width in percent (default 5)")
    return parser


def _load_config(path, command):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    if "config" in data and "subcommand" in data:
        if data["subcommand"] != command:
            raise UsageError(f"manifest {path} is for '{data['subcommand']}', not '{command}'")
        data = data["config"]
    unknown = set(data) - set(DEFAULTS[command])
    if unknown:
        raise UsageError(f"unknown keys in {path} for '{command}': {sorted(unknown)}")
    return data


def resolve_config(command, ns):
    """Merge defaults, config file and flags (later wins)."""
    cfg = dict(DEFAULTS[command])
    if "config" in ns:
        cfg.update(_load_config(ns.config, command))
    cfg.update({k: v for k, v in vars(ns).items()
                if k in DEFAULTS[command]})
    return cfg


def _validate(command, cfg):
    def positive(*keys):
        for key in keys:
            if cfg.get(key) is not None and not cfg[key] > 0:
                raise UsageError(f"--{key.replace('_', '-')} must be positive, got {cfg[key]}")

    if command in ("ghe", "zeta", "calibrate", "test") and not cfg.get("input"):
        raise UsageError(f"{command}: an input price CSV is required")
    if command == "batch-test" and not cfg.get("input_dir"):
        raise UsageError("batch-test: an input directory is required")
    positive("n", "ensemble", "window", "shift", "sims", "sim_length", "theta", "workers",
             "bin_width", "sigma", "dt", "T")
    if "tau_max_min" in cfg and not 2 <= cfg["tau_max_min"] <= cfg["tau_max_max"]:
        raise UsageError("need 2 <= --tau-max-min <= --tau-max-max")
    if "fit_lo" in cfg and not 1 <= cfg["fit_lo"] < cfg["fit_hi"]:
        raise UsageError("need 1 <= --fit-lo < --fit-hi")
    if command in ("test", "batch-test"):
        if cfg["sims"] < 100:
            raise UsageError("--sims must be >= 100")
        if cfg["window"] < 250 or cfg["sim_length"] < 250:
            raise UsageError("--window and --sim-length must be >= 250")


# --- output helpers -------------------------------------------------------

def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows([_fmt(x) for x in row] for row in rows)
    write_atomic(path, buf.getvalue())
    return Path(path)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command, cfg, outputs, inputs=()):
    manifest = {
        "subcommand": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "versions": {
            "mrwtest": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": kernels.backend(),
        },
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(Path(o).name for o in outputs),
    }
    path = Path(out_dir) / f"{command}.manifest.json"
    write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# --- subcommands ----------------------------------------------------------

def _params(cfg):
    variant = make_variant(cfg["variant"], cfg["nu"], cfg["k"], cfg["gamma_theta"])
    return MrwParams(cfg["lam"], cfg["T"], cfg["sigma"], cfg["dt"], variant)


def _test_config(cfg):
    return TestConfig(
        window=cfg["window"], shift=cfg["shift"], n_sims=cfg["sims"], sim_length=cfg["sim_length"],
        theta_days=cfg["theta"], tau_max_range=(cfg["tau_max_min"], cfg["tau_max_max"]),
        fit_range=(cfg["fit_lo"], cfg["fit_hi"]), seed=cfg["seed"], workers=cfg["workers"],
    )


def _tau_range(cfg):
    return range(cfg["tau_max_min"], cfg["tau_max_max"] + 1)


def cmd_simulate(cfg, out):
    params = _params(cfg)
    seeds = range(cfg["seed"], cfg["seed"] + cfg["ensemble"])
    if cfg["ensemble"] == 1:
        path = simulate_mrw(params, cfg["n"], cfg["seed"])
        rows = zip(range(cfg["n"]), path.increments, path.cumulative)
        return [write_csv(out / "simulate.csv", ["index", "increment", "cumulative"], rows)]
    if cfg["per_seed_files"]:
        outputs = []
        for s in seeds:
            path = simulate_mrw(params, cfg["n"], s)
            rows = zip(range(cfg["n"]), path.increments, path.cumulative)
            outputs.append(write_csv(out / f"simulate_seed{s}.csv", ["index", "increment", "cumulative"], rows))
        return outputs
    rows = []
    for s in seeds:
        path = simulate_mrw(params, cfg["n"], s)
        rows.extend(zip([s] * cfg["n"], range(cfg["n"]), path.increments, path.cumulative))
    return [write_csv(out / "simulate.csv", ["seed", "index", "increment", "cumulative"], rows)]


def cmd_fbm(cfg, out):
    path = simulate_fbm(cfg["hurst"], cfg["n"], cfg["seed"], cfg["sigma"])
    rows = zip(range(cfg["n"]), path.increments, path.cumulative)
    return [write_csv(out / "fbm.csv", ["index", "increment", "cumulative"], rows)]


def _returns(cfg):
    return log_returns(read_price_csv(cfg["input"]))


def cmd_ghe(cfg, out):
    est = ghe_many(_returns(cfg), cfg["q"], _tau_range(cfg), cfg["weighted"], cfg["theta"])
    return [write_csv(out / "ghe.csv", ["q", "h", "h_std"], [(e.q, e.h, e.h_std) for e in est])]


def cmd_zeta(cfg, out):
    sf = empirical_zeta(_returns(cfg), cfg["q_grid"], _tau_range(cfg), cfg["lam"])
    if cfg["lam"] is None:
        rows = zip(sf.qs, sf.zetas, sf.errors)
        return [write_csv(out / "zeta.csv", ["q", "zeta", "err"], rows)]
    theory = [theoretical_zeta(q, cfg["lam"]) for q in sf.qs]
    rows = zip(sf.qs, sf.zetas, sf.errors, theory)
    return [write_csv(out / "zeta.csv", ["q", "zeta", "err", "zeta_mrw"], rows)]


def cmd_calibrate(cfg, out):
    returns = _returns(cfg)
    res = calibrate_returns(returns, (cfg["fit_lo"], cfg["fit_hi"]))
    p = res.params
    outputs = [write_csv(out / "calibrate.csv", ["lambda", "T", "sigma", "fit_r2", "fit_lo", "fit_hi"],
                         [(p.intermittency, p.integral_scale, p.sigma, res.fit_r2, *res.fit_range)])]
    if res.diagnostic:
        log.warning(res.diagnostic)
    if cfg["dump_curve"]:
        curve = log_vol_autocov(returns, cfg["fit_hi"])
        outputs.append(write_csv(out / "calibrate_curve.csv", ["lag", "C"], zip(curve.lags, curve.values)))
    return outputs


REPORT_HEADER = ["name", "variant", "lambda", "T", "sigma", "q025", "q50", "q975",
                 "exceedance_pct", "n_windows", "n_sims"]


def _report_row(name, variant, rep):
    p, b = rep.params, rep.band
    return (name, variant, p.intermittency, p.integral_scale, p.sigma, b.q025, b.q50, b.q975,
            rep.exceedance_pct, len(rep.trace), b.n_sims)


def _run_one(cfg, path):
    variant = make_variant(cfg["variant"], cfg["nu"], cfg["k"], cfg["gamma_theta"])
    return run_test(read_price_csv(path), variant, _test_config(cfg))


def cmd_test(cfg, out):
    rep = _run_one(cfg, cfg["input"])
    b = rep.band
    tr = rep.trace
    rows = [(e, v, err, b.q025, b.q50, b.q975)
            for e, v, err in zip(tr.window_end_indices, tr.delta_h_values, tr.delta_h_errors)]
    return [
        write_csv(out / "report.csv", REPORT_HEADER, [_report_row(Path(cfg["input"]).stem, cfg["variant"], rep)]),
        write_csv(out / "trace.csv", ["window_end", "delta_h", "err", "q025", "q50", "q975"], rows),
    ]


def cmd_batch_test(cfg, out):
    files = sorted(Path(cfg["input_dir"]).glob("*.csv"))
    if not files:
        raise DataError(f"no CSV files in {cfg['input_dir']}")
    rows = []
    for f in files:
        log.info("testing %s", f.name)
        rows.append(_report_row(f.stem, cfg["variant"], _run_one(cfg, f)))
    edges, counts = exceedance_histogram([r[8] for r in rows], cfg["bin_width"])
    return [
        write_csv(out / "batch_report.csv", REPORT_HEADER, rows),
        write_csv(out / "histogram.csv", ["bin_lo", "bin_hi", "count"], zip(edges[:-1], edges[1:], counts)),
    ]


COMMANDS = {
    "simulate": cmd_simulate, "fbm": cmd_fbm, "ghe": cmd_ghe, "zeta": cmd_zeta,
    "calibrate": cmd_calibrate, "test": cmd_test, "batch-test": cmd_batch_test,
}


def _inputs(command, cfg):
    if cfg.get("input"):
        return [cfg["input"]]
    if command == "batch-test" and cfg.get("input_dir"):
        return sorted(Path(cfg["input_dir"]).glob("*.csv"))
    return []


def dispatch(argv=None):
    """Run one subcommand; returns the process exit status."""
    try:
        ns = build_parser().parse_args(argv)
        if "command" not in ns or ns.command is None:
            raise UsageError("a subcommand is required (see --help)")
        command = ns.command
        if getattr(ns, "verbose", False):
            logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(command, ns)
        _validate(command, cfg)
        out = Path(getattr(ns, "out_dir", None) or os.environ.get(OUTPUT_ENV) or ".")
        outputs = COMMANDS[command](cfg, out)
        write_manifest(out, command, cfg, outputs, _inputs(command, cfg))
    except (UsageError, InvalidParamsError) as exc:
        print(f"mrwtest: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"mrwtest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EstimationError, MrwError, FloatingPointError) as exc:
        print(f"mrwtest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
