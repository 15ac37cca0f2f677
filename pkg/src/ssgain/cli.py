"""Command-line front end: identify, simulate, benchmark, tune."""
import argparse
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import bench
from ._accel import configure_threads
from .errors import (ArgumentError, ConvergenceError, InputFormatError, MetricError,
                     ParameterDomainError, RankDeficiencyError, SsgainError, TuningError,
                     UnsupportedInputError)
from .kernels import Domain, KernelParams
from .model import (fit, fit_metric, impulse_response, save_model, step_response,
                    write_json)
from .signals import load_ct_csv, load_dt_csv, load_response_csv, save_ct_csv, save_dt_csv, write_csv
from .solver import GainConstraint, Loss, kkt_residual
from .tuning import SearchSpace, tune, write_scores

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _lambda_arg(text):
    if text.strip().lower() == "tune":
        return "tune"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'tune', got {text!r}")


def _bound(text):
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    return float(text)


def _common(p, data=True):
    p.add_argument("--config", type=Path, help="JSON config file; flags below override its keys")
    p.add_argument("--out", type=Path, help="output directory (default: current directory)")
    p.add_argument("--seed", type=int, help="master random seed")
    if data:
        p.add_argument("--data", type=Path, help="DT dataset CSV with columns t,u,y")
        p.add_argument("--steps", type=Path, help="CT input CSV with columns s,xi")
        p.add_argument("--samples", type=Path, help="CT samples CSV with columns t,y")
        p.add_argument("--kernel", choices=["tc", "dc", "ss"], type=str.lower, help="kernel family")
        p.add_argument("--alpha", type=float, help="kernel decay rate in (0, 1)")
        p.add_argument("--gamma", type=float, help="DC kernel correlation")
        p.add_argument("--lambda", dest="lam", type=_lambda_arg,
                       help="regularization weight, or 'tune' for hold-out search")
        p.add_argument("--delta", type=float, help="exact steady-state gain")
        p.add_argument("--delta-lo", type=_bound, help="lower gain bound (accepts -inf)")
        p.add_argument("--delta-hi", type=_bound, help="upper gain bound (accepts inf)")
        p.add_argument("--loss", choices=["squared", "huber", "pseudo-huber"], help="empirical loss")
        p.add_argument("--sigma", type=float, help="Huber / pseudo-Huber scale")


def build_parser():
    p = _Parser(prog="ssgain", description="Kernel impulse-response identification with "
                "steady-state gain side-information.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("identify", help="fit a model; writes model.json, impulse.csv, step.csv, report.json")
    _common(s)
    s.add_argument("--truth", type=Path, help="true impulse response CSV (t,g) for the fit metric")
    s = sub.add_parser("simulate", help="generate a dataset and its true impulse response")
    _common(s, data=False)
    s.add_argument("--system", choices=["random", "example1"], help="system to simulate")
    s.add_argument("--n", type=int, help="random system order")
    s.add_argument("--r", type=float, help="random system spectral radius")
    s.add_argument("--n-samples", type=int, help="number of DT samples")
    s.add_argument("--input", choices=["gaussian", "impulse", "step", "zero"], help="DT input kind")
    s.add_argument("--snr-db", type=_bound, help="signal-to-noise ratio in dB (inf: no noise)")
    s = sub.add_parser("benchmark", help="Monte Carlo comparison; writes results.csv and summary.json")
    _common(s, data=False)
    s.add_argument("--suite", choices=["example1", "example2"], help="benchmark suite")
    s.add_argument("--trials", type=int, help="number of trials (seeds for example1)")
    s.add_argument("--snr-db", type=float, action="append", help="SNR level; repeat for several")
    s = sub.add_parser("tune", help="hold-out search; writes scores.csv and best_theta.json")
    _common(s)
    s.add_argument("--train-fraction", type=float, help="chronological training fraction")
    return p


# -- config -------------------------------------------------------------------
def load_config(args):
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputFormatError("config file not found", path=args.config)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"invalid JSON ({exc.msg})", path=args.config, row=exc.lineno)
        if not isinstance(cfg, dict):
            raise InputFormatError("config must be a JSON object", path=args.config)
        base = Path(args.config).parent
        for key in ("data", "steps", "samples", "truth"):
            if isinstance(cfg.get(key), str) and not Path(cfg[key]).is_absolute():
                cfg[key] = str(base / cfg[key])
    v = vars(args)
    kern = dict(cfg.get("kernel") or {})
    for flag, key in (("kernel", "family"), ("alpha", "alpha"), ("gamma", "gamma")):
        if v.get(flag) is not None:
            kern[key] = v[flag].upper() if flag == "kernel" else v[flag]
    if kern:
        cfg["kernel"] = kern
    loss = dict(cfg.get("loss") or {})
    if v.get("loss") is not None:
        loss["kind"] = v["loss"]
    if v.get("sigma") is not None:
        loss["sigma"] = v["sigma"]
    if loss:
        cfg["loss"] = loss
    con = dict(cfg.get("constraint") or {})
    if v.get("delta") is not None:
        con = {"delta": v["delta"]}
    for flag, key in (("delta_lo", "lower"), ("delta_hi", "upper")):
        if v.get(flag) is not None:
            con.pop("delta", None)
            con[key] = v[flag]
    if con:
        cfg["constraint"] = con
    simple = {"lam": "lambda", "seed": "seed", "out": "out", "data": "data", "steps": "steps",
              "samples": "samples", "truth": "truth", "train_fraction": "train_fraction",
              "system": "system", "n": "n", "r": "r", "n_samples": "n_samples", "input": "input",
              "suite": "suite", "trials": "trials"}
    for flag, key in simple.items():
        if v.get(flag) is not None:
            cfg[key] = str(v[flag]) if isinstance(v[flag], Path) else v[flag]
    if v.get("snr_db") is not None:
        cfg["snr_db"] = v["snr_db"]
    return cfg


def _num_bound(x, default):
    if x is None:
        return default
    if isinstance(x, str):
        return _bound(x)
    return float(x)


def constraint_from(cfg):
    c = cfg.get("constraint") or {}
    if "delta" in c:
        return GainConstraint.exact(float(c["delta"]))
    return GainConstraint(_num_bound(c.get("lower"), -math.inf), _num_bound(c.get("upper"), math.inf))


def loss_from(cfg):
    l = cfg.get("loss") or {}
    if isinstance(l, str):
        l = {"kind": l}
    return Loss(l.get("kind", "squared"), l.get("sigma"))


def dataset_from(cfg):
    if cfg.get("data"):
        return load_dt_csv(cfg["data"])
    if cfg.get("steps") and cfg.get("samples"):
        return load_ct_csv(cfg["steps"], cfg["samples"])
    raise ArgumentError("no dataset: give --data (DT) or --steps and --samples (CT)")


def space_from(cfg, family):
    sp = dict(cfg.get("tuning") or {})
    sp.setdefault("family", family)
    if "seed" in cfg and sp.get("kind") == "random" and "seed" not in (cfg.get("tuning") or {}):
        sp["seed"] = cfg["seed"]
    return SearchSpace.from_dict(sp)


def _out(cfg):
    out = Path(cfg.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _family(cfg):
    return str((cfg.get("kernel") or {}).get("family", "TC")).upper()


def _resolve_theta(cfg, data, loss, cons):
    """Kernel and lambda: fixed, or tuned on a chronological hold-out split."""
    lam = cfg.get("lambda", "tune" if "tuning" in cfg else None)
    kern = cfg.get("kernel") or {}
    family = _family(cfg)
    if lam == "tune":
        sp_cfg = dict(cfg)
        tuning = dict(cfg.get("tuning") or {})
        # fixed kernel parameters pin their axes; lambda is still searched
        for k in ("alpha", "gamma"):
            if kern.get(k) is not None:
                if k in tuning:
                    raise ArgumentError(f"{k} given both as a fixed value and as a tuning range")
                tuning[k] = (float(kern[k]), float(kern[k]), 1)
        sp_cfg["tuning"] = tuning
        res = tune(data, space_from(sp_cfg, family), loss, cons, float(cfg.get("train_fraction", 0.8)))
        return res.best.kernel(family, data.domain), res.best.lam, res
    if lam is None:
        raise ArgumentError("lambda missing: give a number or 'tune'")
    if "tuning" in cfg:
        raise ArgumentError("give either fixed kernel parameters or a tuning space, not both")
    if "alpha" not in kern:
        raise ArgumentError("kernel alpha missing")
    kp = KernelParams(family, float(kern["alpha"]), kern.get("gamma"), data.domain)
    return kp, float(lam), None


def _grid(cfg, model):
    g = cfg.get("grid") or {}
    if model.kernel.domain is Domain.DT:
        T = int(g.get("horizon", model.horizon()))
        return np.arange(T + 1, dtype=float)
    T = float(g.get("horizon", model.horizon()))
    return np.linspace(0.0, T, int(g.get("points", 500)))


# -- commands -------------------------------------------------------------------
def cmd_identify(cfg):
    data = dataset_from(cfg)
    loss, cons = loss_from(cfg), constraint_from(cfg)
    kp, lam, tuned = _resolve_theta(cfg, data, loss, cons)
    out = _out(cfg)
    solver_kw = cfg.get("solver") or {}
    if isinstance(solver_kw, str):
        solver_kw = {"method": solver_kw}
    model, sol = fit(data, kp, lam, loss, cons, **solver_kw)
    grid = _grid(cfg, model)
    write_csv(out / "impulse.csv", ["t", "g"], [grid, impulse_response(model, grid)])
    write_csv(out / "step.csv", ["t", "s"], [grid, step_response(model, grid)])
    save_model(out / "model.json", model)
    report = {
        "achieved_gain": model.achieved_gain,
        "objective": sol.objective,
        "method": sol.method,
        "iterations": sol.iterations,
        "multiplier": sol.multiplier,
        "lambda": lam,
        "kernel": kp.as_dict(),
        "loss": {"kind": loss.kind, "sigma": loss.sigma},
        "constraint": cons.as_dict(),
    }
    if cons.is_exact and loss.kind == "squared":
        report["kkt_residual"] = kkt_residual(model.gram, sol, data.outputs, lam, cons.lower)
    if tuned is not None:
        report["validation_score"] = tuned.best_score
        write_scores(out / "scores.csv", tuned.table)
    if cfg.get("truth"):
        tt, gt = load_response_csv(cfg["truth"])
        report["fit_pct"] = fit_metric(impulse_response(model, tt), gt)
    write_json(out / "report.json", report)
    return EXIT_OK


def _dt_input(kind, n, seed):
    if kind == "gaussian":
        return np.random.default_rng(seed).standard_normal(n)
    u = np.zeros(n)
    if kind == "impulse":
        u[0] = 1.0
    elif kind == "step":
        u[:] = 1.0
    elif kind != "zero":
        raise ArgumentError(f"unknown input kind {kind!r}")
    return u


def cmd_simulate(cfg):
    out = _out(cfg)
    seed = int(cfg.get("seed", 0))
    snr = cfg.get("snr_db", 20.0 if cfg.get("system") == "example1" else None)
    snr = None if snr is None or (isinstance(snr, float) and math.isinf(snr)) else float(snr)
    if cfg.get("system") == "example1":
        data = bench.example1_dataset(seed, snr_db=math.inf if snr is None else snr)
        save_ct_csv(out / "steps.csv", out / "samples.csv", data)
        t = np.linspace(0.0, 30.0, 500)
        write_csv(out / "truth.csv", ["t", "g"], [t, bench.example1_impulse(t)])
        write_json(out / "simulate.json", {"system": "example1", "seed": seed, "true_gain": 1.0,
                                           "snr_db": snr, "realized_snr_db": data.meta["realized_snr_db"],
                                           "n_samples": data.n, "n_steps": data.input.n_steps})
        return EXIT_OK
    n_samples = int(cfg.get("n_samples", 200))
    ss = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(3)]
    spec = bench.RandomSystemSpec(int(cfg.get("n", 10)), float(cfg.get("r", 0.9)), ss[0])
    system = bench.gen_system(spec)
    u = _dt_input(cfg.get("input", "gaussian"), n_samples, ss[1])
    data = bench.simulate(system, u, n_samples, bench.NoiseSpec(snr, ss[2]))
    save_dt_csv(out / "data.csv", data)
    write_csv(out / "truth.csv", ["t", "g"], [np.arange(len(system.g)), system.g])
    write_json(out / "simulate.json", {
        "system": "random", "seed": seed, "n": spec.n, "r": spec.r, "true_gain": system.gain,
        "snr_db": snr, "realized_snr_db": data.meta["realized_snr_db"], "n_samples": n_samples,
        "input": cfg.get("input", "gaussian"),
    })
    return EXIT_OK


def cmd_benchmark(cfg):
    out = _out(cfg)
    suite = cfg.get("suite", "example2")
    seed = int(cfg.get("seed", 0))
    if suite == "example1":
        rows = bench.example1_suite(int(cfg.get("trials", 20)), seed, bool(cfg.get("timing", False)))
    elif suite == "example2":
        mc = {k: v for k, v in cfg.items() if k not in ("suite", "out")}
        if "tuning" in mc:
            mc["space"] = mc.pop("tuning")
        rows = bench.monte_carlo(bench.MonteCarloConfig.from_dict(mc))
    else:
        raise ArgumentError(f"unknown suite {suite!r}")
    bench.write_results(out / "results.csv", rows)
    write_json(out / "summary.json", {"suite": suite, "seed": seed, "groups": bench.summarize(rows)})
    return EXIT_OK


def cmd_tune(cfg):
    data = dataset_from(cfg)
    loss, cons = loss_from(cfg), constraint_from(cfg)
    family = _family(cfg)
    res = tune(data, space_from(cfg, family), loss, cons, float(cfg.get("train_fraction", 0.8)))
    out = _out(cfg)
    write_scores(out / "scores.csv", res.table)
    write_json(out / "best_theta.json", {"family": family, "domain": data.domain.value,
                                          **res.best.as_dict(), "score": res.best_score,
                                          "failed_candidates": len(res.diagnostics)})
    return EXIT_OK


COMMANDS = {"identify": cmd_identify, "simulate": cmd_simulate, "benchmark": cmd_benchmark,
            "tune": cmd_tune}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_threads()
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (InputFormatError, ArgumentError, ParameterDomainError, UnsupportedInputError,
            MetricError, FileNotFoundError, KeyError, TypeError, ValueError) as exc:
        print(f"ssgain: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, RankDeficiencyError, TuningError, np.linalg.LinAlgError) as exc:
        print(f"ssgain: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SsgainError as exc:  # pragma: no cover - every subclass is mapped above
        print(f"ssgain: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
