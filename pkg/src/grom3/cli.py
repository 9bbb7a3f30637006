"""Command-line interface: ``grom3 {simulate,fit,select,eval,crv,check-id}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then flags. Every run writes ``manifest.json`` with the
resolved settings so it can be repeated exactly.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure. On
failure a single line ``error code=<n> type=<name> message=<text>`` goes to
stderr.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import io as gio
from .association import sample_cramers_v_matrix
from .errors import (
    AllDiscarded,
    CategoryOutOfRange,
    DegenerateMembership,
    DimGuard,
    EmptyAfterFiltering,
    GroupTooSmall,
    LengthMismatch,
    NotDirichletConsistent,
    ParseError,
    SchemaError,
    ShapeMismatch,
    TooFewSamples,
    UnknownScenario,
)
from .identifiability import check_theorem1, check_theorem2, check_theorem3
from .mcmc import SamplerConfig, run_chain
from .model import gom_grouping, lcm_grouping, model_cramers_v_matrix
from .posterior import derived_seed, evaluate, model_selection_scan, summarize
from .simulate import preset_scenario, sample_dataset


class UsageError(Exception):
    pass


DATA_ERRORS = (ParseError, SchemaError, EmptyAfterFiltering, CategoryOutOfRange, ShapeMismatch,
               LengthMismatch, UnknownScenario, GroupTooSmall, DimGuard, OSError)
NUMERIC_ERRORS = (NotDirichletConsistent, AllDiscarded, TooFewSamples, FloatingPointError,
                  DegenerateMembership)

# (name, type, default) for settings shared by config files and flags
SETTINGS = [
    ("input", str, None),
    ("output", str, None),
    ("scenario", str, None),
    ("model", str, None),
    ("truth", str, None),
    ("summary", str, None),
    ("n", int, None),
    ("seed", int, 0),
    ("iterations", int, 15000),
    ("burn_in", int, 10000),
    ("thin", int, 5),
    ("sigma_alpha", float, 0.02),
    ("a_alpha", float, 2.0),
    ("b_alpha", float, 1.0),
    ("a0", float, 1.0),
    ("b0", float, 1.0),
    ("variant", str, "mh"),
    ("init", str, "cluster"),
    ("G", int, None),
    ("K", int, None),
    ("G_list", str, None),
    ("K_list", str, None),
    ("fixed_grouping", str, None),
    ("replicates", int, 1),
    ("chains", int, 1),
]
SETTING_TYPES = {name: typ for name, typ, _ in SETTINGS}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="grom3", description="Dimension-grouped mixed membership models.")
    parser.add_argument("--version", action="version", version=f"grom3 {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    commands = {
        "simulate": "draw a dataset from a preset or a model file",
        "fit": "run the sampler on a dataset",
        "select": "choose (G, K) by WAIC",
        "eval": "compare a fitted summary with the truth",
        "crv": "Cramer's V matrices",
        "check-id": "run the identifiability checkers on a model file",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config")
        for key, typ, _ in SETTINGS:
            flag = "--" + key.replace("_", "-")
            kwargs = {"dest": key, "default": None}
            if key == "variant":
                kwargs["choices"] = ["mh", "gibbs"]
            elif key == "init":
                kwargs["choices"] = ["cluster", "prior"]
            else:
                kwargs["type"] = typ
            p.add_argument(flag, **kwargs)
    return parser


def resolve_settings(args):
    """Defaults, then the config file, then flags."""
    settings = {name: default for name, _, default in SETTINGS}
    if args.config:
        for key, value in gio.read_config(args.config).items():
            if key not in SETTING_TYPES:
                raise UsageError(f"unknown config key {key!r}")
            try:
                settings[key] = SETTING_TYPES[key](value)
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
    for key in SETTING_TYPES:
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if settings["variant"] not in ("mh", "gibbs"):
        raise UsageError("variant must be mh or gibbs")
    return settings


def _require(settings, *keys):
    for key in keys:
        if settings[key] is None:
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _outdir(settings):
    _require(settings, "output")
    out = Path(settings["output"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out, command, settings):
    gio.write_json({"command": command, "settings": settings, "version": __version__},
                   out / "manifest.json")


def _int_list(text, key):
    try:
        vals = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"--{key} must list integers") from None
    if not vals:
        raise UsageError(f"--{key} is empty")
    return vals


def _sampler_config(settings, G, K, p, seed=None):
    fixed = None
    fg = settings["fixed_grouping"]
    if fg == "identity":
        fixed = gom_grouping(p)
        G = p if G is None else G
    elif fg == "ones":
        fixed = lcm_grouping(p)
        G = 1 if G is None else G
    elif fg is not None:
        fixed = gio.read_grouping(fg, p)
        G = int(fixed.max()) + 1 if G is None else G
    if G is None or K is None:
        raise UsageError("--G and --K are required")
    try:
        return SamplerConfig(
            G=G, K=K, iterations=settings["iterations"], burn_in=settings["burn_in"],
            thin=settings["thin"], sigma_alpha=settings["sigma_alpha"],
            a_alpha=settings["a_alpha"], b_alpha=settings["b_alpha"], a0=settings["a0"],
            b0=settings["b0"], seed=settings["seed"] if seed is None else seed,
            variant=settings["variant"], init=settings["init"],
            grouping_warmup=min(200, settings["burn_in"]),
            fixed_grouping=None if fixed is None else tuple(fixed), store_latent=False)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# --------------------------------------------------------------------------
# commands


def cmd_simulate(settings):
    _require(settings, "n")
    out = _outdir(settings)
    if settings["scenario"]:
        model = preset_scenario(settings["scenario"])
    elif settings["model"]:
        model = gio.read_model(settings["model"])
    else:
        raise UsageError("give --scenario or --model")
    reps = settings["replicates"]
    if reps < 1:
        raise UsageError("--replicates must be positive")
    gio.write_model(model, out / "truth.model")
    for r in range(reps):
        seed = settings["seed"] if reps == 1 else derived_seed(settings["seed"], r)
        data, _ = sample_dataset(model, settings["n"], seed)
        name = "data.csv" if reps == 1 else f"data_{r + 1}.csv"
        gio.write_dataset(data, out / name)
    _manifest(out, "simulate", settings)


def _load_data(settings):
    _require(settings, "input")
    return gio.read_dataset(settings["input"])


def cmd_fit(settings):
    data = _load_data(settings)
    out = _outdir(settings)
    cfg = _sampler_config(settings, settings["G"], settings["K"], data.p)
    trace = run_chain(data, cfg)
    gio.write_trace(trace, out)
    summ = summarize(trace)
    gio.write_model(summ.model(), out / "summary.model")
    gio.write_json({
        "G": cfg.G, "K": cfg.K, "waic": summ.waic, "lppd": summ.lppd, "p_waic2": summ.p_waic2,
        "occupied_groups": summ.occupied_groups,
        "alpha_mean": [float(a) for a in summ.alpha_mean],
        "mean_acceptance": trace.mean_acceptance(),
        "stored_draws": len(trace),
    }, out / "summary.json")
    _manifest(out, "fit", settings)


def cmd_select(settings):
    data = _load_data(settings)
    out = _outdir(settings)
    _require(settings, "G_list", "K_list")
    G_list = _int_list(settings["G_list"], "G-list")
    K_list = _int_list(settings["K_list"], "K-list")
    cfg = _sampler_config(dict(settings, fixed_grouping=None), G_list[0], K_list[0], data.p)
    result = model_selection_scan(data, G_list, K_list, cfg, chains=settings["chains"])
    gio._write_rows(out / "waic.csv", ["G", "K", "waic", "occupied_groups", "kept"],
                    ([r["G"], r["K"], repr(r["waic"]), r["occupied_groups"], int(r["kept"])]
                     for r in result.table))
    gio.write_json({"G": result.selected[0], "K": result.selected[1]}, out / "selected.json")
    _manifest(out, "select", settings)


def cmd_eval(settings):
    _require(settings, "summary", "truth")
    out = _outdir(settings)
    est = gio.read_model(settings["summary"])
    truth = gio.read_model(settings["truth"])
    if est.p != truth.p or est.K != truth.K or est.d != truth.d:
        raise ShapeMismatch("summary and truth have different dimensions")
    ev = evaluate(est, truth)
    gio.write_json({"ari": ev["ari"], "rmse_lambda": ev["rmse_lambda"],
                    "rmse_alpha": ev["rmse_alpha"],
                    "permutation": [int(v) + 1 for v in ev["permutation"]]}, out / "eval.json")
    _manifest(out, "eval", settings)


def cmd_crv(settings):
    data = _load_data(settings)
    out = _outdir(settings)
    gio.write_matrix(out / "crv_sample.csv", sample_cramers_v_matrix(data), data.item_names)
    if settings["summary"]:
        model = gio.read_model(settings["summary"])
        if model.p != data.p:
            raise ShapeMismatch("summary and data have different numbers of variables")
        gio.write_matrix(out / "crv_model.csv", model_cramers_v_matrix(model), data.item_names)
    _manifest(out, "crv", settings)


def cmd_check_id(settings):
    _require(settings, "model")
    model = gio.read_model(settings["model"])
    reports = [check_theorem1(model)]
    try:
        reports.append(check_theorem2(model))
    except GroupTooSmall as exc:
        from .identifiability import IdentifiabilityReport
        reports.append(IdentifiabilityReport("theorem2", False, {}, [str(exc)]))
    reports.append(check_theorem3(model.dims, model.s))
    text = "\n\n".join(r.render() for r in reports) + "\n"
    sys.stdout.write(text)
    if settings["output"]:
        out = _outdir(settings)
        (out / "identifiability.txt").write_text(text, encoding="utf-8")
        _manifest(out, "check-id", settings)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select": cmd_select,
    "eval": cmd_eval,
    "crv": cmd_crv,
    "check-id": cmd_check_id,
}


def _fail(code, exc):
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"error code={code} type={type(exc).__name__} message={msg}\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        settings = resolve_settings(args)
        with warnings.catch_warnings():
            warnings.simplefilter("error", DegenerateMembership)
            with np.errstate(invalid="raise", over="raise"):
                COMMANDS[args.command](settings)
    except UsageError as exc:
        return _fail(1, exc)
    except NUMERIC_ERRORS as exc:
        return _fail(3, exc)
    except DATA_ERRORS as exc:
        return _fail(2, exc)
    except ValueError as exc:
        return _fail(2, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
