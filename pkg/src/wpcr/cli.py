"""Declarative experiment runner.

Each subcommand reads a JSON config, validates it up front (exit 2 with a
line-anchored message on bad input), runs the experiment, and writes one CSV
per result table plus a JSON summary echoing the config, package version and
seed. Numeric failures exit 3. In strict mode the exit code is 0 only if
every in-config domination check passed; otherwise results carry a pass
column and the exit code stays 0.

Identical (config, seed) pairs produce byte-identical outputs regardless of
--threads, because replications run on per-index RNG streams and reductions
are ordered.
"""

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, posterior
from .bounds import corollary_rate
from .errors import NumericError, ValidationError
from .measures import (
    DiscreteMeasure,
    MixtureLaw,
    SeededRng,
    TruncatedGaussianLaw,
    UniformLaw,
    sample_iid,
)
from .metric import space_from_json
from .priors import (
    AffineBeta,
    ConstantBeta,
    DirichletProcessPrior,
    ExtendedGammaPrior,
    SinusoidalBeta,
    constant_beta_norm,
    dp_predictive,
    egp_l1_distance,
    egp_latent_density,
    egp_predictive,
    egp_predictive_masses,
)
from .transport import wasserstein, wasserstein_1d

log = logging.getLogger("wpcr")

SUBCOMMANDS = (
    "wasserstein",
    "gc-rate",
    "contraction",
    "decompose",
    "mv-bounds",
    "df-sweep",
    "lipschitz",
    "egp-check",
)


class ConfigError(ValidationError):
    def __init__(self, key, message):
        super().__init__(message)
        self.key = key


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def require(cfg, key, kind=None, default=None):
    if key not in cfg:
        if default is not None:
            return default
        raise ConfigError(key, f"missing required field {key!r}")
    val = cfg[key]
    if kind is not None:
        try:
            val = kind(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, f"field {key!r}: {exc}") from exc
    return val


def parse_law(obj, key="law"):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(key, f"field {key!r} must be an object with a 'kind'")
    kind = obj["kind"]
    if kind == "uniform":
        return UniformLaw(dim=int(obj.get("dim", 1)))
    if kind == "truncated_gaussian":
        return TruncatedGaussianLaw(mean=tuple(obj["mean"]), sd=tuple(obj["sd"]))
    if kind == "discrete":
        return DiscreteMeasure.from_json(obj["atoms"])
    if kind == "mixture":
        return MixtureLaw(
            atoms=DiscreteMeasure.from_json(obj["atoms"]),
            atom_weight=float(obj["atom_weight"]),
            continuous=parse_law(obj["continuous"], key) if obj.get("continuous") else None,
        )
    raise ConfigError(key, f"unknown law kind {kind!r}")


def parse_beta(obj):
    kind = obj.get("kind")
    if kind == "constant":
        return ConstantBeta(float(obj["value"]))
    if kind == "affine":
        return AffineBeta(
            float(obj["c0"]), float(obj["c1"]),
            float(obj.get("lower_clip", -np.inf)), float(obj.get("upper_clip", np.inf)),
        )
    if kind == "sinusoidal":
        return SinusoidalBeta(
            float(obj["base"]), float(obj["amplitude"]), float(obj.get("frequency", 1.0))
        )
    raise ConfigError("beta", f"unknown beta kind {kind!r}")


def parse_prior(obj, space):
    if "dp" in obj:
        cfg = obj["dp"]
        return DirichletProcessPrior(float(cfg["q"]), parse_law(cfg["H"], "H"))
    if "egp" in obj:
        cfg = obj["egp"]
        return ExtendedGammaPrior(
            space=space,
            alpha=parse_law(cfg["alpha"], "alpha"),
            a=float(cfg["a"]),
            beta=parse_beta(cfg["beta"]),
            lipschitz=cfg.get("L"),
            beta_min=cfg.get("beta0"),
            beta_max=cfg.get("beta1"),
        )
    raise ConfigError("prior", "prior must contain a 'dp' or 'egp' object")


def parse_chi(obj):
    kind = obj.get("kind")
    if kind == "uniform":
        return bounds.BetaChi(1.0, 1.0)
    if kind == "beta":
        return bounds.BetaChi(float(obj["a"]), float(obj["b"]))
    if kind == "discrete":
        return bounds.DiscreteChi(DiscreteMeasure.from_json(obj["atoms"]))
    raise ConfigError("laws", f"unknown base-measure kind {kind!r}")


def _space(cfg):
    return space_from_json(cfg.get("space", {"kind": "hypercube", "dim": 1}))


def _maybe_rate_exponents(cfg):
    """Validate an optional 'corollary' block up front (fail-fast on a violated
    hypothesis) and echo the resulting exponents in the summary."""
    if "corollary" not in cfg:
        return {}
    c = cfg["corollary"]
    rates = corollary_rate(
        float(c["d"]), float(c["s"]), float(c["alpha"]), float(c.get("p", 1.0))
    )
    return {
        "rate_exponents": {
            "beta_opt": rates.beta_opt,
            "rate_exponent": rates.rate_exponent,
        }
    }


# --------------------------------------------------------------------------
# runners: each returns (tables, summary_extras, all_passed)


def run_wasserstein(cfg, rng, threads):
    space = _space(cfg)
    p = require(cfg, "p", float, 1.0)
    mu = DiscreteMeasure.from_json(require(cfg, "mu"))
    nu = DiscreteMeasure.from_json(require(cfg, "nu"))
    cost, plan = wasserstein(mu, nu, p, space)
    plan.validate(space)
    tables = {
        "cost": (["p", "cost"], [(p, cost)]),
        "plan": (["row", "col", "mass"], plan.to_csv_rows()),
    }
    extras = {"cost": cost}
    if not mu.is_labels and mu.dim == 1:
        extras["cost_1d_closed_form"] = wasserstein_1d(mu, nu, p)
    return tables, extras, True


def run_gc_rate(cfg, rng, threads):
    space = _space(cfg)
    extras = _maybe_rate_exponents(cfg)
    p0 = parse_law(require(cfg, "p0"), "p0")
    result = posterior.gc_rate(
        p0,
        require(cfg, "p", float, 1.0),
        require(cfg, "n_grid", list),
        require(cfg, "replications", int),
        rng,
        space=space,
        resolution=require(cfg, "resolution", int, 64),
        threads=threads,
    )
    rows = [(r.n, r.estimate, r.se) for r in result.rows]
    extras["slope"] = result.slope
    return {"gc_rate": (["n", "estimate", "se"], rows)}, extras, True


def run_contraction(cfg, rng, threads):
    space = _space(cfg)
    extras = _maybe_rate_exponents(cfg)
    prior = parse_prior(require(cfg, "prior"), space)
    p0 = parse_law(require(cfg, "p0"), "p0")
    result = posterior.estimate_contraction(
        prior,
        p0,
        require(cfg, "n_grid", list),
        require(cfg, "replications", int),
        require(cfg, "posterior_draws", int),
        require(cfg, "p", float, 1.0),
        rng,
        truncation_tail=require(cfg, "truncation_tail", float, 1e-3),
        space=space,
        threads=threads,
    )
    markov = posterior.markov_pcr_check(
        result, tuple(require(cfg, "markov_blowups", list, [2.0, 5.0, 10.0]))
    )
    rows = [(r.n, r.estimate, r.se) for r in result.rows]
    mrows = [(m.n, m.blowup, m.mass, m.se, m.ceiling, m.passed) for m in markov]
    passed = all(m.passed for m in markov)
    extras.update({"slope": result.slope, "markov_passed": passed})
    return (
        {
            "contraction": (["n", "epsilon", "se"], rows),
            "markov": (["n", "blowup", "mass", "se", "ceiling", "passed"], mrows),
        },
        extras,
        passed,
    )


def run_decompose(cfg, rng, threads):
    space = _space(cfg)
    extras = _maybe_rate_exponents(cfg)
    prior = parse_prior(require(cfg, "prior"), space)
    p0 = parse_law(require(cfg, "p0"), "p0")
    report = posterior.decompose_five_terms(
        prior,
        p0,
        require(cfg, "n", int),
        require(cfg, "delta", float),
        require(cfg, "p", float, 1.0),
        require(cfg, "replications", int),
        rng,
        posterior_draws=require(cfg, "posterior_draws", int, 64),
        truncation_tail=require(cfg, "truncation_tail", float, 1e-3),
        space=space,
        threads=threads,
    )
    rows = [
        (t.name, t.estimate, t.se, t.ceiling, t.ceiling_se, t.passed) for t in report.terms
    ]
    extras.update(
        {
            "epsilon": report.epsilon,
            "epsilon_se": report.epsilon_se,
            "triangle_ok": report.triangle_ok,
            "t4_max": report.t4_max,
            "decomposition_config": report.config,
        }
    )
    return (
        {"decompose": (["term", "estimate", "se", "ceiling", "ceiling_se", "passed"], rows)},
        extras,
        report.all_passed,
    )


def run_mv_bounds(cfg, rng, threads):
    result = posterior.mv_bounds_dp(
        require(cfg, "q", float),
        require(cfg, "n_cells", int),
        require(cfg, "n", int),
        require(cfg, "replications", int),
        rng,
        threads=threads,
    )
    return (
        {"mv_bounds": (["aggregate", "estimate", "se", "ceiling", "passed"], result.to_rows())},
        {"passed": result.passed},
        result.passed,
    )


def run_df_sweep(cfg, rng, threads):
    laws = [parse_chi(obj) for obj in require(cfg, "laws", list)]
    n_grid = [int(n) for n in require(cfg, "n_grid", list)]
    p_grid = [float(p) for p in require(cfg, "p_grid", list)]
    h_grid = [float(h) for h in require(cfg, "h_grid", list)]
    rows = []
    all_ok = True
    for law_obj, law_cfg in zip(laws, cfg["laws"]):
        profile = bounds.df_profile(law_obj)
        name = json.dumps(law_cfg, sort_keys=True)
        psi_cache = {h: profile.psi(h) for h in h_grid}
        for n in n_grid:
            for p in p_grid:
                for h in h_grid:
                    ratio = bounds.df_ratio(law_obj, n, p, h)
                    ceiling = psi_cache[h] * float(np.exp(2.0 * n * h * h))
                    ok = ratio >= ceiling * (1.0 - 1e-9)
                    all_ok &= ok
                    rows.append((name, n, p, h, ratio, ceiling, ok))
    return (
        {"df_sweep": (["law", "n", "p", "h", "ratio", "ceiling", "passed"], rows)},
        {"passed": all_ok},
        all_ok,
    )


def run_lipschitz(cfg, rng, threads):
    space = _space(cfg)
    prior = parse_prior(require(cfg, "prior"), space)
    sampling = parse_law(cfg["sampling_law"], "sampling_law") if "sampling_law" in cfg else None
    rows = []
    all_ok = True
    for i, n in enumerate(require(cfg, "n_values", list)):
        est = posterior.estimate_predictive_lipschitz(
            prior, int(n), require(cfg, "pair_count", int), rng.spawn(i),
            sampling_law=sampling, space=space,
        )
        all_ok &= est.passed
        rows.append((int(n), est.max_ratio, est.theoretical, est.pairs_used, est.passed))
    return (
        {"lipschitz": (["n", "max_ratio", "theoretical", "pairs_used", "passed"], rows)},
        {"passed": all_ok},
        all_ok,
    )


def run_egp_check(cfg, rng, threads):
    space = _space(cfg)
    prior = parse_prior(require(cfg, "prior"), space)
    if not isinstance(prior, ExtendedGammaPrior):
        raise ConfigError("prior", "egp-check needs an 'egp' prior")
    tol = require(cfg, "tol", float, 1e-8)
    n_values = [int(n) for n in require(cfg, "n_values", list, [5, 20])]
    pairs = require(cfg, "pairs", int, 20)
    rows = []
    all_ok = True
    for i, n in enumerate(n_values):
        sample = sample_iid(UniformLaw(1), n, rng.spawn(0, i))
        profile = egp_latent_density(prior, sample, tol)
        pts, raw_masses = egp_predictive_masses(prior, sample, tol)
        if isinstance(prior.beta, ConstantBeta):
            expected = constant_beta_norm(prior.a, n, prior.beta.value)
            rel = abs(profile.norm - expected) / expected
            rows.append(("latent_norm_constant_beta", n, rel, 1e-6, rel <= 1e-6))
            pred = egp_predictive(prior, sample, tol)
            dp = DirichletProcessPrior(prior.a, prior.alpha)
            dist = wasserstein_1d(pred, dp_predictive(dp, sample), 1.0)
            rows.append(("predictive_matches_dp", n, dist, 1e-6, dist <= 1e-6))
        mass_err = abs(float(raw_masses.sum()) - 1.0)
        rows.append(("predictive_mass", n, mass_err, 1e-6, mass_err <= 1e-6))
        worst = 0.0
        for k in range(pairs):
            gen = rng.spawn(1, i, k)
            sx = sample_iid(UniformLaw(1), n, gen.spawn(0))
            sy = sample_iid(UniformLaw(1), n, gen.spawn(1))
            l1, bound_val = egp_l1_distance(prior, sx, sy, tol)
            worst = max(worst, l1 - bound_val)
        rows.append(("l1_minus_bound_max", n, worst, 1e-6, worst <= 1e-6))
    all_ok = all(r[4] for r in rows)
    return (
        {"egp_check": (["check", "n", "value", "tolerance", "passed"], rows)},
        {"passed": all_ok},
        all_ok,
    )


RUNNERS = {
    "wasserstein": run_wasserstein,
    "gc-rate": run_gc_rate,
    "contraction": run_contraction,
    "decompose": run_decompose,
    "mv-bounds": run_mv_bounds,
    "df-sweep": run_df_sweep,
    "lipschitz": run_lipschitz,
    "egp-check": run_egp_check,
}


def _line_of(text, key):
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def build_parser():
    parser = argparse.ArgumentParser(prog="wpcr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON experiment config")
        cmd.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        cmd.add_argument("--threads", type=int, default=1)
        cmd.add_argument("--strict", action="store_true")
        cmd.add_argument("--out", default=".", help="output directory")
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("WPCR_LOG", "WARNING").upper())
    args = build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        text = config_path.read_text(encoding="utf-8")
        cfg = json.loads(text)
    except OSError as exc:
        print(f"{config_path}: cannot read config: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"{config_path}:{exc.lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    rng = SeededRng(seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        tables, extras, passed = RUNNERS[args.command](cfg, rng, max(args.threads, 1))
    except ConfigError as exc:
        line = _line_of(text, exc.key)
        anchor = f"{config_path}:{line}" if line else str(config_path)
        print(f"{anchor}: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"{config_path}: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    outputs = {}
    for name, (header, rows) in tables.items():
        path = out_dir / f"{name}.csv"
        write_csv(path, header, rows)
        outputs[name] = str(path)
    summary = {
        "command": args.command,
        "version": __version__,
        "seed": seed,
        "config": cfg,
        "outputs": outputs,
        "passed": bool(passed),
    }
    summary.update({k: _json_safe(v) for k, v in extras.items()})
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    if args.strict and not passed:
        return 1
    return 0


def _json_safe(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


if __name__ == "__main__":
    sys.exit(main())
