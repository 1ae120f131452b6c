"""Command-line driver: generate | infer | predict | eval | experiment.

Run configs are JSON; unknown keys are hard errors so hyperparameter typos
cannot silently change an experiment. Exit codes: 0 success, 2 configuration
or validation error, 3 numerical failure during inference.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from .constraints import PiMode, SamplerPi, SoftIndicatorParams, parse_constraints
from .core import Architecture, Task
from .datasets import GeneratorKind, GeneratorSpec, generate, read_dataset_csv, write_dataset_csv
from .errors import ConfigError, InferenceError, OcbnnError
from .experiments import GridSpec, run_experiment, experiment_names
from .inference import HmcConfig, LogJoint, PosteriorEnsemble, SvgdConfig, run_inference
from .network import Dataset, LikelihoodConfig
from .predictive import metrics_report, posterior_predictive, write_grid_csv
from .priors import PriorConfig, validate_regions


def _strict_keys(d: dict, allowed: set[str], context: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")


def _parse_dataset_spec(d: dict, default_seed: int) -> GeneratorSpec:
    field_names = {f.name for f in dataclasses.fields(GeneratorSpec)}
    _strict_keys(d, field_names, "dataset")
    if "kind" not in d:
        raise ConfigError("dataset config needs a 'kind'")
    args = dict(d)
    args.setdefault("seed", default_seed)
    args["kind"] = GeneratorKind(args["kind"])
    for tuple_key in ("x_ranges", "class_means", "point_inputs", "point_targets"):
        if tuple_key in args:
            args[tuple_key] = tuple(tuple(v) for v in args[tuple_key])
    return GeneratorSpec(**args)


def _parse_prior(d: dict) -> PriorConfig:
    allowed = {
        "sigma_p",
        "gamma",
        "alpha_allowed",
        "alpha_forbidden",
        "tau0",
        "tau1",
        "sample_count",
        "pi_mode",
        "pi_points",
        "resample_mode",
    }
    _strict_keys(d, allowed, "prior")
    indicator = SoftIndicatorParams(tau0=d.get("tau0", 15.0), tau1=d.get("tau1", 2.0))
    pi = SamplerPi(
        mode=PiMode(d.get("pi_mode", "uniform_box")),
        points=tuple(tuple(p) for p in d.get("pi_points", ())),
        sample_count=int(d.get("sample_count", 50)),
    )
    return PriorConfig(
        sigma_p=d.get("sigma_p", 1.0),
        gamma=d.get("gamma", 10_000.0),
        alpha_allowed=d.get("alpha_allowed", 10.0),
        alpha_forbidden=d.get("alpha_forbidden", 0.01),
        indicator=indicator,
        pi=pi,
        resample_mode=d.get("resample_mode", "fixed_at_setup"),
    )


def _parse_inference(d: dict, default_seed: int) -> HmcConfig | SvgdConfig:
    method = d.get("method")
    if method == "hmc":
        allowed = {"method", "step_size", "leapfrog_steps", "burn_in", "n_samples", "thin", "seed"}
        _strict_keys(d, allowed, "inference")
        return HmcConfig(
            step_size=d["step_size"],
            leapfrog_steps=int(d["leapfrog_steps"]),
            burn_in=int(d["burn_in"]),
            n_samples=int(d["n_samples"]),
            thin=int(d.get("thin", 1)),
            seed=int(d.get("seed", default_seed)),
        )
    if method == "svgd":
        allowed = {"method", "n_particles", "n_iters", "step_size", "adagrad_eps", "batch_size", "seed"}
        _strict_keys(d, allowed, "inference")
        return SvgdConfig(
            n_particles=int(d["n_particles"]),
            n_iters=int(d["n_iters"]),
            step_size=d.get("step_size", 0.05),
            adagrad_eps=d.get("adagrad_eps", 1e-8),
            batch_size=d.get("batch_size"),
            seed=int(d.get("seed", default_seed)),
        )
    raise ConfigError(f"inference method must be 'hmc' or 'svgd', got {method!r}")


@dataclasses.dataclass
class RunConfig:
    architecture: Architecture
    dataset: GeneratorSpec | None
    constraint_text: str | None
    prior: PriorConfig
    likelihood: LikelihoodConfig
    inference: HmcConfig | SvgdConfig | None
    grid: GridSpec | None
    outputs: Path
    seed: int

    @classmethod
    def from_json_file(cls, path, seed_override: int | None = None) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        allowed = {
            "architecture",
            "dataset",
            "constraints",
            "prior",
            "likelihood",
            "inference",
            "grid",
            "outputs",
            "seed",
        }
        _strict_keys(raw, allowed, "config")
        seed = int(raw.get("seed", 0)) if seed_override is None else seed_override
        if "architecture" not in raw:
            raise ConfigError("config needs an 'architecture' section")
        arch = Architecture.from_json_dict(raw["architecture"])

        dataset = None
        if "dataset" in raw:
            dataset = _parse_dataset_spec(raw["dataset"], seed)

        constraint_text = None
        if raw.get("constraints") is not None:
            c = raw["constraints"]
            if isinstance(c, dict):
                _strict_keys(c, {"text", "path"}, "constraints")
                if ("text" in c) == ("path" in c):
                    raise ConfigError("constraints need exactly one of 'text' or 'path'")
                constraint_text = c["text"] if "text" in c else Path(c["path"]).read_text()
            else:
                constraint_text = Path(c).read_text()

        lik_raw = raw.get("likelihood", {})
        _strict_keys(lik_raw, {"regression_noise_sigma", "batch_size"}, "likelihood")
        likelihood = LikelihoodConfig(
            regression_noise_sigma=lik_raw.get("regression_noise_sigma", 0.1),
            batch_size=lik_raw.get("batch_size"),
        )

        grid = None
        if "grid" in raw:
            g = raw["grid"]
            _strict_keys(g, {"mins", "maxs", "counts"}, "grid")
            grid = GridSpec(tuple(g["mins"]), tuple(g["maxs"]), tuple(int(c) for c in g["counts"]))

        return cls(
            architecture=arch,
            dataset=dataset,
            constraint_text=constraint_text,
            prior=_parse_prior(raw.get("prior", {})),
            likelihood=likelihood,
            inference=_parse_inference(raw["inference"], seed) if "inference" in raw else None,
            grid=grid,
            outputs=Path(raw.get("outputs", ".")),
            seed=seed,
        )

    def regions(self):
        if self.constraint_text is None:
            return ()
        regions = tuple(parse_constraints(self.constraint_text))
        validate_regions(self.architecture, regions)
        return regions


def _out_dir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else cfg.outputs
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg: RunConfig, out: str | None) -> None:
    if cfg.dataset is None:
        raise ConfigError("generate needs a 'dataset' section")
    data = generate(cfg.dataset)
    path = _out_dir(cfg, out) / "dataset.csv"
    write_dataset_csv(data, path)
    print(path)


def _empty_dataset(arch: Architecture) -> Dataset:
    if arch.task is Task.CLASSIFICATION:
        return Dataset(np.empty((0, arch.input_dim)), np.empty(0, dtype=np.int64))
    return Dataset(np.empty((0, arch.input_dim)), np.empty((0, arch.output_dim)))


def cmd_infer(cfg: RunConfig, out: str | None) -> None:
    if cfg.inference is None:
        raise ConfigError("infer needs an 'inference' section")
    # a missing dataset section means prior-only inference
    data = generate(cfg.dataset) if cfg.dataset is not None else _empty_dataset(cfg.architecture)
    data.validate_for(cfg.architecture)
    regions = cfg.regions()
    target = LogJoint(
        cfg.architecture, data, cfg.likelihood, regions, cfg.prior, seed=cfg.seed
    )
    start = time.perf_counter()
    ensemble = run_inference(target, cfg.inference)
    wall = time.perf_counter() - start
    out_path = _out_dir(cfg, out)
    ensemble.save(out_path / "posterior.json")
    diagnostics = dict(ensemble.diagnostics)
    diagnostics["wall_time_sec"] = wall
    (out_path / "diagnostics.json").write_text(json.dumps(diagnostics) + "\n")
    print(out_path / "posterior.json")


def _load_matching_posterior(cfg: RunConfig, posterior_path: str) -> PosteriorEnsemble:
    ensemble = PosteriorEnsemble.load(posterior_path)
    if ensemble.architecture != cfg.architecture:
        raise ConfigError("posterior file architecture does not match the config")
    return ensemble


def cmd_predict(cfg: RunConfig, posterior_path: str, out: str | None) -> None:
    if cfg.grid is None:
        raise ConfigError("predict needs a 'grid' section")
    ensemble = _load_matching_posterior(cfg, posterior_path)
    summary = posterior_predictive(ensemble, cfg.grid.points())
    path = _out_dir(cfg, out) / "grid.csv"
    write_grid_csv(summary, path)
    print(path)


def cmd_eval(cfg: RunConfig, posterior_path: str, test_csv: str, out: str | None) -> None:
    ensemble = _load_matching_posterior(cfg, posterior_path)
    data = read_dataset_csv(test_csv)
    data.validate_for(cfg.architecture)
    regions = cfg.regions()
    summary = posterior_predictive(ensemble, data.inputs)
    if data.is_classification:
        report = metrics_report(summary, regions, labels=data.targets)
    else:
        report = metrics_report(summary, regions, targets=data.targets)
    path = _out_dir(cfg, out) / "metrics.json"
    path.write_text(json.dumps(report) + "\n")
    print(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ocbnn",
        description="Output-constrained BNNs: data generation, inference, prediction, metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run-config JSON path")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory override")

    p = sub.add_parser("generate", help="write the configured dataset as CSV")
    add_common(p)

    p = sub.add_parser("infer", help="run the configured sampler; write posterior + diagnostics")
    add_common(p)
    p.add_argument("--constraints", default=None, help="constraint file overriding the config")

    p = sub.add_parser("predict", help="evaluate the posterior predictive over the config grid")
    add_common(p)
    p.add_argument("--posterior", required=True)

    p = sub.add_parser("eval", help="compute metrics of a posterior against a test CSV")
    add_common(p)
    p.add_argument("--posterior", required=True)
    p.add_argument("--test", required=True)

    p = sub.add_parser("experiment", help="run a named experiment end to end")
    p.add_argument("name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="artifact directory (default: ./<name>)")
    p.add_argument("--fast", action="store_true", help="reduced burn-in/iterations for CI use")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "experiment":
            out = args.out or args.name
            manifest = run_experiment(args.name, out, seed=args.seed, fast=args.fast)
            print(json.dumps(manifest, indent=2))
            return 0
        cfg = RunConfig.from_json_file(args.config, seed_override=args.seed)
        if args.command == "generate":
            cmd_generate(cfg, args.out)
        elif args.command == "infer":
            if args.constraints is not None:
                cfg.constraint_text = Path(args.constraints).read_text()
            cmd_infer(cfg, args.out)
        elif args.command == "predict":
            cmd_predict(cfg, args.posterior, args.out)
        elif args.command == "eval":
            cmd_eval(cfg, args.posterior, args.test, args.out)
        return 0
    except InferenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OcbnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
