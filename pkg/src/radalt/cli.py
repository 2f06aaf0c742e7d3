"""Operator entry point: dataset generation, training, evaluation sweeps,
landing simulation, and artifact inspection.

Configuration is a JSON file with sections (chirp, generation, model,
training, eval, sim); unknown sections or keys are rejected. Every field can
be overridden from the command line with repeated
``--set section.key=value`` flags (values are parsed as JSON). Outputs embed
the fully resolved configuration for provenance.

Exit codes: 0 success, 1 configuration error, 2 I/O or file-format error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from . import neuralnet as nn
from .altsim import (
    ClutterParams,
    SimConfig,
    Trajectory,
    run_landing_sim,
    summary_text,
    write_sim_csv,
)
from .autoencoder import ModelConfig, build_model, load_checkpoint, save_checkpoint, train
from .channel import FadingParams
from .dataset import (
    DATASET_MAGIC,
    GenerationConfig,
    generate_dataset,
    read_dataset,
)
from .errors import ConfigError, FileFormatError
from .metrics import EvalSweepConfig, run_sweep, write_sweep_csv
from .waveform import ChirpParams

_DEFAULTS: dict = {
    "chirp": {
        "sample_rate_hz": 30e6,
        "bandwidth_hz": 24e6,
        "num_samples": 1000,
        "amplitude": 1.0,
    },
    "generation": {
        "num_examples": 10000,
        "delay_frac_range": [0.0, 0.01],
        "snr_db_range": [-25.0, 30.0],
        "interference_mode": "mixed",
        "num_tones_range": [1, 5],
        "tone_sir_db_range": [-20.0, 20.0],
        "qpsk_sir_db_range": [-20.0, 0.0],
        "qpsk_bandwidth_frac_range": [0.1, 1.0],
        "qpsk_duration_frac_range": [0.1, 1.0],
        "fading_relative_bandwidth": 0.1,
        "fading_sigma": 0.3,
        "faded_label": True,
        "master_seed": 0,
    },
    "model": {
        # None: 300 at desk-scale records (< 4000 samples), 200 at full scale.
        "kernel_size": None,
        "channels": 64,
        "num_stages": 3,
        "pool_window": 2,
        "latent_channels": None,
        "mixer_channels": None,
        "activation_slope": 0.2,
    },
    "training": {
        "epochs": 30,
        "batch_size": 32,
        "learning_rate": 3e-4,
        "clip_grad_norm": 1.0,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "holdout_fraction": 0.1,
        "seed": 0,
    },
    "eval": {
        "sir_grid_db": [-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        "interference_type": "tones",
        "num_trials": 25,
        "snr_db": 0.0,
        "num_tones": 1,
        "false_gate_m": 50.0,
        "seed": 0,
    },
    "sim": {
        "duration_s": 175.0,
        "record_interval_s": 0.5,
        "start_altitude_m": None,  # None: the chirp's maximum unambiguous range
        "end_altitude_m": 0.0,
        "snr_db": 0.0,
        "num_tones": 5,
        "tone_sir_db": -20.0,
        "qpsk_sir_db": -20.0,
        "clutter_scatterers": 0,
        "clutter_delay_frac_max": 0.002,
        "clutter_power_db": -20.0,
        "fading_relative_bandwidth": 0.1,
        "fading_sigma": 0.3,
        "false_report_gate_m": 50.0,
        "seed": 0,
    },
}


def load_config(path: str | None, overrides: list[str] | None = None) -> dict:
    """Merge defaults, an optional JSON file, and --set overrides.

    Unknown sections or keys fail fast: a silently ignored typo in a
    hyper-parameter would invalidate an experiment.
    """
    merged = json.loads(json.dumps(_DEFAULTS))
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise FileFormatError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object of sections")
        for section, values in user.items():
            if section not in merged:
                raise ConfigError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            for key, value in values.items():
                if key not in merged[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                merged[section][key] = value

    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        if dotted.count(".") != 1:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        section, key = dotted.split(".")
        if section not in merged or key not in merged[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        try:
            merged[section][key] = json.loads(raw)
        except json.JSONDecodeError:
            merged[section][key] = raw
    return merged


def _pair(value, name: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} must be a [low, high] pair")
    return tuple(value)


def chirp_from_config(cfg: dict) -> ChirpParams:
    c = cfg["chirp"]
    return ChirpParams(
        sample_rate_hz=float(c["sample_rate_hz"]),
        bandwidth_hz=float(c["bandwidth_hz"]),
        num_samples=int(c["num_samples"]),
        amplitude=float(c["amplitude"]),
    )


def generation_from_config(cfg: dict) -> GenerationConfig:
    g = cfg["generation"]
    lo, hi = _pair(g["num_tones_range"], "generation.num_tones_range")
    return GenerationConfig(
        chirp=chirp_from_config(cfg),
        num_examples=int(g["num_examples"]),
        delay_frac_range=_pair(g["delay_frac_range"], "generation.delay_frac_range"),
        snr_db_range=_pair(g["snr_db_range"], "generation.snr_db_range"),
        interference_mode=g["interference_mode"],
        num_tones_range=(int(lo), int(hi)),
        tone_sir_db_range=_pair(g["tone_sir_db_range"], "generation.tone_sir_db_range"),
        qpsk_sir_db_range=_pair(g["qpsk_sir_db_range"], "generation.qpsk_sir_db_range"),
        qpsk_bandwidth_frac_range=_pair(
            g["qpsk_bandwidth_frac_range"], "generation.qpsk_bandwidth_frac_range"
        ),
        qpsk_duration_frac_range=_pair(
            g["qpsk_duration_frac_range"], "generation.qpsk_duration_frac_range"
        ),
        fading=FadingParams(
            relative_bandwidth=float(g["fading_relative_bandwidth"]),
            sigma=float(g["fading_sigma"]),
        ),
        faded_label=bool(g["faded_label"]),
        master_seed=int(g["master_seed"]),
    )


def model_from_config(cfg: dict) -> ModelConfig:
    m = cfg["model"]
    num_samples = int(cfg["chirp"]["num_samples"])
    kernel = m["kernel_size"]
    if kernel is None:
        kernel = 300 if num_samples < 4000 else 200
    return ModelConfig(
        num_samples=num_samples,
        kernel_size=int(kernel),
        channels=int(m["channels"]),
        num_stages=int(m["num_stages"]),
        pool_window=int(m["pool_window"]),
        latent_channels=None if m["latent_channels"] is None else int(m["latent_channels"]),
        activation_slope=float(m["activation_slope"]),
        mixer_channels=None if m["mixer_channels"] is None else int(m["mixer_channels"]),
    )


def sweep_from_config(cfg: dict) -> EvalSweepConfig:
    e = cfg["eval"]
    return EvalSweepConfig(
        sir_grid_db=tuple(float(s) for s in e["sir_grid_db"]),
        interference_type=e["interference_type"],
        num_trials=int(e["num_trials"]),
        snr_db=float(e["snr_db"]),
        chirp=chirp_from_config(cfg),
        num_tones=int(e["num_tones"]),
        false_gate_m=float(e["false_gate_m"]),
        seed=int(e["seed"]),
    )


def sim_from_config(cfg: dict) -> SimConfig:
    s = cfg["sim"]
    chirp = chirp_from_config(cfg)
    trajectory = None
    if s["start_altitude_m"] is not None:
        trajectory = Trajectory(
            duration_s=float(s["duration_s"]),
            record_interval_s=float(s["record_interval_s"]),
            start_altitude_m=float(s["start_altitude_m"]),
            end_altitude_m=float(s["end_altitude_m"]),
        )
    else:
        from .altsim import max_unambiguous_range_m

        trajectory = Trajectory(
            duration_s=float(s["duration_s"]),
            record_interval_s=float(s["record_interval_s"]),
            start_altitude_m=max_unambiguous_range_m(chirp),
            end_altitude_m=float(s["end_altitude_m"]),
        )
    return SimConfig(
        chirp=chirp,
        trajectory=trajectory,
        snr_db=None if s["snr_db"] is None else float(s["snr_db"]),
        num_tones=int(s["num_tones"]),
        tone_sir_db=None if s["tone_sir_db"] is None else float(s["tone_sir_db"]),
        qpsk_sir_db=None if s["qpsk_sir_db"] is None else float(s["qpsk_sir_db"]),
        clutter=ClutterParams(
            num_scatterers=int(s["clutter_scatterers"]),
            delay_frac_max=float(s["clutter_delay_frac_max"]),
            relative_power_db=float(s["clutter_power_db"]),
        ),
        fading=FadingParams(
            relative_bandwidth=float(s["fading_relative_bandwidth"]),
            sigma=float(s["fading_sigma"]),
        ),
        false_report_gate_m=float(s["false_report_gate_m"]),
        seed=int(s["seed"]),
    )


def _config_echo(cfg: dict) -> str:
    return "config: " + json.dumps(cfg, sort_keys=True)


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg["generation"]["master_seed"] = args.seed
    gen_cfg = generation_from_config(cfg)
    gen_cfg.validate()
    info = generate_dataset(gen_cfg, args.out, config_echo=cfg)
    print(
        f"wrote {info.path}: examples={info.num_examples} "
        f"num_samples={info.num_samples} bytes={info.byte_size} "
        f"seed={gen_cfg.master_seed}"
    )
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, args.set)
    if args.seed is not None:
        cfg["training"]["seed"] = args.seed
    if args.epochs is not None:
        cfg["training"]["epochs"] = args.epochs
    t = cfg["training"]

    reader = read_dataset(args.data)
    model_cfg = model_from_config(cfg)
    if reader.num_samples != model_cfg.num_samples:
        raise ConfigError(
            f"dataset signal length {reader.num_samples} does not match the "
            f"configured model length {model_cfg.num_samples}"
        )

    if args.resume is not None:
        model, adam = load_checkpoint(args.resume)
        if model.cfg.num_samples != reader.num_samples:
            raise ConfigError(
                f"resume checkpoint length {model.cfg.num_samples} does not "
                f"match dataset length {reader.num_samples}"
            )
        if adam is None:
            adam = nn.AdamState(model.parameters(), learning_rate=float(t["learning_rate"]),
                                beta1=float(t["beta1"]), beta2=float(t["beta2"]),
                                epsilon=float(t["epsilon"]))
    else:
        model = build_model(model_cfg, seed=int(t["seed"]))
        adam = nn.AdamState(model.parameters(), learning_rate=float(t["learning_rate"]),
                            beta1=float(t["beta1"]), beta2=float(t["beta2"]),
                            epsilon=float(t["epsilon"]))

    holdout_fraction = float(t["holdout_fraction"])
    holdout_count = int(round(holdout_fraction * len(reader)))
    train_count = len(reader) - holdout_count
    if train_count < 1:
        raise ConfigError("holdout_fraction leaves no training examples")
    dirty, clean = reader.all_tensors()
    holdout = None
    if holdout_count > 0:
        holdout = (dirty[train_count:], clean[train_count:])

    result = train(
        model,
        dirty[:train_count],
        clean[:train_count],
        epochs=int(t["epochs"]),
        batch_size=int(t["batch_size"]),
        adam=adam,
        seed=int(t["seed"]),
        holdout=holdout,
        checkpoint_path=args.out_checkpoint,
        clip_grad_norm=None if t["clip_grad_norm"] is None else float(t["clip_grad_norm"]),
        verbose=not args.quiet,
    )
    # A run whose best epoch was never reached (e.g. 0 epochs) still persists.
    if int(t["epochs"]) == 0 or result.best_holdout_mse == float("inf"):
        save_checkpoint(model, args.out_checkpoint, adam=adam)

    if args.log_csv is not None:
        with open(args.log_csv, "w") as fh:
            fh.write(f"# {_config_echo(cfg)}\n")
            fh.write("epoch,train_mse,holdout_mse\n")
            for row in result.epochs:
                fh.write(f"{row.epoch},{row.train_mse:.8e},{row.holdout_mse:.8e}\n")
    final = result.epochs[-1].train_mse if result.epochs else float("nan")
    print(
        f"trained {train_count} examples for {t['epochs']} epochs: "
        f"final_train_mse={final:.6e} checkpoint={args.out_checkpoint} "
        f"adam_steps={adam.step}"
    )
    return 0


def cmd_eval(args) -> int:
    cfg = load_config(args.sweep_config, args.set)
    model, _ = load_checkpoint(args.checkpoint)
    sweep_cfg = sweep_from_config(cfg)
    rows = run_sweep(model, sweep_cfg)
    write_sweep_csv(rows, args.out_csv, header_comment=_config_echo(cfg))
    print(f"wrote {args.out_csv}: {len(rows)} SIR points x {sweep_cfg.num_trials} trials")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.sim_config, args.set)
    model, _ = load_checkpoint(args.checkpoint)
    sim_cfg = sim_from_config(cfg)
    result = run_landing_sim(model, sim_cfg)
    write_sim_csv(result, args.out_csv, header_comment=_config_echo(cfg))
    print(f"wrote {args.out_csv}: {len(result.records)} records")
    print(summary_text(result), end="")
    return 0


def cmd_inspect(args) -> int:
    try:
        with open(args.path, "rb") as fh:
            magic = fh.read(4)
    except OSError as exc:
        raise FileFormatError(f"cannot read {args.path}: {exc}") from exc

    if magic == DATASET_MAGIC:
        reader = read_dataset(args.path)
        print(f'dataset magic="AEDS" version=1')
        print(f"num_examples={reader.num_examples}")
        print(f"num_samples={reader.num_samples}")
        print(f"sample_rate_hz={reader.sample_rate_hz}")
        import os

        print(f"bytes={os.path.getsize(args.path)}")
    elif magic == b"AECW":
        model, adam = load_checkpoint(args.path)
        print(f'checkpoint magic="AECW" version=1')
        c = model.cfg
        print(
            f"num_samples={c.num_samples} kernel_size={c.kernel_size} "
            f"channels={c.channels} num_stages={c.num_stages} "
            f"pool_window={c.pool_window} latent_channels={c.resolved_latent_channels} "
            f"mixer_channels={c.resolved_mixer_channels} "
            f"activation_slope={c.activation_slope}"
        )
        print(f"parameters={model.num_parameters()}")
        print(f"compression_ratio={model.compression_ratio():.1f}")
        print(f"adam_state={'present (step %d)' % adam.step if adam else 'absent'}")
    else:
        raise FileFormatError(
            f"unrecognized magic {magic!r} in {args.path}; expected AEDS or AECW"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radalt",
        description="FMCW radar altimeter interference-mitigation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"radalt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a (clean, dirty) pair dataset")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", required=True, help="output dataset path (.aeds)")
    p.add_argument("--seed", type=int, default=None, help="override generation.master_seed")
    p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the autoencoder on a dataset")
    p.add_argument("--config", default=None)
    p.add_argument("--data", required=True, help="input dataset path")
    p.add_argument("--out-checkpoint", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, default=None, help="override training.epochs")
    p.add_argument("--seed", type=int, default=None, help="override training.seed")
    p.add_argument("--log-csv", default=None, help="per-epoch loss log CSV")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.add_argument("--quiet", action="store_true", help="suppress per-epoch output")
    p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the SIR evaluation sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sweep-config", default=None, help="JSON config file")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="run the end-to-end landing simulation")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sim-config", default=None, help="JSON config file")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("inspect", help="print dataset or checkpoint headers")
    p.add_argument("--path", required=True)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileFormatError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
