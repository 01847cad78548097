"""Command line entry point: ``train``, ``denoise``, ``eval`` and ``ablate``.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from ..signal import StftConfig, WavError, read_wav, stft_image, write_wav
from ..swin import SwinConfig
from ..train import (
    CheckpointError,
    ConfigError,
    DataValidationError,
    TrainConfig,
    Trainer,
    ablate,
    evaluate_pair,
    identity_denoiser,
    load_checkpoint,
    load_pair_dirs,
    read_checkpoint,
    save_checkpoint,
    summarize,
    synthetic_pairs,
)
from ..train.checkpoint import config_diff
from .config import RunConfig
from .images import export_images

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2
TOY_SAMPLE_RATE = 8000


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    flags = {
        "seed": args.seed,
        "core": getattr(args, "core", None),
        "epochs": getattr(args, "epochs", None),
        "max_steps": getattr(args, "max_steps", None),
        "batch_size": getattr(args, "batch_size", None),
        "learning_rate": getattr(args, "lr", None),
        "run_dir": getattr(args, "run_dir", None),
        "noisy_dir": getattr(args, "noisy_dir", None),
        "clean_dir": getattr(args, "clean_dir", None),
        "toy_pairs": getattr(args, "toy", None),
    }
    out.update({k: str(v) for k, v in flags.items() if v is not None})
    if getattr(args, "no_image_loss", False):
        out["enable_image_loss"] = "false"
    if getattr(args, "no_audio_loss", False):
        out["enable_audio_loss"] = "false"
    return out


def _pairs(rc: RunConfig, write_to: Path | None = None):
    if rc.toy_pairs:
        pairs = synthetic_pairs(rc.toy_pairs, length=32 * rc.stft.image_size, sample_rate=TOY_SAMPLE_RATE,
                                n_fft=rc.stft.n_fft, seed=rc.train.seed)
        if write_to is not None:
            for sub in ("noisy", "clean"):
                (write_to / sub).mkdir(parents=True, exist_ok=True)
            for p in pairs:
                write_wav(p.noisy, write_to / "noisy" / p.name)
                write_wav(p.clean, write_to / "clean" / p.name)
        return pairs
    if not rc.train.noisy_dir or not rc.train.clean_dir:
        raise ConfigError("noisy_dir", "set noisy_dir and clean_dir, or toy_pairs > 0")
    return load_pair_dirs(rc.train.noisy_dir, rc.train.clean_dir)


def _table(rows: list[dict]) -> str:
    lines = [f"{'clip':<24} {'SDR dB':>9} {'noisy dB':>9} {'SSIM':>7}"]
    for r in rows:
        lines.append(f"{r['name']:<24} {r['sdr']:>9.3f} {r['sdr_noisy']:>9.3f} {r['ssim']:>7.3f}")
    return "\n".join(lines)


def _json_safe(row: dict) -> dict:
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in row.items()}


def trainer_from_checkpoint(path: str | Path, expect: RunConfig | None = None) -> Trainer:
    header, _ = read_checkpoint(path)
    cfg = header["config"]
    if expect is not None:
        mine = {"model": expect.model.to_dict(), "stft": expect.stft.to_dict()}
        diff = config_diff({"model": cfg["model"], "stft": cfg["stft"]}, mine)
        if diff:
            raise CheckpointError("checkpoint and supplied config differ:\n  " + "\n  ".join(diff))
    trainer = Trainer(TrainConfig(**cfg["train"]), SwinConfig(**cfg["model"]), StftConfig(**cfg["stft"]))
    load_checkpoint(trainer, path)
    return trainer


def cmd_train(args) -> int:
    rc = RunConfig.load(args.config, _overrides(args))
    run = Path(rc.run_dir)
    run.mkdir(parents=True, exist_ok=True)
    (run / "config.resolved").write_text(rc.dump())
    pairs = _pairs(rc, write_to=run / "data" if rc.toy_pairs else None)
    trainer = Trainer(rc.train, rc.model, rc.stft, pairs)
    if args.resume:
        load_checkpoint(trainer, args.resume)
    ckpt_dir = run / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    start = time.perf_counter()
    with open(run / "log.jsonl", "a") as log:
        def on_step(step, report, dt):
            epoch = (step - 1) // trainer.steps_per_epoch
            log.write(report.to_record(step=step, epoch=epoch, step_time=round(dt, 6),
                                       wall_time=round(time.perf_counter() - start, 6)) + "\n")
            log.flush()
            if step == 1 or step % max(1, args.log_every) == 0 or step == trainer.total_steps:
                _err(f"step {step}/{trainer.total_steps} total={report.total:.4f} "
                     f"im={report.l_im_total:.4f} rec={report.l_r:.4f}")
            every = rc.train.checkpoint_every
            if every and step % every == 0:
                save_checkpoint(trainer, ckpt_dir / f"step_{step:06d}.ckpt")

        trainer.run(on_step=on_step)
    save_checkpoint(trainer, ckpt_dir / "final.ckpt")
    rows = trainer.evaluate(pairs)
    agg = summarize(rows)
    (run / "metrics.json").write_text(json.dumps({"clips": [_json_safe(r) for r in rows],
                                                  "aggregate": _json_safe(agg)}, indent=2))
    print(_table(rows + [agg]))
    print(f"run directory: {run}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    expect = RunConfig.load(args.config, _overrides(args)) if args.config else None
    trainer = trainer_from_checkpoint(args.checkpoint, expect)
    clip = read_wav(args.input)
    audio, noisy, gen = trainer.denoise(clip)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    write_wav(audio, args.output)
    if args.export_images is not None:
        out_dir = Path(args.export_images or Path(args.output).parent)
        prefix = Path(args.output).stem
        images = {"generated": gen.image}
        if args.clean:
            clean = read_wav(args.clean)
            if len(clean.samples) != len(clip.samples):
                raise DataValidationError(f"{args.clean}: length {len(clean.samples)} != {len(clip.samples)}")
            images = {"noisy": noisy.image, "generated": gen.image,
                      "clean": stft_image(clean, trainer.stft_cfg, trainer.dtype).image}
        for p in export_images(out_dir, prefix, images):
            print(p)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pairs_dir = Path(args.pairs_dir)
    pairs = load_pair_dirs(pairs_dir / "noisy", pairs_dir / "clean")
    if args.baseline == "noisy":
        rc = RunConfig.load(args.config, _overrides(args))
        stft_cfg, fn = rc.stft, identity_denoiser(rc.stft)
    else:
        if not args.checkpoint:
            raise ConfigError("--checkpoint", "required unless --baseline noisy")
        expect = RunConfig.load(args.config, _overrides(args)) if args.config else None
        trainer = trainer_from_checkpoint(args.checkpoint, expect)
        stft_cfg, fn = trainer.stft_cfg, trainer.denoise
    rows = []
    for i, p in enumerate(pairs, 1):
        rows.append(evaluate_pair(p, fn, stft_cfg))
        _err(f"[{i}/{len(pairs)}] {p.name} sdr={rows[-1]['sdr']:.3f}")
    agg = summarize(rows)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w") as f:
            for r in rows + [agg]:
                f.write(json.dumps(_json_safe(r)) + "\n")
    print(_table(rows + [agg]))
    return EXIT_OK


def cmd_ablate(args) -> int:
    rc = RunConfig.load(args.config, _overrides(args))
    run = Path(rc.run_dir)
    run.mkdir(parents=True, exist_ok=True)
    (run / "config.resolved").write_text(rc.dump())
    result = ablate(rc.train, rc.model, rc.stft, _pairs(rc), log=_err)
    text = result.render()
    (run / "ablation.txt").write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cxdenoise", description="Complex spectro-image speech denoising")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, training: bool):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int)
        if training:
            p.add_argument("--core", choices=("swin", "unet"))
            p.add_argument("--no-image-loss", action="store_true")
            p.add_argument("--no-audio-loss", action="store_true")
            p.add_argument("--epochs", type=int)
            p.add_argument("--max-steps", type=int)
            p.add_argument("--batch-size", type=int)
            p.add_argument("--lr", type=float)
            p.add_argument("--run-dir")
            p.add_argument("--noisy-dir")
            p.add_argument("--clean-dir")
            p.add_argument("--toy", type=int, metavar="N", help="train on N synthetic pairs")

    p = sub.add_parser("train", help="train a model")
    common(p, True)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--log-every", type=int, default=10)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("denoise", help="denoise one WAV file")
    common(p, False)
    p.add_argument("checkpoint")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--export-images", nargs="?", const="", metavar="DIR",
                   help="write real/imag/abs PNGs (default: next to the output)")
    p.add_argument("--clean", help="clean reference, adds noisy and clean images to the export")
    p.set_defaults(fn=cmd_denoise)

    p = sub.add_parser("eval", help="score a checkpoint on a directory with noisy/ and clean/")
    common(p, False)
    p.add_argument("pairs_dir")
    p.add_argument("--checkpoint")
    p.add_argument("--baseline", choices=("noisy",), help="score the unprocessed noisy input instead")
    p.add_argument("--out", help="write per-clip and aggregate rows as JSON lines")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="run the six {U,C} x {I,A,I+A} cells")
    common(p, True)
    p.set_defaults(fn=cmd_ablate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DataValidationError, CheckpointError, WavError, FileNotFoundError) as e:
        _err(f"error: {e}")
        return EXIT_INVALID
    except Exception as e:  # noqa: BLE001 - every other failure maps to the runtime exit code
        _err(f"error: {type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
