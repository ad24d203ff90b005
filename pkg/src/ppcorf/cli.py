"""``ppcorf`` command line.

Every option may also come from a ``key=value`` config file (``--config``);
command-line flags beat the file, the file beats built-in defaults.  Each run
writes a JSON manifest next to its outputs holding the resolved settings and
input/output hashes; ``ppcorf replay MANIFEST`` re-runs it.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ppcorf import __version__
from ppcorf._io import atomic_write

log = logging.getLogger("ppcorf")

REQUIRED = object()


class UsageError(Exception):
    pass


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _beta(text):
    v = str(text).strip()
    if v == "auto":
        return "auto"
    b = float(v)
    if b < 0:
        raise ValueError("beta must be >= 0")
    return b


# (flag, type, default, help); defaults are applied after config-file merging
BANK_OPTS = [
    ("sigma-start", float, 1.0, "first LGN scale"),
    ("sigma-end", float, 5.0, "last LGN scale"),
    ("sigma-step", float, 0.25, "scale step"),
    ("orientations", int, 12, "orientations evenly covering 360 degrees"),
    ("k", float, 1.8, "pull inhibition strength"),
    ("beta", _beta, "auto", "pull separation in pixels, or 'auto' (= sigma)"),
]
CELL_OPTS = [
    ("radii", str, "1,2", "circle radii in units of sigma"),
    ("threshold", float, 0.2, "local-maximum threshold, fraction of circle max"),
    ("alpha", float, 0.1, "blur growth with radius"),
    ("sigma0-factor", float, 0.25, "base blur as a fraction of sigma"),
]

COMMANDS = {
    "configure": [("sigma", float, 2.0, "LGN scale"), *CELL_OPTS,
                  ("out", str, REQUIRED, "output cell JSON")],
    "respond": [
        ("image", str, REQUIRED, "input PNG/PGM"),
        ("cell", str, "", "cell JSON (default: configure at --sigma)"),
        ("sigma", float, 2.0, "LGN scale when no --cell is given"),
        ("stage", str, "cell", "lgn or cell"),
        ("orientations", int, 12, "orientations evenly covering 360 degrees"),
        ("pushpull", _bool, False, "also compute pull and push-pull maps"),
        ("k", float, 1.8, "pull inhibition strength"),
        ("beta", _beta, "auto", "pull separation in pixels, or 'auto'"),
        ("outdir", str, "respond_out", "output directory"),
    ],
    "bank": [("image", str, REQUIRED, "input PNG/PGM"), ("out", str, REQUIRED, "tensor file"),
             *BANK_OPTS, ("figure", _bool, True, "write a channel figure next to the tensor")],
    "noise-sweep": [
        ("images", str, REQUIRED, "directory of PNG/PGM images, or 'builtin'"),
        ("sigmas", str, "0.1,0.2,0.3", "noise std values on the [0,1] scale"),
        ("percents", str, "10..100:10", "corrupted-pixel percentages"),
        ("seed", int, 42, "base seed"),
        ("out", str, REQUIRED, "output CSV"),
        *BANK_OPTS,
    ],
    "probe": [
        ("dataset", str, "synthetic", "only 'synthetic' is built in"),
        ("features", str, "corf", "corf or raw"),
        ("seed", int, 7, "dataset and training seed"),
        ("n-per-class", int, 300, "images per class"),
        ("epochs", int, 200, "maximum epochs (cosine period)"),
        ("patience", int, 20, "early-stopping patience in epochs"),
        ("batch-size", int, 128, "minibatch size"),
        ("lr", float, 0.2, "initial learning rate"),
        ("momentum", float, 0.9, "SGD momentum"),
        ("weight-decay", float, 5e-4, "L2 weight decay"),
        ("out", str, REQUIRED, "report JSON"),
        *BANK_OPTS,
    ],
    "metrics": [("pred", str, REQUIRED, "predicted labels CSV"),
                ("true", str, REQUIRED, "true labels CSV"),
                ("out", str, "", "optional JSON output")],
    "selfcheck": [],
}


def _key(flag):
    return flag.replace("-", "_")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ppcorf", description="Push-pull CORF feature extraction."
    )
    parser.add_argument("--version", action="version", version=f"ppcorf {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key=value config file")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (env CORF_THREADS, default 1)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name, parents=[common])
        for flag, typ, default, help_ in opts:
            shown = "required" if default is REQUIRED else f"default {default}"
            if typ is _bool:
                p.add_argument(f"--{flag}", nargs="?", const=True, type=_bool, default=None,
                               help=f"{help_} ({shown})")
            else:
                p.add_argument(f"--{flag}", type=typ, default=None, help=f"{help_} ({shown})")
    rp = sub.add_parser("replay", parents=[common], help="re-run a manifest")
    rp.add_argument("manifest")
    return parser


def read_config(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[_key(k.strip())] = v.strip()
    return out


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge flag > config file > default for every option of ``command``."""
    file_vals = read_config(args.config) if args.config else {}
    resolved = {}
    for flag, typ, default, _ in COMMANDS[command]:
        key = _key(flag)
        val = getattr(args, key, None)
        if val is None and key in file_vals:
            try:
                val = typ(file_vals[key])
            except ValueError as exc:
                raise UsageError(f"config value {key}={file_vals[key]!r}: {exc}") from exc
        if val is None:
            if default is REQUIRED:
                raise UsageError(f"{command}: --{flag} is required")
            val = default
        resolved[key] = val
    threads = args.threads
    if threads is None and "threads" in file_vals:
        threads = int(file_vals["threads"])
    if threads is None:
        threads = int(os.environ.get("CORF_THREADS", "1") or 1)
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    resolved["threads"] = threads
    return resolved


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_text(path, text: str):
    with atomic_write(path, "w") as fh:
        fh.write(text)


def write_manifest(command, cfg, inputs, outputs, manifest_path, extra=None):
    manifest = {
        "tool": "ppcorf",
        "version": __version__,
        "command": command,
        "config": cfg,
        "inputs": {str(p): _sha256(p) for p in inputs if Path(p).is_file()},
        "outputs": {str(p): _sha256(p) for p in outputs if Path(p).is_file()},
    }
    if extra:
        manifest.update(extra)
    write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    cfg_lines = [f"# resolved settings for `ppcorf {command}`"]
    cfg_lines += [f"{k}={v}" for k, v in sorted(cfg.items())]
    write_text(Path(manifest_path).with_suffix(".cfg"), "\n".join(cfg_lines) + "\n")
    return manifest


def _bank_from(cfg):
    from ppcorf.bank import build_bank, orientation_grid, sigma_grid

    return build_bank(
        sigma_grid(cfg["sigma_start"], cfg["sigma_end"], cfg["sigma_step"]),
        orientation_grid(cfg["orientations"]),
        k=cfg["k"],
        beta_policy=cfg["beta"],
    )


def _cell_kwargs(cfg):
    return dict(
        radius_factors=tuple(_floats(cfg["radii"])),
        threshold=cfg["threshold"],
        sigma0=cfg["sigma0_factor"] * cfg["sigma"],
        alpha=cfg["alpha"],
    )


def cmd_configure(cfg):
    from ppcorf.corf import configure

    cell = configure(cfg["sigma"], **_cell_kwargs(cfg))
    out = Path(cfg["out"])
    write_text(out, json.dumps(cell.to_dict(), indent=2) + "\n")
    print(f"configured {len(cell.subunits)} sub-units at sigma={cfg['sigma']:g} -> {out}")
    return [], [out], out.with_suffix(".manifest.json"), None


def cmd_respond(cfg):
    from ppcorf.corf import CorfCell, SubunitMaps, configure, orientation_superposition, rotate_set
    from ppcorf.imagecore import load_grayscale, rescale, save_map
    from ppcorf.lgn import lgn_pair
    from ppcorf.plotting import panel_figure
    from ppcorf.pushpull import make_pushpull, pushpull_from_maps
    from ppcorf.bank import orientation_grid, resolve_beta

    image = load_grayscale(cfg["image"])
    outdir = Path(cfg["outdir"])
    outputs = []
    inputs = [cfg["image"]]

    def emit(name, values):
        scaled, scale = rescale(values)
        path = outdir / f"{name}.png"
        save_map(scaled, path)
        outputs.append(path)
        print(f"{path}\tscale={scale:.9g}")

    if cfg["stage"] == "lgn":
        on, off = lgn_pair(image, cfg["sigma"])
        emit("lgn_on", on)
        emit("lgn_off", off)
    elif cfg["stage"] == "cell":
        if cfg["cell"]:
            cell = CorfCell.from_dict(json.loads(Path(cfg["cell"]).read_text()))
            inputs.append(cfg["cell"])
        else:
            cell = configure(cfg["sigma"])
        maps = SubunitMaps(image, cell.source_sigma)
        orients = orientation_grid(cfg["orientations"])
        per = []
        for psi in orients:
            r = maps.cell(rotate_set(cell, psi))
            per.append(r)
            emit(f"orient_{round(math.degrees(psi)):03d}", r)
        push = orientation_superposition(per)
        emit("superposed", push)
        if cfg["pushpull"]:
            pp = make_pushpull(cell, resolve_beta(cfg["beta"], cell.source_sigma), cfg["k"])
            pull = orientation_superposition([maps.cell(pp.rotated(p).pull) for p in orients])
            combined = orientation_superposition(
                [pushpull_from_maps(maps, pp.rotated(p)) for p in orients]
            )
            emit("push", push)
            emit("pull", pull)
            emit("pushpull", combined)
            fig = outdir / "pushpull_panel.png"
            panel_figure({"push": push, "pull": pull, f"push-pull k={cfg['k']:g}": combined}, fig)
            outputs.append(fig)
    else:
        raise UsageError(f"--stage must be 'lgn' or 'cell', got {cfg['stage']!r}")
    return inputs, outputs, outdir / "manifest.json", None


def cmd_bank(cfg):
    from ppcorf.bank import apply_bank, export_tensor
    from ppcorf.imagecore import load_grayscale
    from ppcorf.plotting import channel_grid_figure

    image = load_grayscale(cfg["image"])
    bank = _bank_from(cfg)
    tensor = apply_bank(image, bank, threads=cfg["threads"])
    out = Path(cfg["out"])
    export_tensor(tensor, out)
    outputs = [out]
    if cfg["figure"]:
        fig = out.with_suffix(".png")
        channel_grid_figure(tensor.data, bank.sigmas, fig)
        outputs.append(fig)
    print(f"{out}\t{tensor.height}x{tensor.width}x{tensor.channels}")
    return [cfg["image"]], outputs, out.with_suffix(".manifest.json"), None


def _load_image_dir(spec):
    from ppcorf.imagecore import load_grayscale
    from ppcorf.synthetic import fixture_suite

    if spec == "builtin":
        return fixture_suite(), []
    d = Path(spec)
    if not d.is_dir():
        raise FileNotFoundError(f"image directory not found: {d}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in (".png", ".pgm"))
    if not files:
        raise FileNotFoundError(f"no PNG/PGM images in {d}")
    return {p.name: load_grayscale(p) for p in files}, files


def cmd_noise_sweep(cfg):
    from ppcorf.noise import RNG_NAME, mean_curves, parse_percents, sweep
    from ppcorf.plotting import noise_sweep_figure

    images, files = _load_image_dir(cfg["images"])
    sigmas = _floats(cfg["sigmas"])
    percents = parse_percents(cfg["percents"])
    rows = sweep(images, _bank_from(cfg), sigmas, percents, cfg["seed"], cfg["threads"])
    out = Path(cfg["out"])
    fields = ["image", "sigma_noise", "percent", "stability", "clean_peak", "noisy_peak"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({**r, "percent": f"{100 * r['percent']:g}",
                         "stability": f"{r['stability']:.9f}",
                         "clean_peak": f"{r['clean_peak']:.9g}",
                         "noisy_peak": f"{r['noisy_peak']:.9g}"})
    write_text(out, buf.getvalue())
    curves = mean_curves(rows)
    fig = out.with_suffix(".png")
    noise_sweep_figure(curves, fig)
    for s, pts in curves.items():
        print(f"sigma_noise={s:g}\t" + "\t".join(f"{100 * p:g}%:{v:.4f}" for p, v in pts))
    return files, [out, fig], out.with_suffix(".manifest.json"), {"rng": RNG_NAME}


def cmd_probe(cfg):
    from ppcorf.bank import apply_bank_many
    from ppcorf.plotting import training_figure
    from ppcorf.probe import ProbeConfig, evaluate, train_probe
    from ppcorf.synthetic import oriented_bars_dataset

    if cfg["dataset"] != "synthetic":
        raise UsageError("only --dataset synthetic is built in")
    images, labels = oriented_bars_dataset(cfg["n_per_class"], seed=cfg["seed"])
    if cfg["features"] == "corf":
        feats = np.stack([t.data for t in apply_bank_many(images, _bank_from(cfg), cfg["threads"])])
    elif cfg["features"] == "raw":
        feats = images
    else:
        raise UsageError("--features must be 'corf' or 'raw'")
    pc = ProbeConfig(
        learning_rate=cfg["lr"], momentum=cfg["momentum"], weight_decay=cfg["weight_decay"],
        batch_size=cfg["batch_size"], max_epochs=cfg["epochs"],
        early_stop_patience=cfg["patience"], seed=cfg["seed"],
    )
    model = train_probe(feats, labels, pc)
    tr, va = model.train_indices, model.val_indices
    val = evaluate(model, feats[va], labels[va])
    train = evaluate(model, feats[tr], labels[tr])
    report = {
        "config": asdict(pc),
        "features": cfg["features"],
        "epochs": model.history,
        "validation": val.to_dict(),
        "train": train.to_dict(),
    }
    out = Path(cfg["out"])
    write_text(out, json.dumps(report, indent=2) + "\n")
    fig = out.with_suffix(".png")
    training_figure(model.history, fig)
    print(f"{cfg['features']}\tval_accuracy={val.accuracy:.4f}\tval_macro_f1={val.macro_f1:.4f}")
    return [], [out, fig], out.with_suffix(".manifest.json"), None


def read_labels(path) -> np.ndarray:
    """Integer labels from a CSV: last column of each row, optional header row."""
    rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r]
    vals = []
    for i, r in enumerate(rows):
        try:
            vals.append(int(r[-1].strip()))
        except ValueError:
            if i == 0:
                continue
            raise ValueError(f"{path}: row {i + 1} is not an integer label: {r!r}")
    return np.asarray(vals, dtype=np.int64)


def cmd_metrics(cfg):
    from ppcorf.probe import metrics_from_labels

    m = metrics_from_labels(read_labels(cfg["true"]), read_labels(cfg["pred"]))
    text = json.dumps(m.to_dict(), indent=2) + "\n"
    sys.stdout.write(text)
    outputs = []
    if cfg["out"]:
        write_text(cfg["out"], text)
        outputs.append(Path(cfg["out"]))
        return [cfg["pred"], cfg["true"]], outputs, Path(cfg["out"]).with_suffix(".manifest.json"), None
    return [cfg["pred"], cfg["true"]], outputs, None, None


def cmd_selfcheck(cfg):
    from ppcorf.checks import run_all

    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}\t{name}\t{detail}")
    if not all(ok for _, ok, _ in results):
        raise CheckFailed()
    return [], [], None, None


class CheckFailed(Exception):
    pass


HANDLERS = {
    "configure": cmd_configure,
    "respond": cmd_respond,
    "bank": cmd_bank,
    "noise-sweep": cmd_noise_sweep,
    "probe": cmd_probe,
    "metrics": cmd_metrics,
    "selfcheck": cmd_selfcheck,
}


def run(command, cfg):
    inputs, outputs, manifest_path, extra = HANDLERS[command](cfg)
    if manifest_path is not None:
        write_manifest(command, cfg, inputs, outputs, manifest_path, extra)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            manifest = json.loads(Path(args.manifest).read_text())
            command, cfg = manifest["command"], manifest["config"]
            if args.threads is not None:
                cfg["threads"] = args.threads
        else:
            command = args.command
            cfg = resolve(command, args)
        log.info("running %s with %s", command, cfg)
        run(command, cfg)
    except UsageError as exc:
        print(f"ppcorf: usage error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed:
        return 1
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"ppcorf: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
