"""Command-line front end: denoise / solve / train / study / check.

Configs are strict JSON: unknown keys are rejected so typos fail loudly.
Machine-readable summaries go to stdout (one JSON object per run), human
logs to stderr. Exit codes: 0 success, 1 failed self-checks, 2 bad
configuration, 3 I/O failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dictlearn, experiments
from .denoisers import (
    AnalysisDenoiser,
    ConvergenceError,
    SynthesisDenoiser,
    WarmState,
    ad_apply,
    sd_apply,
)
from .linops import (
    CircularConv2D,
    DenseOperator,
    DimensionMismatchError,
    FilterBank2D,
    dot_test,
    identity,
    load_dense_csv,
    load_kernels_csv,
    save_kernels_csv,
)
from .pgm import read_pgm, write_pgm
from .prox import (
    L1,
    huber_grad,
    huber_value,
    moreau_envelope_grad,
    moreau_envelope_value,
    prox,
    prox_conjugate,
)
from .rng import stream
from .solvers import (
    ConfigurationError,
    SolverConfig,
    fb_pnp_analysis,
    fb_pnp_synthesis,
    fb_synthesis_direct,
    loris_verhoeven,
)

PAPER_DEFAULTS = experiments.FIXTURE_DIR / "paper_defaults.json"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class CommandError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _fail_config(msg: str):
    raise CommandError(EXIT_CONFIG, msg)


def _fail_io(msg: str):
    raise CommandError(EXIT_IO, msg)


def _load_config(path: str, command: str) -> dict:
    if path == "paper_defaults":
        path = PAPER_DEFAULTS
    try:
        with open(path) as f:
            cfg = json.load(f)
    except FileNotFoundError:
        _fail_io(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        _fail_config(f"config is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail_config("config root must be a JSON object")
    # the bundled profile keeps one section per command
    if "profiles" in cfg:
        sections = cfg["profiles"]
        if command not in sections:
            _fail_config(f"profile has no section for command {command!r}")
        cfg = sections[command]
    return cfg


def _validate(cfg: dict, schema: dict, command: str) -> dict:
    unknown = set(cfg) - set(schema)
    if unknown:
        _fail_config(f"{command}: unknown config keys {sorted(unknown)}")
    out = {}
    for key, (types, default) in schema.items():
        if key in cfg:
            value = cfg[key]
            allowed = types if isinstance(types, tuple) else (types,)
            bad = not isinstance(value, allowed)
            if isinstance(value, bool) and bool not in allowed:
                bad = True  # bool is an int subclass; reject it explicitly
            if bad:
                _fail_config(f"{command}: key {key!r} has wrong type")
            out[key] = value
        elif default is REQUIRED:
            _fail_config(f"{command}: missing required key {key!r}")
        else:
            out[key] = default
    return out


REQUIRED = object()
_NUM = (int, float)


def _read_vector_csv(path) -> np.ndarray:
    try:
        with open(path) as f:
            vals = [float(line.strip()) for line in f if line.strip()]
    except FileNotFoundError:
        _fail_io(f"input vector not found: {path}")
    except ValueError as exc:
        _fail_io(f"bad vector CSV {path}: {exc}")
    return np.array(vals)


def _write_vector_csv(path, v) -> None:
    with open(path, "w", newline="") as f:
        for x in np.asarray(v, dtype=float).ravel():
            f.write(repr(float(x)) + "\n")


def _load_dictionary(kind: str, path, image_shape, direction: str, dim=None):
    if kind == "identity":
        if dim is None:
            _fail_config("identity dictionary needs a known input length")
        return identity(dim)
    if kind == "tv":
        if image_shape is None:
            _fail_config("tv dictionary needs an image input")
        bank = experiments.tv_filter_bank(image_shape)
        if direction == "synthesis":
            return FilterBank2D(bank.kernels, image_shape, "synthesis")
        return bank
    if path is None:
        _fail_config(f"dictionary_kind {kind!r} needs a 'dictionary' path")
    try:
        if kind == "dense":
            return DenseOperator(load_dense_csv(path))
        if kind == "filter_bank":
            if image_shape is None:
                _fail_config("filter_bank dictionary needs an image input")
            return FilterBank2D(load_kernels_csv(path), image_shape, direction)
    except FileNotFoundError:
        _fail_io(f"dictionary file not found: {path}")
    except ValueError as exc:
        _fail_io(f"cannot parse dictionary {path}: {exc}")
    _fail_config(f"unknown dictionary_kind {kind!r}")


# ---------------------------------------------------------------------------
# denoise


DENOISE_SCHEMA = {
    "formulation": (str, "analysis"),
    "dictionary": (str, None),
    "dictionary_kind": (str, "tv"),
    "lambda": (_NUM, REQUIRED),
    "layers": (int, 20),
    "step": (_NUM, None),
    "input": (str, REQUIRED),
    "output": (str, REQUIRED),
    "seed": (int, 0),
}


def cmd_denoise(raw_cfg: dict, out_dir: Path, quiet: bool) -> dict:
    cfg = _validate(raw_cfg, DENOISE_SCHEMA, "denoise")
    if cfg["formulation"] not in ("analysis", "synthesis"):
        _fail_config(f"unknown formulation {cfg['formulation']!r}")
    as_image = cfg["input"].endswith(".pgm")
    if as_image:
        try:
            img = read_pgm(cfg["input"])
        except (FileNotFoundError, ValueError) as exc:
            _fail_io(f"cannot read image: {exc}")
        v, shape = img.ravel(), img.shape
    else:
        v, shape = _read_vector_csv(cfg["input"]), None

    direction = cfg["formulation"]
    op = _load_dictionary(cfg["dictionary_kind"], cfg["dictionary"], shape,
                          direction, dim=v.size)
    lam, layers = float(cfg["lambda"]), cfg["layers"]
    try:
        if cfg["formulation"] == "analysis":
            d = AnalysisDenoiser(op, lam, cfg["step"], layers)
            x, state = ad_apply(d, WarmState.zeros(d.coef_dim), v)
        else:
            d = SynthesisDenoiser(op, lam, cfg["step"], layers)
            x, state = sd_apply(d, WarmState.zeros(d.coef_dim), v)
    except DimensionMismatchError as exc:
        _fail_config(str(exc))
    if not np.all(np.isfinite(x)):
        raise CommandError(EXIT_NUMERICAL, "denoiser produced non-finite output")

    out_path = Path(cfg["output"])
    if out_path.parent != Path("."):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    if as_image:
        write_pgm(out_path, x.reshape(shape))
    else:
        _write_vector_csv(out_path, x)
    return {
        "command": "denoise",
        "formulation": cfg["formulation"],
        "layers": layers,
        "state_norm": float(np.linalg.norm(state.vec)),
        "output": str(out_path),
    }


# ---------------------------------------------------------------------------
# solve


SOLVE_SCHEMA = {
    "formulation": (str, "analysis"),
    "instance": (dict, REQUIRED),
    "dictionary": (str, None),
    "dictionary_kind": (str, None),
    "lambda": (_NUM, REQUIRED),
    "layers": (int, 1),
    "k_outer": (int, 500),
    "tau_factor": (_NUM, 1.8),
    "step": (_NUM, None),
    "warm_start": (bool, True),
    "record_every": (int, 1),
    "seed": (int, 0),
}

CS_INSTANCE_SCHEMA = {
    "kind": (str, REQUIRED),
    "n": (int, 50),
    "m": (int, 20),
    "s": (int, 100),
    "seed": (int, 0),
}

DEBLUR_INSTANCE_SCHEMA = {
    "kind": (str, REQUIRED),
    "image": (str, str(experiments.FIXTURE_DIR / "cameraplane_64.pgm")),
    "kernel": (str, str(experiments.FIXTURE_DIR / "motion_blur_9.csv")),
    "epsilon": (_NUM, 0.05),
    "seed": (int, 0),
}


def _build_instance(inst_cfg: dict, formulation: str, seed_override):
    kind = inst_cfg.get("kind")
    if kind == "cs":
        cfg = _validate(inst_cfg, CS_INSTANCE_SCHEMA, "solve.instance")
        seed = seed_override if seed_override is not None else cfg["seed"]
        inst, gamma_op, dict_op = experiments.gen_cs_instance(
            cfg["n"], cfg["m"], cfg["s"], seed)
        return inst, (gamma_op if formulation == "analysis" else dict_op), None
    if kind == "deblur":
        cfg = _validate(inst_cfg, DEBLUR_INSTANCE_SCHEMA, "solve.instance")
        seed = seed_override if seed_override is not None else cfg["seed"]
        try:
            inst = experiments.gen_deblur_instance(
                cfg["image"], cfg["kernel"], float(cfg["epsilon"]), seed)
        except (FileNotFoundError, ValueError) as exc:
            _fail_io(f"cannot build deblur instance: {exc}")
        return inst, None, inst.A.image_shape
    _fail_config(f"unknown instance kind {kind!r}")


def cmd_solve(raw_cfg: dict, out_dir: Path, quiet: bool,
              seed_override=None) -> dict:
    cfg = _validate(raw_cfg, SOLVE_SCHEMA, "solve")
    formulation = cfg["formulation"]
    if formulation not in ("analysis", "synthesis"):
        _fail_config(f"unknown formulation {formulation!r}")
    inst, generated_op, shape = _build_instance(cfg["instance"], formulation,
                                                seed_override)
    if generated_op is not None and cfg["dictionary_kind"] is None:
        op = generated_op
    else:
        kind = cfg["dictionary_kind"] or "tv"
        op = _load_dictionary(kind, cfg["dictionary"], shape, formulation)

    tau = float(cfg["tau_factor"]) / inst.A.spectral_norm() ** 2
    solver_cfg = SolverConfig(tau=tau, max_outer=cfg["k_outer"],
                              warm_start=cfg["warm_start"],
                              record_every=cfg["record_every"])
    lam = float(cfg["lambda"])
    try:
        if formulation == "analysis":
            d = AnalysisDenoiser(op, lam, cfg["step"], cfg["layers"])
            res = fb_pnp_analysis(inst.A, inst.y, d, solver_cfg,
                                  truth=inst.x_bar, peak=1.0)
        else:
            d = SynthesisDenoiser(op, lam, cfg["step"], cfg["layers"])
            res = fb_pnp_synthesis(inst.A, inst.y, d, solver_cfg,
                                   truth=inst.x_bar, peak=1.0)
    except ConfigurationError as exc:
        _fail_config(str(exc))
    except ConvergenceError as exc:
        raise CommandError(EXIT_NUMERICAL, str(exc))
    if not np.all(np.isfinite(res.x)):
        raise CommandError(EXIT_NUMERICAL, "solver produced non-finite iterates")

    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.csv"
    res.trace.to_csv(trace_path, include_wall=False)
    _write_vector_csv(out_dir / "solution.csv", res.x)
    summary = {
        "command": "solve",
        "formulation": formulation,
        "k_outer": cfg["k_outer"],
        "layers": cfg["layers"],
        "tau": tau,
        "final_objective": (res.trace.records[-1].objective
                            if res.trace.records else None),
        "trace": str(trace_path),
        "solution": str(out_dir / "solution.csv"),
    }
    with open(out_dir / "manifest.json", "w", newline="") as f:
        json.dump({"config": cfg, "summary": summary}, f, indent=2,
                  sort_keys=True, default=str)
        f.write("\n")
    return summary


# ---------------------------------------------------------------------------
# train


TRAIN_SCHEMA = {
    "mode": (str, "synthesis"),
    "dataset": (str, REQUIRED),
    "patch_size": (int, 32),
    "patch_count": (int, 16),
    "filters": (int, 8),
    "kernel_size": (int, 5),
    "lambda": (_NUM, 0.01),
    "layers": (int, 1),
    "epochs": (int, 100),
    "step_size": (_NUM, 0.003),
    "batch": (int, 16),
    "epsilon": (_NUM, 0.05),
    "seed": (int, 0),
    "init": (str, None),
    "output": (str, REQUIRED),
}


def load_patches(dataset_dir, patch_size: int, patch_count: int, seed: int):
    """Seeded patch sampling from a directory of PGM images."""
    paths = sorted(Path(dataset_dir).glob("*.pgm"))
    if not paths:
        _fail_io(f"no .pgm images found in {dataset_dir}")
    gen = stream(seed, "patches")
    patches = []
    for i in range(patch_count):
        path = paths[int(gen.uniform(1)[0] * len(paths)) % len(paths)]
        try:
            img = read_pgm(path)
        except ValueError as exc:
            _fail_io(str(exc))
        h, w = img.shape
        if h < patch_size or w < patch_size:
            _fail_config(f"{path}: image smaller than patch_size {patch_size}")
        r = int(gen.uniform(1)[0] * (h - patch_size + 1))
        c = int(gen.uniform(1)[0] * (w - patch_size + 1))
        patches.append(img[r:r + patch_size, c:c + patch_size].copy())
    return patches


def cmd_train(raw_cfg: dict, out_dir: Path, quiet: bool,
              seed_override=None) -> dict:
    cfg = _validate(raw_cfg, TRAIN_SCHEMA, "train")
    seed = seed_override if seed_override is not None else cfg["seed"]
    train_cfg = dictlearn.TrainConfig(
        mode=cfg["mode"], layers=cfg["layers"], lam=float(cfg["lambda"]),
        epochs=cfg["epochs"], step_size=float(cfg["step_size"]),
        batch=cfg["batch"], seed=seed, filter_count=cfg["filters"],
        kernel_size=cfg["kernel_size"], epsilon=float(cfg["epsilon"]),
    )
    patches = load_patches(cfg["dataset"], cfg["patch_size"],
                           cfg["patch_count"], seed)
    init = None
    if cfg["init"] is not None:
        try:
            init = dictlearn.DictParams(cfg["mode"],
                                        load_kernels_csv(cfg["init"]),
                                        patches[0].shape)
        except (FileNotFoundError, ValueError) as exc:
            _fail_io(f"cannot load init dictionary: {exc}")
    try:
        result = dictlearn.train_dictionary(patches, train_cfg, init=init)
    except ArithmeticError as exc:
        raise CommandError(EXIT_NUMERICAL, str(exc))
    out_path = Path(cfg["output"])
    if out_path.parent != Path("."):
        out_path.parent.mkdir(parents=True, exist_ok=True)
    save_kernels_csv(out_path, result.params.array)
    return {
        "command": "train",
        "mode": cfg["mode"],
        "epochs": cfg["epochs"],
        "initial_loss": float(result.losses[0]),
        "final_loss": float(result.losses[-1]),
        "output": str(out_path),
    }


# ---------------------------------------------------------------------------
# study


STUDY_CS_SCHEMA = {
    "kind": (str, REQUIRED),
    "n": (int, 50),
    "m": (int, 20),
    "s": (int, 100),
    "seed": (int, 0),
    "l_list": (list, [1, 20, 50, 100]),
    "k_outer": (int, 10 ** 4),
    "lambda_analysis": (_NUM, 0.003),
    "lambda_synthesis": (_NUM, 30.0),
    "tau_factor": (_NUM, 1.8),
    "sigma_factor": (_NUM, 1.8),
    "zeta_factor": (_NUM, 1.8),
}

STUDY_DEBLUR_SCHEMA = {
    "kind": (str, REQUIRED),
    "image": (str, str(experiments.FIXTURE_DIR / "cameraplane_64.pgm")),
    "kernel": (str, str(experiments.FIXTURE_DIR / "motion_blur_9.csv")),
    "epsilon": (_NUM, 0.05),
    "seed": (int, 0),
    "lambdas": (list, [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]),
    "layers_list": (list, [1, 20]),
    "k_outer": (int, 200),
    "tau_factor": (_NUM, 0.5),
    "sigma_factor": (_NUM, 1.0),
    "dictionary": (str, "tv"),
}


def cmd_study(raw_cfg: dict, out_dir: Path, quiet: bool,
              seed_override=None) -> dict:
    kind = raw_cfg.get("kind")
    if kind == "cs_equivalence":
        cfg = _validate(raw_cfg, STUDY_CS_SCHEMA, "study")
        seed = seed_override if seed_override is not None else cfg["seed"]
        study_cfg = experiments.EquivalenceStudyConfig(
            n=cfg["n"], m=cfg["m"], s=cfg["s"], seed=seed,
            l_list=tuple(cfg["l_list"]), k_outer=cfg["k_outer"],
            lam_analysis=float(cfg["lambda_analysis"]),
            lam_synthesis=float(cfg["lambda_synthesis"]),
            tau_factor=float(cfg["tau_factor"]),
            sigma_factor=float(cfg["sigma_factor"]),
            zeta_factor=float(cfg["zeta_factor"]),
        )
        result = experiments.run_equivalence_study(study_cfg, out_dir)
        return {
            "command": "study",
            "kind": kind,
            "runs": len(result.runs),
            "out": str(out_dir),
        }
    if kind == "deblur":
        cfg = _validate(raw_cfg, STUDY_DEBLUR_SCHEMA, "study")
        seed = seed_override if seed_override is not None else cfg["seed"]
        study_cfg = experiments.DeblurStudyConfig(
            image=cfg["image"], kernel=cfg["kernel"],
            epsilon=float(cfg["epsilon"]), seed=seed,
            lambdas=tuple(cfg["lambdas"]),
            layers_list=tuple(cfg["layers_list"]), k_outer=cfg["k_outer"],
            tau_factor=float(cfg["tau_factor"]),
            sigma_factor=float(cfg["sigma_factor"]),
            dictionary=cfg["dictionary"],
        )
        try:
            result = experiments.run_deblur_study(study_cfg, out_dir)
        except (FileNotFoundError, ValueError) as exc:
            _fail_io(f"deblur study inputs: {exc}")
        return {
            "command": "study",
            "kind": kind,
            "runs": len(result.runs),
            "observed_psnr": result.observed_psnr,
            "best_psnr": max(r.final_psnr for r in result.runs),
            "out": str(out_dir),
        }
    _fail_config(f"unknown study kind {kind!r}")


# ---------------------------------------------------------------------------
# check


CHECK_SCHEMA = {
    "tolerance_scale": (_NUM, 1.0),
    "dictionary": (str, None),
    "seed": (int, 0),
}


def _check_suite(tol_scale: float, seed: int, extra_op=None):
    """Invariant self-tests; returns [(name, ok, measured, allowed)]."""
    results = []

    def record(name, measured, allowed):
        results.append((name, bool(measured <= allowed), measured, allowed))

    gen = stream(seed, "check")
    ops = {
        "dense": DenseOperator(gen.normal_matrix(12, 8)),
        "conv2d": CircularConv2D(gen.normal_matrix(3, 3) / 9.0, (8, 8)),
        "filter_bank": FilterBank2D(
            gen.normal(4 * 9).reshape(4, 3, 3) / 3.0, (8, 8)),
    }
    if extra_op is not None:
        ops["dictionary_file"] = extra_op
    for name, op in ops.items():
        record(f"dot_test_{name}", dot_test(op, 50, seed), 1e-10 * tol_scale)

    v = gen.normal(40)
    p = prox(L1, 0.7, v)
    q = prox_conjugate(L1, 0.7, v)
    record("moreau_decomposition", float(np.max(np.abs(p + q - v))), 0.0)
    lam, mu = 0.8, 2.5
    x = gen.normal(40)
    record("envelope_vs_huber",
           abs(moreau_envelope_value(L1, lam, mu, x) - huber_value(lam, mu, x)),
           1e-12 * tol_scale)
    h = 1e-6
    grad = moreau_envelope_grad(L1, lam, mu, x)
    fd = np.array([
        (moreau_envelope_value(L1, lam, mu, x + h * e)
         - moreau_envelope_value(L1, lam, mu, x - h * e)) / (2 * h)
        for e in np.eye(x.size)
    ])
    record("envelope_grad_fd",
           float(np.max(np.abs(grad - fd)) / (1 + np.max(np.abs(grad)))),
           1e-6 * tol_scale)
    record("envelope_grad_vs_huber",
           float(np.max(np.abs(grad - huber_grad(lam, mu, x)))),
           1e-12 * tol_scale)

    # one-layer PnP vs reference iterations on a small seeded instance
    inst, gamma_op, dict_op = experiments.gen_cs_instance(20, 8, 40, seed)
    tau = 1.8 / inst.A.spectral_norm() ** 2
    sigma = 0.9 / gamma_op.spectral_norm() ** 2
    zeta = 1.8 / dict_op.spectral_norm() ** 2
    lam_cs = 0.05
    xs_pnp, xs_lv = [], []
    fb_pnp_analysis(inst.A, inst.y, AnalysisDenoiser(gamma_op, lam_cs, sigma, 1),
                    SolverConfig(tau=tau, max_outer=100), with_objective=False,
                    callback=lambda k, x_, u_: xs_pnp.append(x_))
    loris_verhoeven(inst.A, inst.y, gamma_op, L1, lam_cs, tau, sigma, 100,
                    with_objective=False,
                    callback=lambda k, x_, u_: xs_lv.append(x_))
    gap = max(np.max(np.abs(a - b)) / (1 + np.max(np.abs(b)))
              for a, b in zip(xs_pnp, xs_lv))
    record("analysis_one_layer_equivalence", gap, 1e-10 * tol_scale)

    zs_pnp, zs_fb = [], []
    fb_pnp_synthesis(inst.A, inst.y, SynthesisDenoiser(dict_op, lam_cs, zeta, 1),
                     SolverConfig(tau=tau, max_outer=100), with_objective=False,
                     callback=lambda k, x_, z_: zs_pnp.append(z_))
    fb_synthesis_direct(inst.A, dict_op, inst.y, L1, lam_cs, tau * zeta, 100,
                        with_objective=False,
                        callback=lambda k, x_, z_: zs_fb.append(z_))
    gap = max(np.max(np.abs(a - b)) / (1 + np.max(np.abs(b)))
              for a, b in zip(zs_pnp, zs_fb))
    record("synthesis_one_layer_equivalence", gap, 1e-10 * tol_scale)

    m = gen.normal_matrix(10, 6)
    op = DenseOperator(m)
    svd_top = float(np.linalg.svd(m, compute_uv=False)[0])
    record("spectral_norm_vs_svd",
           abs(op.spectral_norm() - svd_top) / svd_top, 1e-6 * tol_scale)
    return results


def cmd_check(raw_cfg: dict, out_dir: Path, quiet: bool,
              seed_override=None) -> dict:
    cfg = _validate(raw_cfg, CHECK_SCHEMA, "check")
    seed = seed_override if seed_override is not None else cfg["seed"]
    extra_op = None
    if cfg["dictionary"] is not None:
        try:
            kernels = load_kernels_csv(cfg["dictionary"])
        except FileNotFoundError:
            _fail_io(f"dictionary file not found: {cfg['dictionary']}")
        except ValueError as exc:
            _fail_io(f"corrupted dictionary file: {exc}")
        extra_op = FilterBank2D(kernels, (16, 16))
    results = _check_suite(float(cfg["tolerance_scale"]), seed, extra_op)
    if not quiet:
        width = max(len(name) for name, *_ in results)
        for name, ok, measured, allowed in results:
            print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  "
                  f"measured {measured:.3e}  allowed {allowed:.3e}",
                  file=sys.stderr)
    summary = {
        "command": "check",
        "checks": [
            {"name": name, "ok": ok, "measured": measured, "allowed": allowed}
            for name, ok, measured, allowed in results
        ],
        "ok": all(ok for _, ok, *_ in results),
    }
    return summary


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="proxpnp",
        description="Unrolled dictionary denoisers in FB plug-and-play solvers",
    )
    parser.add_argument("command",
                        choices=["denoise", "solve", "train", "study", "check"])
    parser.add_argument("--config", required=True,
                        help="JSON config path, or 'paper_defaults'")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config, args.command)
        out_dir = Path(args.out)
        if args.command == "denoise":
            if args.seed is not None:
                cfg = dict(cfg, seed=args.seed)
            summary = cmd_denoise(cfg, out_dir, args.quiet)
        elif args.command == "solve":
            summary = cmd_solve(cfg, out_dir, args.quiet, args.seed)
        elif args.command == "train":
            summary = cmd_train(cfg, out_dir, args.quiet, args.seed)
        elif args.command == "study":
            summary = cmd_study(cfg, out_dir, args.quiet, args.seed)
        else:
            summary = cmd_check(cfg, out_dir, args.quiet, args.seed)
    except CommandError as exc:
        print(f"proxpnp {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ConfigurationError as exc:
        print(f"proxpnp {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(json.dumps(summary, sort_keys=True))
    if args.command == "check" and not summary["ok"]:
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
