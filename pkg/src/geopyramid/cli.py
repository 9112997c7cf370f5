"""Command-line front end tying the library into reproducible runs.

Every subcommand resolves its configuration from built-in defaults, an
optional ``--config`` JSON file, and explicit flags (flags win), runs
deterministically under a single seed, and writes a manifest describing the
run beside its outputs.  A previous run's manifest is itself a valid
``--config`` file, so runs can be reconstructed from their manifests.

Exit codes: 0 on success, 1 on validation problems (bad flags, unreadable
or inconsistent inputs), 2 on numerical failures (non-convergent means,
cut-locus hits), with index and level context in the message.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as gio
from .applications import (
    Anomaly,
    NoiseModel,
    add_noise,
    detect_anomalies,
    flower_curve,
    p_min_report,
    spd_curve,
    threshold_denoise,
    threshold_pyramid,
)
from .decimation import solve_decimation
from .errors import NumericalError, ValidationError
from .linear_pyramid import bound_constants
from .manifold_pyramid import ManifoldSequence, m_analyze, m_synthesize
from .masks import bspline_mask

__all__ = ["main", "run"]


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with code 1 on bad flags (validation)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_DEFAULTS = {
    "solve-decimation": {"order": 3, "epsilon": 1e-5},
    "analyze": {
        "manifold": "s2",
        "order": 3,
        "epsilon": 1e-5,
        "levels": 5,
        "samples": None,
        "petals": 5,
        "input": None,
    },
    "synthesize": {"input": None, "order": 3, "threshold": None},
    "denoise": {
        "manifold": "s2",
        "order": 3,
        "epsilon": 1e-5,
        "levels": 5,
        "samples": None,
        "petals": 5,
        "sigma": 0.0125,
        "threshold": 0.14,
        "input": None,
    },
    "detect-anomalies": {
        "manifold": "spd3",
        "order": 2,
        "epsilon": 1e-4,
        "levels": 4,
        "samples": 192,
        "anomaly_scale": 2.0,
        "z": 6.0,
        "input": None,
    },
    "decay-report": {
        "manifold": "s2",
        "order": 3,
        "epsilon": 1e-5,
        "levels": 8,
        "samples": None,
        "petals": 5,
        "input": None,
    },
}

_COMMON = {"seed": 0, "output_dir": ".", "no_plot": False, "config": None}


def _build_parser() -> _Parser:
    parser = _Parser(prog="geopyramid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--output-dir", dest="output_dir", help="output directory")
        p.add_argument("--seed", type=int, help="run seed")
        p.add_argument(
            "--no-plot",
            dest="no_plot",
            action="store_const",
            const=True,
            default=None,
            help="skip figure rendering",
        )
        for args, kwargs in flags:
            p.add_argument(*args, **kwargs)
        return p

    order = (["--order"], {"type": int, "help": "B-spline subdivision order"})
    eps = (["--epsilon"], {"type": float, "help": "truncation parameter"})
    levels = (["--levels"], {"type": int, "help": "pyramid levels"})
    samples = (["--samples"], {"type": int, "help": "number of samples"})
    petals = (["--petals"], {"type": int, "help": "flower petal count"})
    manifold = (["--manifold"], {"choices": ["s2", "spd3", "euclidean"]})
    inp = (["--input"], {"help": "input JSON file"})

    add("solve-decimation", "solve for the even-inverse mask", [order, eps])
    add("analyze", "decompose a sequence into a pyramid", [manifold, order, eps, levels, samples, petals, inp])
    add(
        "synthesize",
        "reconstruct a sequence from a pyramid",
        [order, inp, (["--threshold"], {"type": float, "help": "zero details below this norm"})],
    )
    add(
        "denoise",
        "add noise to a curve, then threshold and reconstruct",
        [
            manifold, order, eps, levels, samples, petals, inp,
            (["--sigma"], {"type": float, "help": "noise standard deviation"}),
            (["--threshold"], {"type": float, "help": "detail norm threshold"}),
        ],
    )
    add(
        "detect-anomalies",
        "flag outlier detail coefficients",
        [
            manifold, order, eps, levels, samples, inp,
            (["--anomaly-scale"], {"dest": "anomaly_scale", "type": float,
                                   "help": "eigenvalue scale of the injected anomaly (0 disables)"}),
            (["--z"], {"type": float, "help": "robust z threshold"}),
        ],
    )
    add("decay-report", "detail decay and contraction diagnostics", [manifold, order, eps, levels, samples, petals, inp])
    return parser


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    config = dict(_COMMON)
    config.update(_DEFAULTS[command])
    if args.config is not None:
        document = gio.read_json(args.config)
        if "config" in document and "command" in document:
            if document["command"] != command:
                raise ValidationError(
                    f"manifest is for {document['command']!r}, not {command!r}"
                )
            document = document["config"]
        unknown = set(document) - set(config)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        config.update(document)
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    config["config"] = None
    if config["no_plot"] is None:
        config["no_plot"] = False
    _validate_config(config)
    return config


def _validate_config(config: dict) -> None:
    if "epsilon" in config and config["epsilon"] is not None and config["epsilon"] <= 0:
        raise ValidationError(f"epsilon must be positive, got {config['epsilon']}")
    if "levels" in config and config["levels"] is not None and config["levels"] < 1:
        raise ValidationError(f"levels must be >= 1, got {config['levels']}")
    if "order" in config and config["order"] is not None and config["order"] < 1:
        raise ValidationError(f"order must be >= 1, got {config['order']}")


def _masks(config: dict):
    alpha = bspline_mask(config["order"])
    solution = solve_decimation(alpha)
    zeta = solution.normalized(config["epsilon"])
    return alpha, solution, zeta


def _default_samples(config: dict) -> int:
    return (
        config["samples"]
        if config.get("samples")
        else 10 * 2 ** config["levels"]
    )


def _load_or_generate(config: dict, anomaly: Anomaly | None = None) -> ManifoldSequence:
    if config.get("input"):
        return gio.sequence_from_dict(gio.read_json(config["input"]))
    manifold = config["manifold"]
    samples = _default_samples(config)
    if manifold == "s2":
        return flower_curve(config.get("petals") or 5, samples)
    if manifold == "spd3":
        return spd_curve(samples, anomaly)
    raise ValidationError("euclidean runs need --input (no built-in curve)")


def _write_manifest(
    out: Path, command: str, config: dict, outputs: list[str],
    bound: dict | None = None, metrics: dict | None = None,
) -> None:
    # the output directory is where the run landed, not what it computed:
    # leaving it out keeps manifests byte-identical across reruns
    echo = {k: v for k, v in config.items() if k not in ("config", "output_dir")}
    manifest = {
        "format_version": gio.FORMAT_VERSION,
        "version": __version__,
        "command": command,
        "config": echo,
        "outputs": outputs,
        "bound_constants": bound,
        "metrics": metrics or {},
    }
    gio.write_json(out / "manifest.json", manifest)


def _bound_dict(alpha, dec_mask, eta) -> dict:
    b = bound_constants(alpha, dec_mask, eta)
    return {
        "alpha_l1": b.alpha.l1_norm,
        "dec_l1": b.dec.l1_norm,
        "k_combined": b.k_combined,
        "floor_term": b.floor_term,
        "delta_growth": b.delta_growth,
        "eta": b.eta,
    }


def _cmd_solve_decimation(config: dict, out: Path) -> None:
    alpha, solution, zeta = _masks(config)
    truncated = solution.truncated(config["epsilon"])
    eta = solution.tail_mass(truncated.indices)
    document = {
        "format_version": gio.FORMAT_VERSION,
        "order": config["order"],
        "epsilon": config["epsilon"],
        "alpha": alpha.to_dict(),
        "gamma": solution.gamma.to_dict(),
        "gamma_truncated": truncated.to_dict(),
        "zeta": zeta.to_dict(),
        "support": len(zeta.coeffs),
        "residual": solution.residual,
        "decay_c": solution.decay_c,
        "decay_lambda": solution.decay_lambda,
        "eta": eta,
        "bound_constants": {
            "truncated": _bound_dict(alpha, truncated, eta),
            "normalized": _bound_dict(alpha, zeta, 0.0),
        },
    }
    gio.write_json(out / "decimation.json", document)
    print(gio.dumps(document))
    outputs = ["decimation.json"]
    if not config["no_plot"]:
        from .plots import save_mask_stems

        save_mask_stems(
            out / "masks.png",
            {"refinement": alpha, "inverse": truncated, "normalized": zeta},
        )
        outputs.append("masks.png")
    _write_manifest(
        out, "solve-decimation", config, outputs,
        bound=document["bound_constants"],
        metrics={"residual": solution.residual, "support": len(zeta.coeffs)},
    )


def _cmd_analyze(config: dict, out: Path) -> None:
    alpha, _, zeta = _masks(config)
    sequence = _load_or_generate(config)
    pyramid = m_analyze(alpha, zeta, sequence, config["levels"])
    gio.write_json(out / "pyramid.json", gio.pyramid_to_dict(pyramid))
    gio.write_norms_csv(out / "norms.csv", pyramid)
    outputs = ["pyramid.json", "norms.csv"]
    if not config["no_plot"]:
        from .plots import save_detail_norms

        save_detail_norms(out / "details.png", pyramid)
        outputs.append("details.png")
    _write_manifest(
        out, "analyze", config, outputs,
        bound=_bound_dict(alpha, zeta, 0.0),
        metrics={"per_level_max": pyramid.per_level_max()},
    )


def _cmd_synthesize(config: dict, out: Path) -> None:
    if not config.get("input"):
        raise ValidationError("synthesize needs --input pyramid JSON")
    alpha = bspline_mask(config["order"])
    pyramid = gio.pyramid_from_dict(gio.read_json(config["input"]))
    if config.get("threshold") is not None:
        pyramid = threshold_pyramid(pyramid, config["threshold"])
    sequence = m_synthesize(alpha, pyramid)
    gio.write_json(out / "sequence.json", gio.sequence_to_dict(sequence))
    _write_manifest(out, "synthesize", config, ["sequence.json"])


def _cmd_denoise(config: dict, out: Path) -> None:
    alpha, _, zeta = _masks(config)
    truth = None if config.get("input") else _load_or_generate(config)
    if truth is None:
        noisy = gio.sequence_from_dict(gio.read_json(config["input"]))
        rescaled = 0
    else:
        noisy, rescaled = add_noise(
            truth, NoiseModel(config["sigma"], config["seed"])
        )
    pyramid = m_analyze(alpha, zeta, noisy, config["levels"])
    denoised = threshold_denoise(alpha, pyramid, config["threshold"])
    denoised_pyramid = m_analyze(alpha, zeta, denoised, config["levels"])

    gio.write_json(out / "denoised.json", gio.sequence_to_dict(denoised))
    gio.write_norms_csv(out / "norms_noisy.csv", pyramid)
    gio.write_norms_csv(out / "norms_denoised.csv", denoised_pyramid)
    outputs = ["denoised.json", "norms_noisy.csv", "norms_denoised.csv"]
    metrics = {"rescaled_draws": rescaled}
    if truth is not None:
        manifold = truth.manifold
        metrics["noisy_error"] = float(
            np.mean(manifold.distance(truth.points, noisy.points))
        )
        metrics["denoised_error"] = float(
            np.mean(manifold.distance(truth.points, denoised.points))
        )
    if not config["no_plot"]:
        from .plots import save_denoise_panels

        save_denoise_panels(out / "denoise.png", pyramid, denoised_pyramid)
        outputs.append("denoise.png")
    _write_manifest(
        out, "denoise", config, outputs,
        bound=_bound_dict(alpha, zeta, 0.0), metrics=metrics,
    )


def _cmd_detect_anomalies(config: dict, out: Path) -> None:
    alpha, _, zeta = _masks(config)
    anomaly = (
        Anomaly(scale=config["anomaly_scale"])
        if config["anomaly_scale"] not in (None, 0, 0.0, 1.0)
        else None
    )
    sequence = _load_or_generate(config, anomaly)
    pyramid = m_analyze(alpha, zeta, sequence, config["levels"])
    flags = detect_anomalies(pyramid, config["z"])
    gio.write_flags_csv(out / "flags.csv", flags)
    gio.write_norms_csv(out / "norms.csv", pyramid)
    outputs = ["flags.csv", "norms.csv"]
    if not config["no_plot"]:
        from .plots import save_detail_norms

        save_detail_norms(out / "anomalies.png", pyramid, flags)
        outputs.append("anomalies.png")
    _write_manifest(
        out, "detect-anomalies", config, outputs,
        bound=_bound_dict(alpha, zeta, 0.0),
        metrics={"flag_count": len(flags)},
    )


def _cmd_decay_report(config: dict, out: Path) -> None:
    alpha, _, zeta = _masks(config)
    sequence = _load_or_generate(config)
    report = p_min_report(alpha, zeta, sequence, config["levels"])
    gio.write_json(out / "decay_report.json", gio.decay_report_to_dict(report))
    gio.write_series_csv(
        out / "pmin.csv",
        ["row", "delta", "p_min"],
        [
            list(range(1, len(report.p_min_series) + 1)),
            list(report.delta_series),
            list(report.p_min_series),
        ],
    )
    outputs = ["decay_report.json", "pmin.csv"]
    if not config["no_plot"]:
        from .plots import save_decay_panels

        save_decay_panels(out / "decay.png", report)
        outputs.append("decay.png")
    _write_manifest(
        out, "decay-report", config, outputs,
        bound=_bound_dict(alpha, zeta, 0.0),
        metrics={"p_min": report.p_min, "fitted_ratio": report.fitted_ratio},
    )


_COMMANDS = {
    "solve-decimation": _cmd_solve_decimation,
    "analyze": _cmd_analyze,
    "synthesize": _cmd_synthesize,
    "denoise": _cmd_denoise,
    "detect-anomalies": _cmd_detect_anomalies,
    "decay-report": _cmd_decay_report,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        config = _resolve_config(args.command, args)
        out = Path(config["output_dir"])
        out.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](config, out)
    except ValidationError as exc:
        print(f"geopyramid: validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"geopyramid: numerical error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
