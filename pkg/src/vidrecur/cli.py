"""Command-line interface.

Exit codes: 0 on success, 2 on bad input, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import embed, metric, periodest, ph, rank
from .pipeline import (SCORE_NAMES, PipelineConfig, PipelineError, load_input, report_json,
                       run_auroc_experiment, run_pipeline, write_auroc_csv)
from .plots import export_diagram_svg
from .tensorio import (InvalidSpecError, NoiseSpec, SynthSpec, TensorFormatError, apply_noise,
                       load_video, save_tensor, synthesize)

log = logging.getLogger("vidrecur")

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InvalidSpecError(f"--param expects key=value, got {item!r}")
        out[key] = float(val)
    return out


def _tau(text: str):
    return text if text == "auto" else float(text)


def _add_synth_args(p):
    p.add_argument("--frames", type=int, default=400)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="kind-specific parameter, for example period=25")
    p.add_argument("--fps", type=float, default=30)


def _add_pipeline_args(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("input", nargs="?", help=".rcv tensor or directory of PGM frames")
    src.add_argument("--synth", metavar="KIND", help="synthesize the input instead of loading it")
    _add_synth_args(p)
    p.add_argument("--config", help="JSON config or report to rerun; other flags are ignored")
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--tau", type=_tau, default="auto", help='delay in frames or "auto"')
    p.add_argument("--window", type=float, help="window length in frames (sets tau = window/d)")
    p.add_argument("--n-points", type=int, default=600)
    p.add_argument("--prime", type=int, default=3)
    p.add_argument("--max-dim", type=int, default=1, help="2 to get the quasiperiodicity score")
    p.add_argument("--dog-half-width", type=int,
                   help="0 disables the temporal filter; default 5, or 0 for 1-pixel input")
    p.add_argument("--dog-sigma", type=float)
    p.add_argument("--energy", type=float, default=1.0)
    p.add_argument("--knn-frac", type=float, default=0.1)
    p.add_argument("--deriv-width", type=int, default=5)
    p.add_argument("--noise-model", choices=("blur", "awgn", "frame_corrupt"))
    p.add_argument("--noise-level", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-baselines", action="store_true", help="skip the frequency and lattice scores")
    p.add_argument("--outdir", help="write diagrams.csv and diagrams.svg here")


def config_from_args(a) -> PipelineConfig:
    if a.config:
        with open(a.config) as fh:
            data = json.load(fh)
        if "params" in data and "config" in data["params"]:
            data = data["params"]["config"]
        cfg = PipelineConfig.from_dict(data)
        cfg.outdir = a.outdir
        return cfg
    synth = None
    if a.synth:
        synth = SynthSpec(a.synth, a.frames, a.width, a.height, _params(a.param), 0, a.fps)
    elif not a.input:
        raise InvalidSpecError("give an input path, --synth KIND or --config")
    noise = NoiseSpec(a.noise_model, a.noise_level) if a.noise_model else None
    return PipelineConfig(
        input=a.input, synth=synth, d=a.d, tau=a.tau, window=a.window, n_points=a.n_points,
        prime=a.prime, max_dim=a.max_dim, dog_half_width=a.dog_half_width, dog_sigma=a.dog_sigma,
        energy=a.energy, knn_frac=a.knn_frac, deriv_width=a.deriv_width, noise=noise,
        seed=a.seed, baselines=not a.no_baselines, outdir=a.outdir)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_synth(a):
    spec = SynthSpec(a.kind, a.frames, a.width, a.height, _params(a.param), a.seed, a.fps)
    save_tensor(synthesize(spec), a.out)


def cmd_noise(a):
    v = apply_noise(load_video(a.input), NoiseSpec(a.model, a.level, a.seed))
    save_tensor(v, a.out)


def cmd_score(a):
    report = run_pipeline(config_from_args(a))
    _emit(report_json(report), a.out)


def cmd_estimate_period(a):
    cfg = config_from_args(a)
    v = load_input(cfg)
    est, surrogate = periodest.estimate_video_period(v, cfg.knn_frac, cfg.deriv_width)
    if a.nacf_csv:
        np.savetxt(a.nacf_csv, est.nacf, delimiter=",", header="nacf", comments="", fmt="%.17g")
    if a.surrogate_csv:
        np.savetxt(a.surrogate_csv, surrogate.samples, delimiter=",", header="x", comments="",
                   fmt="%.17g")
    out = {"v": 1, "period": est.period, "clarity": est.clarity,
           "knn_frac": cfg.knn_frac, "deriv_width": cfg.deriv_width}
    _emit(json.dumps(out, sort_keys=True, indent=2) + "\n", a.out)


def cmd_auroc(a):
    base = dict(d=a.d, tau=a.tau, window=a.window, n_points=a.n_points, prime=a.prime,
                max_dim=max(a.max_dim, 2 if a.score == "qps" else 1), seed=a.seed,
                dog_half_width=a.dog_half_width, baselines=False)
    pos = [PipelineConfig(synth=SynthSpec(k, a.frames, a.width, a.height), **base) for k in a.pos]
    neg = [PipelineConfig(synth=SynthSpec(k, a.frames, a.width, a.height), **base) for k in a.neg]
    noises = []
    for item in a.noise or []:
        model, _, level = item.partition(":")
        noises.append(NoiseSpec(model, float(level or 0.0)))
    rows = run_auroc_experiment(pos, neg, a.score, a.trials, noises or None, a.workers)
    if a.csv:
        write_auroc_csv(rows, a.csv)
    for r in rows:
        print(f"{r['positive']:>16} vs {r['negative']:<16} {r['noise_model']}:{r['noise_level']:g}"
              f"  AUROC({r['score']}) = {r['auroc']:.3f}")


def cmd_rank(a):
    if a.action == "hodge":
        prefs = rank.load_preferences_csv(a.files[0], a.n)
        r, resid = rank.hodge_aggregate(prefs)
        if a.out:
            rank.save_ranking_csv(r, a.out)
        print(json.dumps({"scores": r.scores.tolist(), "order": r.order.tolist(),
                          "residual": resid}, indent=2))
    else:
        if len(a.files) != 2:
            raise InvalidSpecError("rank tau needs two ranking CSVs")
        t = rank.kendall_tau(rank.load_ranking_csv(a.files[0]), rank.load_ranking_csv(a.files[1]))
        print(json.dumps({"kendall_tau": t}))


def cmd_diagram(a):
    D = metric.load_distance_csv(a.input)
    dgms = ph.rips_persistence(D, a.max_dim, a.prime)
    if a.csv:
        ph.save_diagrams_csv(dgms, a.csv)
    if a.svg:
        export_diagram_svg(dgms, a.svg)
    if not a.csv and not a.svg:
        for k, dgm in enumerate(dgms.diagrams):
            for b, d in dgm:
                print(f"{k},{float(b)!r},{float(d)!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidrecur",
                                     description="Topological recurrence scores for videos.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic video tensor")
    p.add_argument("kind")
    _add_synth_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("noise", help="apply a noise model to a video tensor")
    p.add_argument("input")
    p.add_argument("--model", required=True, choices=("blur", "awgn", "frame_corrupt"))
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("score", help="run the full pipeline and print a JSON report")
    _add_pipeline_args(p)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("estimate-period", help="estimate the fundamental period")
    _add_pipeline_args(p)
    p.add_argument("--out")
    p.add_argument("--nacf-csv")
    p.add_argument("--surrogate-csv")
    p.set_defaults(func=cmd_estimate_period)

    p = sub.add_parser("auroc", help="AUROC of a score between synthetic populations")
    p.add_argument("--pos", nargs="+", required=True, metavar="KIND")
    p.add_argument("--neg", nargs="+", required=True, metavar="KIND")
    p.add_argument("--score", choices=SCORE_NAMES, default="ps")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--noise", action="append", metavar="MODEL:LEVEL")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--frames", type=int, default=400)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--tau", type=_tau, default="auto")
    p.add_argument("--window", type=float)
    p.add_argument("--n-points", type=int, default=600)
    p.add_argument("--prime", type=int, default=3)
    p.add_argument("--max-dim", type=int, default=1)
    p.add_argument("--dog-half-width", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_auroc)

    p = sub.add_parser("rank", help="Hodge aggregation or Kendall tau from CSV files")
    p.add_argument("action", choices=("hodge", "tau"))
    p.add_argument("files", nargs="+")
    p.add_argument("--n", type=int, help="number of objects (hodge)")
    p.add_argument("--out", help="ranking CSV (hodge)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("diagram", help="persistence diagrams of a distance-matrix CSV")
    p.add_argument("input")
    p.add_argument("--max-dim", type=int, default=1)
    p.add_argument("--prime", type=int, default=3)
    p.add_argument("--csv")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_diagram)
    return parser


_INPUT_ERRORS = (InvalidSpecError, TensorFormatError, ph.PersistenceInputError,
                 metric.MetricError, embed.EmbeddingError, rank.RankInputError, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.func(a)
    except PipelineError as exc:
        print(f"error in {exc}", file=sys.stderr)
        return EXIT_INPUT if exc.input_error else EXIT_NUMERIC
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
