"""End-to-end scoring of one video and batch AUROC experiments."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import embed, metric, periodest, ph, scores
from .rank import auroc
from .tensorio import (InvalidSpecError, NoiseSpec, SynthSpec, TensorFormatError, VideoTensor,
                       apply_noise, load_video, synthesize)


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``input_error`` tells the CLI
    whether the cause was bad input (exit 2) or a numerical failure (exit 3)."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.input_error = isinstance(cause, (InvalidSpecError, TensorFormatError, OSError,
                                              embed.EmbeddingError, ph.PersistenceInputError,
                                              metric.MetricError))


@dataclass
class PipelineConfig:
    """Everything needed to reproduce one score.

    ``tau`` is a delay in frames or ``"auto"``; in auto mode the period is
    estimated and the window set just under it. ``window`` (frames) may be
    given instead of ``tau``. ``dog_half_width = 0`` skips the temporal
    filter; ``None`` means 5 for videos and 0 for single-pixel signals,
    which are embedded as they are.
    """

    input: str | None = None
    synth: SynthSpec | None = None
    d: int = 20
    tau: float | str = "auto"
    window: float | None = None
    n_points: int = 600
    prime: int = 3
    max_dim: int = 1
    dog_half_width: int | None = None
    dog_sigma: float | None = None
    energy: float = 1.0
    knn_frac: float = 0.1
    deriv_width: int = 5
    noise: NoiseSpec | None = None
    seed: int = 0
    baselines: bool = True
    outdir: str | None = None

    def seeds(self) -> tuple[int, int]:
        """Independent seeds for synthesis and noise, derived from ``seed``."""
        a, b = np.random.SeedSequence(self.seed).generate_state(2)
        return int(a), int(b)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["synth"] = self.synth.to_dict() if self.synth else None
        out["noise"] = self.noise.to_dict() if self.noise else None
        out.pop("outdir")
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if d.get("synth"):
            d["synth"] = SynthSpec(**d["synth"])
        if d.get("noise"):
            d["noise"] = NoiseSpec(**d["noise"])
        return cls(**d)


def load_input(cfg: PipelineConfig) -> VideoTensor:
    synth_seed, noise_seed = cfg.seeds()
    if cfg.synth is not None:
        video = synthesize(replace(cfg.synth, seed=synth_seed))
    elif cfg.input is not None:
        video = load_video(cfg.input)
    else:
        raise InvalidSpecError("config needs an input path or a synth spec")
    if cfg.noise is not None:
        video = apply_noise(video, replace(cfg.noise, seed=noise_seed))
    return video


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except (ValueError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        raise PipelineError(name, exc) from exc


def frame_ssm(video: VideoTensor) -> np.ndarray:
    """Euclidean self-similarity matrix of the raw frames."""
    fc = embed.svd_frame_reduce(video, 1.0)
    return np.sqrt(metric.pairwise_sq_dist(fc, max_points=max(video.frames, 2)))


def run_pipeline(cfg: PipelineConfig, video: VideoTensor | None = None) -> scores.RecurrenceReport:
    """Filter, reduce, embed, normalize, compute Rips persistence and score.

    ``video`` overrides loading from ``cfg`` (the config is still recorded).
    """
    if video is None:
        video = _stage("input", load_input, cfg)
    N = video.frames

    pe = None
    try:
        pe, _ = periodest.estimate_video_period(video, cfg.knn_frac, cfg.deriv_width)
    except periodest.PeriodError as exc:
        if cfg.tau == "auto" and cfg.window is None:
            raise PipelineError("periodest", exc) from exc
    period_len = pe.period if pe is not None and pe.found else None
    clarity = pe.clarity if pe is not None else 0.0

    if cfg.tau == "auto" and cfg.window is None:
        if period_len is None:
            raise PipelineError("periodest", ValueError("no period detected; pass tau or window"))
        if N < 4 * period_len:
            raise PipelineError("plan_window", embed.EmbeddingError(
                f"auto window needs at least 4 periods; {N} frames, period {period_len:g}"))
        plan = _stage("plan_window", embed.plan_window, period_len, cfg.d)
        tau = plan.tau
        tau_mode = "auto"
    elif cfg.window is not None:
        if cfg.d < 1:
            raise PipelineError("plan_window", embed.EmbeddingError("window needs d >= 1"))
        tau = float(cfg.window) / cfg.d
        tau_mode = "window"
    else:
        tau = float(cfg.tau)
        tau_mode = "explicit"
    if cfg.d * tau > N - 1:
        raise PipelineError("sliding_window", embed.EmbeddingError(
            f"window {cfg.d * tau:g} frames does not fit in {N} frames"))

    hw = cfg.dog_half_width
    if hw is None:
        hw = 0 if video.width * video.height == 1 else 5
    filtered = video
    if hw > 0:
        filtered = _stage("dog_filter", embed.dog_filter, video, cfg.dog_sigma, hw)
    fc = _stage("svd_frame_reduce", embed.svd_frame_reduce, filtered, cfg.energy)
    cloud = _stage("sliding_window", embed.sliding_window, fc, cfg.d, tau, cfg.n_points)
    cloud = _stage("normalize_cloud", embed.normalize_cloud, cloud)
    D = _stage("cloud_distances", metric.cloud_distances, cloud)
    dgms = _stage("rips_persistence", ph.rips_persistence, D, cfg.max_dim, cfg.prime)

    ps = scores.periodicity_score(dgms)
    mps = scores.modified_periodicity_score(dgms)
    qps = scores.quasiperiodicity_score(dgms) if cfg.max_dim >= 2 else None

    freq = cd = math.nan
    if cfg.baselines:
        ssm = _stage("ssm", frame_ssm, video)
        freq = _stage("frequency_score", scores.frequency_score, ssm)
        cd = _stage("cd_lattice_score", scores.cd_lattice_score, ssm) if N >= 16 else scores.NO_LATTICE

    synth_seed, noise_seed = cfg.seeds()
    params = {
        "config": cfg.to_dict(),
        "frames": N,
        "width": video.width,
        "height": video.height,
        "fps": [video.fps.numerator, video.fps.denominator],
        "tau_mode": tau_mode,
        "d": cfg.d,
        "tau": tau,
        "window": cfg.d * tau,
        "n_points": cfg.n_points,
        "prime": cfg.prime,
        "max_dim": cfg.max_dim,
        "dog_half_width": hw,
        "dog_sigma": (cfg.dog_sigma if cfg.dog_sigma is not None else hw / 2.0) if hw > 0 else None,
        "energy": cfg.energy,
        "svd_rank": fc.dim,
        "basis_energy": fc.basis_energy,
        "knn_frac": cfg.knn_frac,
        "deriv_width": cfg.deriv_width,
        "ph_threshold": dgms.threshold,
        "synth_seed": synth_seed if cfg.synth is not None else None,
        "noise_seed": noise_seed if cfg.noise is not None else None,
    }
    report = scores.RecurrenceReport(
        ps=ps, mps=mps, qps=qps,
        freq_score=None if math.isnan(freq) else freq,
        cd_score=None if isinstance(cd, float) and math.isnan(cd) else cd,
        clarity=clarity, period_len=period_len, params=params, diagrams=dgms)
    if cfg.outdir:
        out = Path(cfg.outdir)
        out.mkdir(parents=True, exist_ok=True)
        ph.save_diagrams_csv(dgms, out / "diagrams.csv")
        from .plots import export_diagram_svg
        export_diagram_svg(dgms, out / "diagrams.svg")
    return report


def report_json(report: scores.RecurrenceReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ----------------------------------------------------------------------------
# AUROC experiment

SCORE_NAMES = ("ps", "mps", "qps")


def _score_one(args) -> float:
    cfg, score = args
    rep = run_pipeline(cfg)
    val = getattr(rep, score)
    if val is None:
        raise PipelineError("scores", ValueError(f"{score} needs max_dim=2"))
    return float(val)


def trial_configs(cfg: PipelineConfig, trials: int, noise: NoiseSpec | None) -> list[PipelineConfig]:
    return [replace(cfg, seed=cfg.seed + i, noise=noise, outdir=None) for i in range(trials)]


def population_scores(cfg: PipelineConfig, score: str, trials: int,
                      noise: NoiseSpec | None = None, workers: int = 1) -> list[float]:
    """Scores of ``trials`` independently seeded runs, in trial order."""
    jobs = [(c, score) for c in trial_configs(cfg, trials, noise)]
    if workers <= 1:
        return [_score_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_score_one, jobs))


def _label(cfg: PipelineConfig) -> str:
    if cfg.synth is not None:
        return cfg.synth.kind
    return str(cfg.input)


def run_auroc_experiment(pos: list[PipelineConfig], neg: list[PipelineConfig], score: str,
                         trials: int, noises: list[NoiseSpec | None] | None = None,
                         workers: int = 1) -> list[dict]:
    """AUROC of ``score`` for every positive/negative population pair and noise setting.

    Each population is ``trials`` runs of its config with seeds
    ``seed + i``. Rows come back ordered by noise, positive, negative.
    """
    if score not in SCORE_NAMES:
        raise ValueError(f"score must be one of {SCORE_NAMES}")
    if trials < 10:
        raise ValueError("use at least 10 trials per population")
    rows = []
    for noise in (noises or [None]):
        cache = {}
        for i, c in enumerate(pos):
            cache[("pos", i)] = population_scores(c, score, trials, noise, workers)
        for i, c in enumerate(neg):
            cache[("neg", i)] = population_scores(c, score, trials, noise, workers)
        for i, pc in enumerate(pos):
            for j, nc in enumerate(neg):
                rows.append({
                    "positive": _label(pc),
                    "negative": _label(nc),
                    "noise_model": noise.model if noise else "none",
                    "noise_level": noise.level if noise else 0.0,
                    "score": score,
                    "trials": trials,
                    "auroc": auroc(cache[("pos", i)], cache[("neg", j)]),
                })
    return rows


def write_auroc_csv(rows: list[dict], path) -> None:
    fields = ["positive", "negative", "noise_model", "noise_level", "score", "trials", "auroc"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(r)
