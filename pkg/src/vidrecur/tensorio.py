"""Video tensors: the RCV1 file format, synthetic generators and noise models.

A video is stored as ``N`` grayscale frames of ``W x H`` pixels, one
row per frame in row-major pixel order. Pixel data is kept as float32,
which is also the on-disk precision, so a save/load round trip is exact.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import ndimage

MAGIC = b"RCV1"
_HEADER = struct.Struct("<4s5I8x")  # magic, W, H, N, fps num, fps den, reserved
HEADER_SIZE = _HEADER.size  # 32
_U32_MAX = 2**32 - 1


class TensorFormatError(ValueError):
    """An RCV1 file could not be decoded."""


class InvalidSpecError(ValueError):
    """A tensor, synthesis or noise specification is out of range."""


def _as_fps(fps) -> Fraction:
    if isinstance(fps, Fraction):
        f = fps
    elif isinstance(fps, int):
        f = Fraction(fps)
    else:
        f = Fraction(float(fps)).limit_denominator(1_000_000)
    if f <= 0:
        raise ValueError(f"fps must be positive, got {fps}")
    return f


@dataclass(eq=False)
class VideoTensor:
    """``frames x (width*height)`` float32 pixel grid with a frame rate."""

    data: np.ndarray
    width: int
    height: int
    fps: Fraction = field(default=Fraction(30))

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim == 1:
            data = data.reshape(-1, 1)
        if data.ndim == 3:
            data = data.reshape(data.shape[0], -1)
        if self.width < 1 or self.height < 1:
            raise InvalidSpecError(f"width and height must be >= 1, got {self.width}x{self.height}")
        if data.ndim != 2 or data.shape[1] != self.width * self.height:
            raise InvalidSpecError(
                f"data shape {data.shape} does not match {self.width}x{self.height} frames")
        if data.shape[0] < 1:
            raise InvalidSpecError("a video needs at least one frame")
        if not np.all(np.isfinite(data)):
            raise InvalidSpecError("pixel values must be finite")
        self.data = np.ascontiguousarray(data)
        self.fps = _as_fps(self.fps)

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    def frame_images(self) -> np.ndarray:
        """Frames as an ``(N, H, W)`` array."""
        return self.data.reshape(self.frames, self.height, self.width)

    def with_data(self, data) -> "VideoTensor":
        return VideoTensor(data, self.width, self.height, self.fps)

    def __eq__(self, other):
        if not isinstance(other, VideoTensor):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.fps == other.fps and self.data.shape == other.data.shape
                and self.data.tobytes() == other.data.tobytes())


# ----------------------------------------------------------------------------
# RCV1 format

def save_tensor(v: VideoTensor, path) -> None:
    if v.fps.numerator > _U32_MAX or v.fps.denominator > _U32_MAX:
        raise TensorFormatError(f"fps {v.fps} does not fit the header")
    header = _HEADER.pack(MAGIC, v.width, v.height, v.frames,
                          v.fps.numerator, v.fps.denominator)
    payload = v.data.astype("<f4", copy=False).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_tensor(path) -> VideoTensor:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise TensorFormatError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, W, H, N, num, den = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TensorFormatError(f"{path}: bad magic {magic!r}")
    if W < 1 or H < 1 or N < 1 or num < 1 or den < 1:
        raise TensorFormatError(f"{path}: zero dimension or frame rate in header")
    count = W * H * N
    if count * 4 > (1 << 40):
        raise TensorFormatError(f"{path}: dimensions {W}x{H}x{N} overflow")
    expected = HEADER_SIZE + 4 * count
    if len(raw) != expected:
        raise TensorFormatError(
            f"{path}: payload has {len(raw) - HEADER_SIZE} bytes, expected {4 * count}")
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER_SIZE).reshape(N, W * H)
    try:
        return VideoTensor(data.astype(np.float32), W, H, Fraction(num, den))
    except ValueError as exc:
        raise TensorFormatError(f"{path}: {exc}") from exc


def load_pgm_dir(path, fps=30) -> VideoTensor:
    """Read a directory of 8-bit PGM frames in lexicographic order, scaled to [0, 1]."""
    from PIL import Image

    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise TensorFormatError(f"{path}: no .pgm files")
    frames = []
    for p in files:
        with Image.open(p) as im:
            if im.mode not in ("L", "P"):
                raise TensorFormatError(f"{p}: expected 8-bit grayscale, got mode {im.mode}")
            frames.append(np.asarray(im.convert("L"), dtype=np.float32) / 255.0)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise TensorFormatError(f"{path}: frames have differing sizes {sorted(shapes)}")
    H, W = frames[0].shape
    return VideoTensor(np.stack(frames).reshape(len(frames), -1), W, H, fps)


def load_video(path, fps=30) -> VideoTensor:
    """RCV1 file or a directory of PGM frames."""
    if os.path.isdir(path):
        return load_pgm_dir(path, fps)
    return load_tensor(path)


# ----------------------------------------------------------------------------
# synthetic videos

SYNTH_KINDS = ("pendulum", "quasi_disks", "modulated_pulses",
               "harmonic_1d", "quasi_1d", "white_noise")
_ONE_D = ("harmonic_1d", "quasi_1d")


@dataclass
class SynthSpec:
    """What to synthesize.

    ``width``/``height`` default to 1 for the 1D signals and 32 otherwise.
    ``params`` holds kind-specific values, for example ``period`` for the
    pendulum or ``omega1``/``ratio`` for the two-mode videos.
    """

    kind: str
    frames: int = 400
    width: int | None = None
    height: int | None = None
    params: dict = field(default_factory=dict)
    seed: int = 0
    fps: float = 30

    def resolved_size(self) -> tuple[int, int]:
        default = 1 if self.kind in _ONE_D else 32
        w = default if self.width is None else self.width
        h = default if self.height is None else self.height
        return w, h

    def to_dict(self) -> dict:
        w, h = self.resolved_size()
        return {"kind": self.kind, "frames": self.frames, "width": w, "height": h,
                "params": dict(sorted(self.params.items())), "seed": self.seed,
                "fps": float(self.fps)}


def harmonic_signal(t):
    """cos(pi t / 5) + cos(pi t / 15): two commensurate modes."""
    t = np.asarray(t, dtype=np.float64)
    return np.cos(np.pi * t / 5) + np.cos(np.pi * t / 15)


def quasi_signal(t):
    """cos(pi t / 5) + cos(t / 5): two modes with frequency ratio pi."""
    t = np.asarray(t, dtype=np.float64)
    return np.cos(np.pi * t / 5) + np.cos(t / 5)


def _disk(xx, yy, cx, cy, r, soft=0.75):
    # antialiased disk: linear ramp of width 2*soft across the rim
    dist = np.hypot(xx - cx, yy - cy)
    return np.clip((r - dist) / (2 * soft) + 0.5, 0.0, 1.0)


def _pendulum(spec, W, H, t):
    period = float(spec.params.get("period", 25.0))
    amp = float(spec.params.get("amplitude", 0.6))  # radians
    if period <= 0:
        raise InvalidSpecError("pendulum period must be positive")
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    px, py = (W - 1) / 2.0, 0.08 * H
    length = 0.7 * H
    r = max(1.5, 0.12 * min(W, H))
    out = np.empty((t.size, H, W))
    for i, ti in enumerate(t):
        theta = amp * math.cos(2 * math.pi * ti / period)
        bx = px + length * math.sin(theta)
        by = py + length * math.cos(theta)
        img = _disk(xx, yy, bx, by, r)
        # rod: distance from the pivot-bob segment
        s = np.clip(((xx - px) * (bx - px) + (yy - py) * (by - py)) / (length ** 2), 0, 1)
        dseg = np.hypot(xx - (px + s * (bx - px)), yy - (py + s * (by - py)))
        rod = np.clip(1.0 - dseg / 0.75, 0, 1) * 0.5
        out[i] = np.maximum(img, rod)
    return out


def _two_mode(spec):
    w1 = float(spec.params.get("omega1", 1.0 / 5.0))
    ratio = float(spec.params.get("ratio", math.pi))
    if w1 <= 0 or ratio <= 0:
        raise InvalidSpecError("omega1 and ratio must be positive")
    return w1, w1 * ratio


def _quasi_disks(spec, W, H, t):
    w1, w2 = _two_mode(spec)
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    r = max(1.5, 0.14 * min(W, H))
    swing = 0.3 * W
    out = np.empty((t.size, H, W))
    for i, ti in enumerate(t):
        a = _disk(xx, yy, W / 2 + swing * math.cos(w1 * ti), 0.28 * H, r)
        b = _disk(xx, yy, W / 2 + swing * math.cos(w2 * ti), 0.72 * H, r)
        out[i] = np.maximum(a, b)
    return out


def _modulated_pulses(spec, W, H, t):
    w1, w2 = _two_mode(spec)
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64)
    s = 0.12 * min(W, H)
    g1 = np.exp(-((xx - 0.3 * W) ** 2 + (yy - 0.5 * H) ** 2) / (2 * s * s))
    g2 = np.exp(-((xx - 0.7 * W) ** 2 + (yy - 0.5 * H) ** 2) / (2 * s * s))
    a1 = 0.5 * (1 + np.cos(w1 * t))
    a2 = 0.5 * (1 + np.cos(w2 * t))
    return 0.5 * (a1[:, None, None] * g1 + a2[:, None, None] * g2)


def synthesize(spec: SynthSpec) -> VideoTensor:
    """Render a synthetic video; deterministic given ``spec``.

    Frame ``i`` is sampled at time ``t = i``. The 1D signals reproduce
    their closed forms exactly; the rendered videos emit values in [0, 1].
    """
    if spec.kind not in SYNTH_KINDS:
        raise InvalidSpecError(f"unknown kind {spec.kind!r}; choose from {SYNTH_KINDS}")
    W, H = spec.resolved_size()
    if spec.frames < 1 or W < 1 or H < 1:
        raise InvalidSpecError(f"dimensions must be positive, got {W}x{H}x{spec.frames}")
    t = np.arange(spec.frames, dtype=np.float64)
    if spec.kind in _ONE_D:
        if (W, H) != (1, 1):
            raise InvalidSpecError(f"{spec.kind} is a 1-pixel signal; width and height must be 1")
        f = harmonic_signal if spec.kind == "harmonic_1d" else quasi_signal
        data = f(t).reshape(-1, 1)
    elif spec.kind == "white_noise":
        rng = np.random.default_rng(spec.seed)
        data = rng.random((spec.frames, W * H))
    elif spec.kind == "pendulum":
        data = _pendulum(spec, W, H, t)
    elif spec.kind == "quasi_disks":
        data = _quasi_disks(spec, W, H, t)
    else:
        data = _modulated_pulses(spec, W, H, t)
    return VideoTensor(np.asarray(data).reshape(spec.frames, W * H), W, H, spec.fps)


# ----------------------------------------------------------------------------
# noise

NOISE_MODELS = ("blur", "awgn", "frame_corrupt")


@dataclass
class NoiseSpec:
    model: str
    level: float
    seed: int = 0

    def validate(self):
        if self.model not in NOISE_MODELS:
            raise InvalidSpecError(f"unknown noise model {self.model!r}")
        if not math.isfinite(self.level) or self.level < 0:
            raise InvalidSpecError(f"noise level must be finite and >= 0, got {self.level}")
        if self.model == "frame_corrupt" and self.level > 1:
            raise InvalidSpecError("frame_corrupt level is a fraction in [0, 1]")
        if self.model == "blur" and self.level != int(self.level):
            raise InvalidSpecError("blur extent is a whole number of pixels")

    def to_dict(self) -> dict:
        return {"model": self.model, "level": float(self.level), "seed": self.seed}


def random_walk_kernel(extent: int, rng: np.random.Generator) -> np.ndarray:
    """Directed random walk of ``extent`` visited pixels, normalized to sum 1.

    A heading is drawn once; each unit step moves along x with probability
    cos^2 of the heading (else along y), in the heading's direction.
    """
    if extent <= 1:
        return np.ones((1, 1))
    heading = rng.uniform(0, 2 * math.pi)
    px = math.cos(heading) ** 2
    sx = 1 if math.cos(heading) >= 0 else -1
    sy = 1 if math.sin(heading) >= 0 else -1
    pos = [(0, 0)]
    x = y = 0
    for _ in range(extent - 1):
        if rng.random() < px:
            x += sx
        else:
            y += sy
        pos.append((x, y))
    xs = np.array([p[0] for p in pos])
    ys = np.array([p[1] for p in pos])
    xs -= xs.min()
    ys -= ys.min()
    w, h = xs.max() + 1, ys.max() + 1
    size = max(w, h) | 1  # odd, so the walk's bounding box sits on the centre
    k = np.zeros((size, size))
    np.add.at(k, (ys + (size - h) // 2, xs + (size - w) // 2), 1.0)
    return k / k.sum()


def apply_noise(v: VideoTensor, n: NoiseSpec) -> VideoTensor:
    """Return a noisy copy of ``v``; level 0 is the identity for every model.

    * ``blur``: every frame is convolved with its own random-walk kernel.
    * ``awgn``: i.i.d. Gaussian noise with standard deviation ``level``.
    * ``frame_corrupt``: ``round(level * N)`` distinct frames are frozen
      (repeat the previous frame), corrupted (a block replaced by noise)
      or dropped (later frames shift back, the last frame is held).
    """
    n.validate()
    rng = np.random.default_rng(n.seed)
    if n.level == 0:
        return v.with_data(v.data.copy())
    X = v.data.astype(np.float64)
    if n.model == "awgn":
        return v.with_data(X + rng.normal(0.0, n.level, X.shape))
    if n.model == "blur":
        imgs = X.reshape(v.frames, v.height, v.width)
        out = np.empty_like(imgs)
        for i in range(v.frames):
            k = random_walk_kernel(int(n.level), rng)
            out[i] = ndimage.convolve(imgs[i], k, mode="nearest")
        return v.with_data(out.reshape(v.frames, -1))
    count = int(round(n.level * v.frames))
    chosen = np.sort(rng.choice(v.frames, size=count, replace=False))
    actions = rng.integers(0, 3, size=count)
    lo, hi = float(X.min()), float(X.max())
    if hi == lo:
        hi = lo + 1.0
    frames = list(X)
    dropped = []
    for idx, act in zip(chosen, actions):
        if act == 0:
            if idx > 0:
                frames[idx] = frames[idx - 1].copy()
        elif act == 1:
            img = frames[idx].reshape(v.height, v.width).copy()
            bh = max(1, v.height // 2)
            bw = max(1, v.width // 2)
            y0 = rng.integers(0, v.height - bh + 1)
            x0 = rng.integers(0, v.width - bw + 1)
            img[y0:y0 + bh, x0:x0 + bw] = rng.uniform(lo, hi, (bh, bw))
            frames[idx] = img.reshape(-1)
        else:
            dropped.append(idx)
    if dropped:
        drop = set(int(i) for i in dropped)
        kept = [f for i, f in enumerate(frames) if i not in drop]
        if not kept:
            kept = [frames[0]]
        kept.extend([kept[-1]] * (v.frames - len(kept)))
        frames = kept
    return v.with_data(np.stack(frames))
