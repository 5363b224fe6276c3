"""Synthetic players: procedural expression glyphs standing in for webcam faces.

Each class renders as a distinct arrangement of eye blobs and a mouth arc
on a neutral disc, parameterized by (orientation, curvature, eccentricity,
intensity). A single separation scale s moves every class mean away from
the shared neutral configuration, so s=1 gives an exaggerated, easily
separable population and small s a subtle one; per-player offsets and pixel
noise add the within-class variation. Rendering is a pure function of
(player seed, label, frame seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .game import GameEngine, GameSession
from .labels import N_CLASSES

SIDE = 64

# per-class glyph family means at full separation:
# (orientation deg, curvature, eccentricity, intensity)
CLASS_PARAM_MEANS = (
    (-40.0, -0.90, +0.50, 0.95),
    (+40.0, -0.35, -0.55, 0.70),
    (-12.0, -1.00, -0.15, 1.00),
    (0.0, +1.00, +0.45, 0.90),
    (0.0, 0.00, 0.00, 0.50),
    (+18.0, -0.70, +0.15, 0.80),
    (+32.0, +0.60, -0.40, 1.00),
)
NEUTRAL_PARAMS = (0.0, 0.0, 0.0, 0.50)
PARAM_SCALES = np.array([25.0, 0.4, 0.4, 0.2])   # natural units per offset std

# per-class channel emphasis of the glyph strokes, scaled with separation
CLASS_TINTS = (
    (+0.8, -0.3, -0.5),
    (-0.6, +0.7, -0.1),
    (-0.2, -0.4, +0.8),
    (+0.5, +0.5, -0.6),
    (0.0, 0.0, 0.0),
    (-0.7, +0.1, +0.6),
    (+0.3, -0.8, +0.4),
)


@dataclass(frozen=True)
class RenderParams:
    class_params: tuple = CLASS_PARAM_MEANS
    separation: float = 1.0
    player_offset_std: float = 0.05
    pixel_noise_std: float = 0.02
    frame_jitter_std: float = 0.02
    color_cast_std: float = 0.0          # per-player white-balance spread
    color_cast: tuple = (0.0, 0.0, 0.0)  # this player's own cast

    def __post_init__(self):
        if self.separation < 0 or self.pixel_noise_std < 0 or self.player_offset_std < 0:
            raise ValueError("separation and noise levels must be >= 0")

    @staticmethod
    def exaggerated():
        return RenderParams(separation=1.0, player_offset_std=0.06,
                            pixel_noise_std=0.02, frame_jitter_std=0.03,
                            color_cast_std=0.01)

    @staticmethod
    def subtle():
        return RenderParams(separation=0.40, player_offset_std=0.35,
                            pixel_noise_std=0.05, frame_jitter_std=0.12,
                            color_cast_std=0.10)


@dataclass(frozen=True)
class SyntheticPlayer:
    player_id: str
    seed: int
    skill: float
    render: RenderParams

    def __post_init__(self):
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError("skill must lie in [0, 1]")


def _stamp(canvas, cy, cx, sigma, amps):
    """Add a soft round blob; amps is the per-channel amplitude (darkening < 0)."""
    r = max(2, int(3 * sigma))
    y0, y1 = max(0, int(cy) - r), min(SIDE, int(cy) + r + 1)
    x0, x1 = max(0, int(cx) - r), min(SIDE, int(cx) + r + 1)
    if y0 >= y1 or x0 >= x1:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma * sigma))
    canvas[:, y0:y1, x0:x1] += amps[:, None, None] * blob


def _glyph(params, tint, separation, rng, noise_std, jitter_std, color_cast):
    orientation, curvature, eccentricity, intensity = (
        np.asarray(params, dtype=np.float64) + rng.normal(0.0, jitter_std, 4) * PARAM_SCALES)
    img = np.full((3, SIDE, SIDE), 0.25)
    yy, xx = np.mgrid[:SIDE, :SIDE]
    rad = np.sqrt((yy - 31.5) ** 2 + (xx - 31.5) ** 2)
    disc = np.clip((23.0 - rad) / 2.0, 0.0, 1.0)
    # class tint colors the whole disc, fading with separation
    disc_amps = 0.47 * (1.0 + 0.5 * separation * np.asarray(tint))
    img += disc_amps[:, None, None] * disc[None]

    theta = math.radians(orientation)
    cos_t, sin_t = math.cos(theta), math.sin(theta)

    def place(dy, dx):
        # rotate the glyph frame about the disc center
        return (31.5 + dy * cos_t - dx * sin_t, 31.5 + dx * cos_t + dy * sin_t)

    amps = np.full(3, -0.60 * intensity)
    # eyes: separation widens with eccentricity
    eye_dx = 7.0 * (1.0 + 0.45 * eccentricity)
    for side in (-1.0, 1.0):
        cy, cx = place(-8.0, side * eye_dx)
        _stamp(img, cy, cx, 2.1, amps)
    # mouth: arc bent by curvature, widened by eccentricity
    half_w = 8.0 * (1.0 + 0.35 * eccentricity)
    for t in np.linspace(-1.0, 1.0, 15):
        cy, cx = place(9.0 - curvature * 4.5 * (1.0 - t * t), t * half_w)
        _stamp(img, cy, cx, 1.6, amps)
    img += np.asarray(color_cast)[:, None, None]
    img += rng.normal(0.0, noise_std, img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def render_expression(player: SyntheticPlayer, label: int, frame_seed: int) -> np.ndarray:
    """Deterministic 64x64x3 glyph for (player, class, frame)."""
    rp = player.render
    rng = np.random.default_rng([player.seed, int(label), int(frame_seed)])
    base = np.asarray(NEUTRAL_PARAMS)
    mean = base + rp.separation * (np.asarray(rp.class_params[int(label)]) - base)
    return _glyph(mean, CLASS_TINTS[int(label)], rp.separation, rng,
                  rp.pixel_noise_std, rp.frame_jitter_std, rp.color_cast)


def make_population(n, mode="exaggerated", seed=0, skill=0.8):
    """n players with per-player parameter offsets; subtle mode spreads more."""
    if n < 1:
        raise ValueError("population size must be >= 1")
    if mode not in ("exaggerated", "subtle"):
        raise ValueError(f"unknown population mode {mode!r}")
    base = RenderParams.exaggerated() if mode == "exaggerated" else RenderParams.subtle()
    rng = np.random.default_rng(seed)
    players = []
    for i in range(n):
        offset = rng.normal(0.0, base.player_offset_std, 4) * PARAM_SCALES
        shifted = tuple(tuple(np.asarray(cp) + offset) for cp in base.class_params)
        cast = tuple(rng.normal(0.0, base.color_cast_std, 3))
        players.append(SyntheticPlayer(
            player_id=f"{mode}-{i:03d}", seed=int(rng.integers(0, 2**63)),
            skill=float(skill), render=replace(base, class_params=shifted, color_cast=cast)))
    return players


def render_corpus(players, per_class, frame_seed_base=0):
    """A labeled image corpus drawn round-robin from the player list."""
    X, y = [], []
    for label in range(N_CLASSES):
        for i in range(per_class):
            player = players[i % len(players)]
            X.append(render_expression(player, label, frame_seed_base + i))
            y.append(label)
    return np.stack(X), np.asarray(y, dtype=np.intp)


@dataclass(frozen=True)
class PlayEvent:
    rendered_label: int
    target_label: int
    result: object


def play_session(player: SyntheticPlayer, engine: GameEngine, session: GameSession,
                 max_events: int = 120, play_seed: int = 0) -> list:
    """Drive one session at 1 Hz: render the target with P(skill), else a wrong class."""
    rng = np.random.default_rng([player.seed, 0x9A7, play_seed])
    now = 0.0
    trace = []
    for step in range(max_events):
        if session.game_over:
            break
        now += 1.0
        target = session.active_target
        if target is None:
            engine.tick(session, now)
            continue
        if rng.random() < player.skill:
            rendered = target.label
        else:
            rendered = int((target.label + 1 + rng.integers(0, N_CLASSES - 1)) % N_CLASSES)
        frame = render_expression(player, rendered, frame_seed=int(rng.integers(0, 2**31)))
        result = engine.submit_frame(session, frame, now=now)
        trace.append(PlayEvent(rendered, target.label, result))
    return trace
