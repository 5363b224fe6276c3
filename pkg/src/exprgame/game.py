"""Tower-defense style state machine: falling expression targets, lives, scoring.

Sessions are server-authoritative and explicitly clocked: every operation
takes `now` (seconds), so simulations and the HTTP layer share one code
path and replays are exact. A frame accepted within 0.9 s of the previous
accepted frame is throttled without touching state or the classifier.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError, SessionClosed
from .labels import N_CLASSES
from .verify import ThresholdTable, classify_by_template, verify_expression

THROTTLE_WINDOW = 0.9
INITIAL_LIVES = 5


@dataclass(frozen=True)
class SpawnConfig:
    probabilities: tuple = (1.0 / N_CLASSES,) * N_CLASSES
    fall_duration: float = 8.0
    max_concurrent: int = 1

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.shape != (N_CLASSES,) or (p < 0).any():
            raise ConfigError("spawn probabilities must be 7 non-negative values")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ConfigError("spawn probabilities must sum to 1")
        if self.fall_duration <= 0:
            raise ConfigError("fall duration must be positive")
        if self.max_concurrent < 1:
            raise ConfigError("max_concurrent must be >= 1")


@dataclass
class Target:
    label: int
    deadline: float


@dataclass(frozen=True)
class FrameResult:
    probabilities: Optional[tuple]
    matched: bool
    score: int
    lives: int
    game_over: bool
    throttled: bool
    target: Optional[int] = None
    deadline: Optional[float] = None


@dataclass
class GameSession:
    session_id: str
    mode: str                               # "general" | "customized"
    user_id: Optional[str]
    spawn: SpawnConfig
    rng: np.random.Generator
    templates: object = None                # customized mode only
    lives: int = INITIAL_LIVES
    score: int = 0
    targets: list = field(default_factory=list)
    last_accepted: float = -math.inf

    @property
    def game_over(self) -> bool:
        return self.lives == 0

    @property
    def active_target(self) -> Optional[Target]:
        return self.targets[0] if self.targets else None


class GameEngine:
    """Bundles the serving model, thresholds, templates and the harvest sink."""

    def __init__(self, model, thresholds: ThresholdTable = ThresholdTable(),
                 harvest_sink=None, template_store=None):
        self.model = model
        self.thresholds = thresholds
        self.harvest_sink = harvest_sink
        self.template_store = template_store

    def new_session(self, mode, user_id=None, spawn: SpawnConfig = None,
                    seed: int = 0, now: float = 0.0) -> GameSession:
        if mode not in ("general", "customized"):
            raise ContractError(f"unknown mode {mode!r}")
        templates = None
        if mode == "customized":
            if user_id is None or self.template_store is None or not self.template_store.has(user_id):
                raise ContractError("customized mode requires a registered user")
            templates = self.template_store.load(user_id)
            if templates.model_id != self.model.model_id_:
                raise ContractError("user templates are stale for the serving model")
        session = GameSession(session_id=uuid.uuid4().hex, mode=mode, user_id=user_id,
                              spawn=spawn or SpawnConfig(), rng=np.random.default_rng(seed),
                              templates=templates)
        self.spawn_target(session, now)
        return session

    def spawn_target(self, session: GameSession, now: float) -> Optional[Target]:
        """Draw a label from the spawn distribution; no-op when all slots are full."""
        if session.game_over or len(session.targets) >= session.spawn.max_concurrent:
            return None
        label = int(session.rng.choice(N_CLASSES, p=session.spawn.probabilities))
        target = Target(label=label, deadline=now + session.spawn.fall_duration)
        session.targets.append(target)
        return target

    def tick(self, session: GameSession, now: float) -> GameSession:
        """Expire targets past their ground deadline: one life each, then respawn."""
        while not session.game_over:
            expired = [t for t in session.targets if now >= t.deadline]
            if not expired:
                break
            t = min(expired, key=lambda t: t.deadline)
            session.targets.remove(t)
            session.lives -= 1
            if not session.game_over:
                self.spawn_target(session, t.deadline)
        if session.game_over:
            session.targets.clear()
        return session

    def _classify(self, session, image):
        probs = self.model.proba_one(image)
        if session.mode == "customized":
            predicted, _ = classify_by_template(session.templates, image, self.model)
            hit = next((t for t in session.targets if t.label == predicted), None)
        else:
            hit = None
            for t in session.targets:
                if verify_expression(probs, t.label, self.thresholds).matched:
                    hit = t
                    break
        return probs, hit

    def submit_frame(self, session: GameSession, image, now: float) -> FrameResult:
        if session.game_over:
            raise SessionClosed(f"session {session.session_id} is over")
        self.tick(session, now)
        if session.game_over:
            # the frame arrived at/after the final expiry; report, don't classify
            return self._result(session, None, matched=False, throttled=False)
        if now - session.last_accepted < THROTTLE_WINDOW:
            return self._result(session, None, matched=False, throttled=True)
        session.last_accepted = now
        probs, hit = self._classify(session, image)
        matched = hit is not None
        if matched:
            session.score += 1
            if self.harvest_sink is not None:
                self.harvest_sink(image=image, target=hit.label,
                                  confidence=float(probs[hit.label]),
                                  user_id=session.user_id, ts=now)
            session.targets.remove(hit)
            self.spawn_target(session, now)
        return self._result(session, probs, matched=matched, throttled=False)

    @staticmethod
    def _result(session, probs, matched, throttled) -> FrameResult:
        active = session.active_target
        return FrameResult(
            probabilities=None if probs is None else tuple(float(p) for p in probs),
            matched=matched, score=session.score, lives=session.lives,
            game_over=session.game_over, throttled=throttled,
            target=active.label if active else None,
            deadline=active.deadline if active else None)
