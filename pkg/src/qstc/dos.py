"""Denial-of-service attacks on the sensor channel.

An attack indicator ``h(s)`` in {0, 1} marks steps on which a packet is
lost.  Attacks are limited by the duration budget

    sum_{i < s} h(i) <= kappa_d + s / nu_d      for every s.

The encoder learns of a loss through an immediate ACK, retries on the next
step, and widens the quantization range by ``omega_a`` for the lost step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BudgetViolation, DomainError, SchemaError
from .standard import EncoderState

MODES = ("none", "random", "worst-case", "scripted")
BUDGET_SLACK = 1e-12


@dataclass(frozen=True)
class DosModel:
    kappa_d: float = 0.0
    nu_d: float = math.inf
    mode: str = "none"
    seed: int = 0
    attack_prob: float = 0.5
    schedule: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise SchemaError("dos.mode", f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.kappa_d < 0:
            raise DomainError(f"kappa_d must be >= 0, got {self.kappa_d}")
        if not self.nu_d >= 1:
            raise DomainError(f"nu_d must be >= 1, got {self.nu_d}")
        if not 0.0 <= self.attack_prob <= 1.0:
            raise DomainError(f"attack_prob must lie in [0, 1], got {self.attack_prob}")

    def budget(self, s: int) -> float:
        """Largest admissible attack count over ``[0, s)``."""
        return self.kappa_d + (0.0 if math.isinf(self.nu_d) else s / self.nu_d)


def duration_ok(h, kappa_d: float, nu_d: float) -> bool:
    """True iff every prefix of ``h`` respects the duration budget."""
    total = 0
    rate = 0.0 if math.isinf(nu_d) else 1.0 / nu_d
    for s, hs in enumerate(h, start=1):
        total += int(hs)
        if total > kappa_d + s * rate + BUDGET_SLACK:
            return False
    return True


class Adversary:
    """Online attack generator; ``decide(s, is_sample)`` returns h(s).

    ``random`` draws one uniform per step from the seeded generator and
    attacks if it falls below ``attack_prob``; ``worst-case`` attacks every
    sampling instant it can afford.  Both stay inside the budget greedily.
    """

    def __init__(self, model: DosModel):
        self.model = model
        self.count = 0
        self.rng = np.random.default_rng(model.seed)
        if model.mode == "scripted" and not duration_ok(model.schedule, model.kappa_d, model.nu_d):
            raise BudgetViolation("scripted schedule breaks the duration budget")

    def affordable(self, s: int) -> bool:
        return self.count + 1 <= self.model.budget(s + 1) + BUDGET_SLACK

    def decide(self, s: int, is_sample: bool) -> int:
        mode = self.model.mode
        if mode == "none":
            return 0
        if mode == "scripted":
            sched = self.model.schedule
            h = int(sched[s]) if s < len(sched) else 0
        elif mode == "random":
            h = int(self.rng.random() < self.model.attack_prob and self.affordable(s))
        else:
            h = int(is_sample and self.affordable(s))
        self.count += h
        return h


def generate_attack(model: DosModel, horizon: int, sample_oracle=None) -> np.ndarray:
    """Indicator sequence of length ``horizon``.

    ``sample_oracle(s, h_so_far)`` tells whether step ``s`` is a sampling
    instant given the attacks so far; the worst-case adversary needs it and
    the simulator supplies it by co-simulating the trigger.  Without an
    oracle every step counts as a sample.
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    adv = Adversary(model)
    h = np.zeros(horizon, dtype=np.int8)
    for s in range(horizon):
        is_sample = True if sample_oracle is None else bool(sample_oracle(s, h[:s]))
        h[s] = adv.decide(s, is_sample)
    return h


def load_schedule(path) -> tuple:
    """Read a one-line string of 0/1 characters; leftmost is s = 0."""
    text = Path(path).read_text().strip()
    if any(ch not in "01" for ch in text) or "\n" in text:
        raise SchemaError(str(path), "schedule must be a single line of 0/1 characters")
    return tuple(int(ch) for ch in text)


def resilient_next_sample(standard_next, attacked: bool) -> int:
    """Retry on the next step after a loss; otherwise defer to the trigger."""
    if attacked:
        return 1
    return int(standard_next())


def resilient_E_update(cfg, state: EncoderState, gap: int, attacked: bool, omega_a: float, update) -> EncoderState:
    """Widen the range by ``omega_a`` after a loss, else apply ``update``."""
    if attacked:
        if gap != 1:
            raise DomainError("an attacked sample must be retried after one step")
        Ex = omega_a * state.Ex
        return replace(state, Ex=Ex, E=cfg.c_norm * Ex)
    return update(cfg, state, gap)


def dos_bound(omega1: float, omega_a: float) -> float:
    """Largest admissible attack fraction ``1/nu_d``."""
    if not (0.0 < omega1 < 1.0 < omega_a):
        raise DomainError(f"need 0 < omega1 < 1 < omega_a, got {omega1}, {omega_a}")
    return math.log(1.0 / omega1) / math.log(omega_a / omega1)
