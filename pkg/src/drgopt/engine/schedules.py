"""Step-size schedules and stopping rules."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class StepSchedule:
    """Rule producing the time step of outer iteration ``k`` (0-based).

    ``constant``: ``tau0`` throughout.  ``halving``: ``tau0`` halved every
    ``halving_period`` iterations, never below ``tau_min``.  ``piecewise``:
    ``breakpoints`` is a list of ``(first_iteration, tau)`` pairs; the last
    pair whose iteration is <= k applies.
    """

    kind: str = "constant"
    tau0: float = 0.1
    halving_period: int = 200
    breakpoints: tuple = ()
    tau_min: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "halving", "piecewise"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "piecewise":
            if not self.breakpoints:
                raise ValueError("piecewise schedule needs breakpoints")
            bps = tuple(sorted((int(k), float(t)) for k, t in self.breakpoints))
            if bps[0][0] != 0:
                raise ValueError("first breakpoint must start at iteration 0")
            if any(t <= 0 for _, t in bps):
                raise ValueError("time steps must be positive")
            object.__setattr__(self, "breakpoints", bps)
        elif self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.kind == "halving" and self.halving_period < 1:
            raise ValueError("halving period must be >= 1")

    @classmethod
    def constant(cls, tau):
        return cls("constant", tau0=tau)

    @classmethod
    def halving(cls, tau0, period, tau_min=0.0):
        return cls("halving", tau0=tau0, halving_period=period, tau_min=tau_min)

    @classmethod
    def piecewise(cls, breakpoints):
        return cls("piecewise", tau0=breakpoints[0][1], breakpoints=tuple(breakpoints))

    @classmethod
    def parse(cls, text):
        """Parse ``constant:0.1``, ``halving:0.005:200`` or ``piecewise:0=0.05,12=0.01``."""
        kind, _, rest = text.partition(":")
        if kind == "constant":
            return cls.constant(float(rest))
        if kind == "halving":
            tau0, period = rest.split(":")
            return cls.halving(float(tau0), int(period))
        if kind == "piecewise":
            pairs = [p.split("=") for p in rest.split(",")]
            return cls.piecewise([(int(k), float(t)) for k, t in pairs])
        raise ValueError(f"cannot parse schedule {text!r}")

    def __str__(self):
        if self.kind == "constant":
            return f"constant:{self.tau0!r}"
        if self.kind == "halving":
            return f"halving:{self.tau0!r}:{self.halving_period}"
        return "piecewise:" + ",".join(f"{k}={t!r}" for k, t in self.breakpoints)

    def tau(self, k):
        if self.kind == "constant":
            return self.tau0
        if self.kind == "halving":
            return max(self.tau0 * 0.5 ** (k // self.halving_period), self.tau_min)
        current = self.breakpoints[0][1]
        for start, t in self.breakpoints:
            if start <= k:
                current = t
        return current

    @property
    def tau_max(self):
        if self.kind == "piecewise":
            return max(t for _, t in self.breakpoints)
        return self.tau0


@dataclass(frozen=True)
class StopRule:
    """Stop when the relative decrease ``(V(u^{k-1}) - V(u^k)) / |V(u^0)|``
    drops below ``rel_tol``, after ``max_iters`` sweeps, or after
    ``max_wall_ms`` milliseconds, whichever comes first."""

    rel_tol: float = 0.0
    max_iters: int = 1000
    max_wall_ms: float = math.inf

    def __post_init__(self):
        iters = math.inf if self.max_iters is None else self.max_iters
        if iters < 0 or not self.rel_tol >= 0:
            raise ValueError("max_iters and rel_tol must be non-negative")
        if self.rel_tol == 0 and math.isinf(iters) and math.isinf(self.max_wall_ms):
            raise ValueError("stop rule needs at least one finite bound")
        object.__setattr__(self, "max_iters", iters)
