"""Text formats, PGM import and synthetic test images.

Phase images are stored as::

    P_PHASE l m
    <m values>          (l lines, row-major, radians in (-pi, pi])

and SPD(3) fields as::

    P_SPD3 l m
    a11 a12 a13 a22 a23 a33      (l*m lines, row-major)

Floats are printed with 17 significant digits so that a save/load cycle
reproduces every value bit for bit.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSpdError, ParseError, RangeError
from .manifolds.circle import wrap
from .manifolds.spd import EIG_FLOOR, from_upper, spd_retract, sym_from_coeffs, upper

PHASE_MAGIC = "P_PHASE"
SPD_MAGIC = "P_SPD3"


def _fmt(x):
    return format(float(x), ".17g")


def _tokens(text):
    """``(line_number, token)`` pairs over the body of a file."""
    for n, line in enumerate(text.splitlines(), start=1):
        for tok in line.split():
            yield n, tok


def _header(text, magic):
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    parts = lines[0].split()
    if len(parts) != 3 or parts[0] != magic:
        raise ParseError(f"expected header '{magic} l m'", line=1)
    try:
        l, m = int(parts[1]), int(parts[2])
    except ValueError:
        raise ParseError("dimensions must be integers", line=1) from None
    if l < 1 or m < 1:
        raise ParseError("dimensions must be positive", line=1)
    return l, m


def _read_values(text, count):
    values = []
    lines = []
    body = text.split("\n", 1)[1] if "\n" in text else ""
    for n, tok in _tokens(body):
        try:
            x = float(tok)
        except ValueError:
            raise ParseError(f"not a number: {tok!r}", line=n + 1) from None
        if not math.isfinite(x):
            raise ParseError(f"non-finite value {tok!r}", line=n + 1)
        values.append(x)
        lines.append(n + 1)
    if len(values) != count:
        raise ParseError(f"expected {count} values, found {len(values)}",
                         line=(lines[-1] if lines else 1))
    return np.array(values), lines


def parse_phase(text):
    l, m = _header(text, PHASE_MAGIC)
    values, lines = _read_values(text, l * m)
    bad = np.flatnonzero((values <= -np.pi) | (values > np.pi))
    if bad.size:
        i = bad[0]
        raise RangeError(f"phase {float(values[i])!r} outside (-pi, pi]", line=lines[i])
    return values.reshape(l, m)


def format_phase(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError("phase image must be 2-d")
    if not np.all(np.isfinite(u)) or np.any(u <= -np.pi) or np.any(u > np.pi):
        raise ValueError("phase values must be finite and in (-pi, pi]")
    rows = [" ".join(_fmt(x) for x in row) for row in u]
    return f"{PHASE_MAGIC} {u.shape[0]} {u.shape[1]}\n" + "\n".join(rows) + "\n"


def load_phase(path):
    with open(path) as fh:
        return parse_phase(fh.read())


def save_phase(path, u):
    with open(path, "w") as fh:
        fh.write(format_phase(u))


def parse_spd(text):
    l, m = _header(text, SPD_MAGIC)
    values, lines = _read_values(text, 6 * l * m)
    A = from_upper(values.reshape(l, m, 6))
    w = np.linalg.eigvalsh(A)
    bad = np.argwhere(w[..., 0] <= EIG_FLOOR)
    if bad.size:
        i, j = bad[0]
        raise NotSpdError("tensor is not positive definite", atom=(int(i), int(j)),
                          line=lines[6 * (i * m + j)])
    return A


def format_spd(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 4 or A.shape[2:] != (3, 3):
        raise ValueError("SPD field must have shape (l, m, 3, 3)")
    c = upper(A).reshape(-1, 6)
    if not np.all(np.isfinite(c)):
        raise ValueError("tensor entries must be finite")
    rows = [" ".join(_fmt(x) for x in row) for row in c]
    return f"{SPD_MAGIC} {A.shape[0]} {A.shape[1]}\n" + "\n".join(rows) + "\n"


def load_spd(path):
    with open(path) as fh:
        return parse_spd(fh.read())


def save_spd(path, A):
    with open(path, "w") as fh:
        fh.write(format_spd(A))


def load_pgm_phase(path):
    """Binary 8-bit PGM mapped linearly onto (-pi, pi]; gray 255 maps to pi.

    Needs Pillow (the ``pgm`` extra).
    """
    from PIL import Image

    with Image.open(path) as img:
        if img.format != "PPM" or img.mode != "L":
            raise ParseError("expected an 8-bit binary PGM (P5)", line=1)
        g = np.asarray(img, dtype=float)
    return -np.pi + 2.0 * np.pi * (g + 1.0) / 256.0


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded noise: ``wrapped-gaussian`` for phases, ``tangent-gaussian`` for tensors."""

    kind: str = "wrapped-gaussian"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("wrapped-gaussian", "tangent-gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be non-negative")

    def rng(self):
        return np.random.default_rng(self.seed)


def _grid(dims):
    l, m = dims
    if l < 1 or m < 1:
        raise ValueError("dimensions must be positive")
    i, j = np.meshgrid(np.arange(l), np.arange(m), indexing="ij")
    return i / max(l - 1, 1), j / max(m - 1, 1)


def clean_phase(dims, pattern="ramp"):
    y, x = _grid(dims)
    if pattern == "ramp":
        return wrap(2.0 * np.pi * (1.5 * x + 0.75 * y))
    if pattern == "steps":
        levels = np.array([-2.5, -1.0, 0.5, 2.0])
        return levels[np.minimum((x * 4).astype(int), 3)]
    if pattern == "zones":
        r2 = (x - 0.5) ** 2 + (y - 0.5) ** 2
        return wrap(12.0 * np.pi * r2)
    raise ValueError(f"unknown phase pattern {pattern!r}")


def synth_phase(dims, pattern="ramp", noise=None):
    """``(clean, noisy)`` phase images; noise is added in the tangent and wrapped."""
    noise = noise or NoiseSpec("wrapped-gaussian", 0.0)
    clean = clean_phase(dims, pattern)
    if noise.sigma == 0:
        return clean, clean.copy()
    g = noise.rng().normal(0.0, noise.sigma, clean.shape)
    return clean, wrap(clean + g)


def _tensor(direction, eigenvalues):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    # complete d to an orthonormal frame
    a = np.eye(3)[np.argmin(np.abs(d))]
    e2 = np.cross(d, a)
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(d, e2)
    V = np.stack([d, e2, e3], axis=1)
    return V @ np.diag(eigenvalues) @ V.T


#: principal diffusivities of the synthetic tensors (dimensionless)
EIGENVALUES = (0.5, 0.125, 0.125)


def clean_spd(dims, pattern="two-region", eigenvalues=EIGENVALUES):
    y, x = _grid(dims)
    l, m = dims
    out = np.empty((l, m, 3, 3))
    for i in range(l):
        for j in range(m):
            if pattern == "two-region":
                d = (1.0, 0.0, 0.0) if j < m // 2 else (0.0, 1.0, 0.0)
            elif pattern == "smooth":
                t = 0.5 * np.pi * x[i, j]
                d = (np.cos(t), np.sin(t), 0.3 * y[i, j])
            else:
                raise ValueError(f"unknown tensor pattern {pattern!r}")
            out[i, j] = _tensor(d, eigenvalues)
    return out


def synth_spd(dims, pattern="two-region", noise=None, eigenvalues=EIGENVALUES):
    """``(clean, noisy)`` tensor fields; each noisy atom is
    ``spd_retract(clean, Z)`` with Gaussian coefficients in the tangent basis."""
    noise = noise or NoiseSpec("tangent-gaussian", 0.0)
    clean = clean_spd(dims, pattern, eigenvalues)
    if noise.sigma == 0:
        return clean, clean.copy()
    coeffs = noise.rng().normal(0.0, noise.sigma, clean.shape[:2] + (6,))
    noisy = spd_retract(clean, sym_from_coeffs(coeffs))
    if np.any(np.linalg.eigvalsh(noisy)[..., 0] <= EIG_FLOOR):
        raise AssertionError("noisy field left the SPD cone")
    return clean, noisy
