"""Harmonic moments of a curve and the exterior conformal map built from v.

The curve is z(theta) = sum_m c_m exp(i m theta).  Moments are contour
integrals of conj(z) dz:

    t0  = (1/2 pi i) oint conj(z) dz             (area / pi)
    t_k = (1/2 pi i k) oint z^-k conj(z) dz,      k >= 1

evaluated with the trapezoidal rule on a uniform theta grid.  The map is

    log w = log z - 1/2 d0^2 v - sum_k z^-k / k * d0 d_k v,

with every derivative of the truncated v evaluated at the moments.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from shapely.geometry import LinearRing

from .exactring import FormalSeries, MomentVector

log = logging.getLogger(__name__)

DEFAULT_NQUAD = 512
DEFAULT_SMALLNESS_THRESHOLD = 0.25


class CurveError(ValueError):
    """Curve self-intersects or does not wind once around 0."""


@dataclass(frozen=True)
class CurveSpec:
    fourier: Mapping[int, complex]
    orientation: int = 1

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if not self.fourier:
            raise ValueError("curve needs at least one Fourier coefficient")

    @property
    def band(self) -> int:
        return max(abs(m) for m in self.fourier)

    @classmethod
    def circle(cls, radius: float) -> "CurveSpec":
        return cls({1: complex(radius)})

    @classmethod
    def shifted_disk(cls, center: complex, radius: float) -> "CurveSpec":
        return cls({0: complex(center), 1: complex(radius)})

    @classmethod
    def ellipse(cls, a: float, b: float) -> "CurveSpec":
        """z = a cos(theta) + i b sin(theta)."""
        return cls({1: complex((a + b) / 2), -1: complex((a - b) / 2)})

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "CurveSpec":
        coeffs: dict = {}
        for m, re, im in obj["fourier"]:
            coeffs[int(m)] = coeffs.get(int(m), 0j) + complex(re, im)
        return cls(coeffs, int(obj.get("orientation", 1)))

    def to_json_obj(self) -> dict:
        return {"fourier": [[m, c.real, c.imag] for m, c in sorted(self.fourier.items())],
                "orientation": self.orientation}

    def rotated(self, alpha: float) -> "CurveSpec":
        f = complex(math.cos(alpha), math.sin(alpha))
        return CurveSpec({m: c * f for m, c in self.fourier.items()}, self.orientation)

    def scaled(self, lam: float) -> "CurveSpec":
        return CurveSpec({m: c * lam for m, c in self.fourier.items()}, self.orientation)

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """theta grid, z(theta), dz/dtheta on n uniform points."""
        theta = 2 * np.pi * np.arange(n) / n
        phase = self.orientation * theta
        z = np.zeros(n, dtype=complex)
        dz = np.zeros(n, dtype=complex)
        for m, c in sorted(self.fourier.items()):
            e = c * np.exp(1j * m * phase)
            z += e
            dz += 1j * m * self.orientation * e
        return theta, z, dz

    def validate(self, n: int = 1024) -> None:
        _, z, _ = self.sample(n)
        if np.min(np.abs(z)) == 0:
            raise CurveError("curve passes through 0")
        steps = np.angle(np.roll(z, -1) / z)
        winding = int(round(steps.sum() / (2 * np.pi)))
        if winding != 1:
            raise CurveError(f"winding number about 0 is {winding}, need 1 "
                             "(positively oriented, 0 inside)")
        ring = LinearRing(np.column_stack([z.real, z.imag]))
        if not ring.is_simple:
            raise CurveError("curve self-intersects on the sample grid")


def moments_from_curve(curve: CurveSpec, order: int, n_quad: int = DEFAULT_NQUAD,
                       validate: bool = True) -> MomentVector:
    """Moments t0, t_1..t_order by trapezoidal contour quadrature."""
    if n_quad < 4 * curve.band + 4:
        raise ValueError(f"n_quad={n_quad} below 4M+4={4 * curve.band + 4}")
    if validate:
        curve.validate(max(n_quad, 256))
    _, z, dz = curve.sample(n_quad)
    base = np.conj(z) * dz
    t0 = (base.mean() / 1j).real
    ts = []
    inv = 1 / z
    zk = np.ones_like(z)
    for k in range(1, order + 1):
        zk = zk * inv
        ts.append(complex((zk * base).mean() / (1j * k)))
    return MomentVector.real_domain(t0, ts)


def schwarz_moments(shape: str, order: int, **params) -> MomentVector:
    """Closed-form moments of quadrature domains (test oracle)."""
    ts = [0j] * order
    if shape == "circle":
        t0 = params["radius"] ** 2
    elif shape == "shifted_disk":
        t0 = params["radius"] ** 2
        if order >= 1:
            ts[0] = complex(params["center"]).conjugate()
    elif shape == "ellipse":
        a, b = params["a"], params["b"]
        t0 = a * b
        if order >= 2:
            ts[1] = complex((a - b) / (2 * (a + b)))
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return MomentVector.real_domain(t0, ts)


def smallness(m: MomentVector) -> float:
    """Scale-invariant size of the moments: sum |t_k| t0^((k-2)/2)."""
    return sum(abs(t) * m.t0 ** ((k - 2) / 2) for k, t in enumerate(m.t, start=1))


@dataclass
class MapSeries:
    """w(z) = z/r + sum_{j=0..order} p_j z^-j."""

    r: float
    p: np.ndarray
    order: int
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"conformal radius must be positive, got {self.r}")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        inv = 1 / z
        acc = np.zeros_like(z)
        for pj in self.p[::-1]:
            acc = acc * inv + pj
        return z / self.r + acc

    def to_json_obj(self) -> dict:
        return {"r": self.r, "p": [[c.real, c.imag] for c in map(complex, self.p)],
                "order": self.order, "diagnostics": self.diagnostics}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MapSeries":
        return cls(float(obj["r"]), np.array([complex(a, b) for a, b in obj["p"]]),
                   int(obj["order"]), dict(obj.get("diagnostics", {})))


def map_series(v: FormalSeries, m: MomentVector, order: int | None = None,
               smallness_threshold: float = DEFAULT_SMALLNESS_THRESHOLD) -> MapSeries:
    """Exterior map coefficients from the truncated v evaluated at moments m."""
    order = m.order if order is None else order
    if order < 0:
        raise ValueError("map order must be nonnegative")
    if m.order > v.cutoff:
        raise ValueError(f"moment order {m.order} exceeds series cutoff {v.cutoff}")
    mp = m.padded(v.cutoff)
    d0v = v.d0()
    log_r2 = d0v.d0().evaluate(mp)
    if not np.isfinite(log_r2):
        raise OverflowError("d0^2 v evaluated to a non-finite value")
    diag = {"smallness": smallness(m), "log_r_imag": 0.5 * log_r2.imag}
    if diag["smallness"] > smallness_threshold:
        log.warning("moments are not small (%.3g > %.3g); truncated series may diverge",
                    diag["smallness"], smallness_threshold)
        diag["warning"] = "moments outside the heuristic convergence regime"
    if abs(log_r2.imag) > 1e-9:
        log.warning("d0^2 v has imaginary part %.3g; moments are not a conjugate pair", log_r2.imag)
    r = math.exp(0.5 * log_r2.real)
    # exp(-sum_k c_k x^k / k) as a power series: n e_n = -sum_k c_k e_{n-k}
    c = [0j] + [d0v.dt(k).evaluate(mp) if k <= v.cutoff else 0j for k in range(1, order + 2)]
    e = [1 + 0j]
    for n in range(1, order + 2):
        e.append(-sum(c[k] * e[n - k] for k in range(1, n + 1)) / n)
    p = np.array(e[1:], dtype=complex) / r
    if not np.all(np.isfinite(p)):
        raise OverflowError("map coefficients overflowed")
    diag["tail"] = float(abs(p[-1])) if len(p) else 0.0
    return MapSeries(r, p, order, diag)


def boundary_samples(curve: CurveSpec, w: MapSeries, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    theta, z, _ = curve.sample(n_samples)
    return theta, w(z)


def boundary_unimodularity(curve: CurveSpec, w: MapSeries, n_samples: int = 1024) -> float:
    """max over the curve of | |w(z)| - 1 |."""
    _, vals = boundary_samples(curve, w, n_samples)
    return float(np.max(np.abs(np.abs(vals) - 1)))


def oracle_map(shape: str, z, **params) -> np.ndarray:
    """Classical exterior maps, normalized so w(inf) = inf and w'(inf) > 0."""
    z = np.asarray(z, dtype=complex)
    if shape == "circle":
        return z / params["radius"]
    if shape == "shifted_disk":
        return (z - complex(params["center"])) / params["radius"]
    if shape == "ellipse":
        a, b = params["a"], params["b"]
        if a < b:
            raise ValueError("ellipse oracle needs a >= b")
        if a == b:
            return z / a
        r, u = (a + b) / 2, (a - b) / 2
        # inverse of z = r w + u / w; take the root outside the unit disk
        root = np.sqrt(z * z - 4 * r * u)
        w1, w2 = (z + root) / (2 * r), (z - root) / (2 * r)
        return np.where(np.abs(w1) >= np.abs(w2), w1, w2)
    raise ValueError(f"unknown shape {shape!r}")


def boundary_error_vs_oracle(curve: CurveSpec, w: MapSeries, shape: str, n_samples: int = 1024,
                             **params) -> float:
    _, z, _ = curve.sample(n_samples)
    return float(np.max(np.abs(w(z) - oracle_map(shape, z, **params))))


def boundary_csv(curve: CurveSpec, w: MapSeries, n_samples: int) -> str:
    theta, vals = boundary_samples(curve, w, n_samples)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta", "re_w", "im_w", "abs_w_minus_1"])
    for th, val in zip(theta, vals):
        writer.writerow([repr(float(th)), repr(float(val.real)), repr(float(val.imag)),
                         repr(float(abs(val) - 1))])
    return buf.getvalue()


def load_curve(path) -> CurveSpec:
    with open(path, encoding="utf-8") as fh:
        return CurveSpec.from_json_obj(json.load(fh))
