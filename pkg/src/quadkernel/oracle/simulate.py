"""Time-stepping simulation of reflected Brownian motion in the quadrant.

Two schemes:

``"euler"``
    ``Z' = Z + mu dt + sqrt(dt) L xi`` followed by the 2x2 linear
    complementarity problem ``Z'' = Z' + R lam >= 0``, ``lam >= 0``,
    ``lam_i Z''_i = 0``. Weak error ``O(sqrt(dt))``.
``"bridge"`` (identity reflection only)
    With ``R = I`` each coordinate is the one-dimensional Skorokhod
    reflection of its own free path, so the end-of-step value only needs the
    minimum of the free path over the step. That minimum is drawn from the
    Brownian-bridge law given the Gaussian increment ``D``:
    ``m = (D - sqrt(D^2 - 2 s dt log U)) / 2``. Exact per coordinate; the
    two minima are drawn independently, which leaves an error only when both
    coordinates sit near zero in the same step.

Each replica has its own Philox stream keyed on ``(seed, replica)``, so the
number of replicas never changes an individual replica's path. Accumulators
are per replica and merge by stacking.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np

from ..errors import ConfigError, DomainError
from ..model import ContinuousModel, validate_continuous

SCHEMA_VERSION = 1
CHUNK = 1 << 18


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 2e4
    burn_in: float = 1e3
    replicas: int = 8
    seed: int = 0
    start: tuple[float, float] = (0.0, 0.0)
    thetas: tuple = ()                 # pre-declared (theta1, theta2) pairs, real or complex
    hist_max: float = 4.0
    hist_bins: int = 40
    ray_alpha: float | None = None     # band histogram along this ray
    ray_band: float = 0.2
    ray_max: float = 4.0
    ray_bins: int = 40
    scheme: str = "auto"               # auto | euler | bridge

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive", path="dt")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigError("burn_in must lie in [0, horizon)", path="burn_in")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1", path="replicas")
        if self.scheme not in ("auto", "euler", "bridge"):
            raise ConfigError(f"unknown scheme {self.scheme!r}", path="scheme")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def n_burn(self) -> int:
        return int(round(self.burn_in / self.dt))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thetas"] = [[_enc(t[0]), _enc(t[1])] for t in self.thetas]
        d["start"] = list(self.start)
        return d


def _enc(z):
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# numba kernel
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _lcp2(z, R, out):
    """Solve the 2x2 LCP; returns False when no complementary pair exists."""
    z1, z2 = z[0], z[1]
    if z1 >= 0.0 and z2 >= 0.0:
        out[0] = 0.0
        out[1] = 0.0
        return True
    if R[0, 0] > 0.0:
        l1 = -z1 / R[0, 0]
        if l1 >= 0.0 and z2 + R[1, 0] * l1 >= 0.0:
            out[0] = l1
            out[1] = 0.0
            return True
    if R[1, 1] > 0.0:
        l2 = -z2 / R[1, 1]
        if l2 >= 0.0 and z1 + R[0, 1] * l2 >= 0.0:
            out[0] = 0.0
            out[1] = l2
            return True
    det = R[0, 0] * R[1, 1] - R[0, 1] * R[1, 0]
    if det != 0.0:
        l1 = (-z1 * R[1, 1] + z2 * R[0, 1]) / det
        l2 = (-z2 * R[0, 0] + z1 * R[1, 0]) / det
        if l1 >= 0.0 and l2 >= 0.0:
            out[0] = l1
            out[1] = l2
            return True
    return False


@numba.njit(cache=True, nogil=True)
def _run_chunk(z, normals, uniforms, n, skip, dt, mu, chol, R, var, bridge,
               th_re, th_im, mom_re, mom_im, raw, ltime, hist, hmax, ray_e, ray_band,
               ray_hist, ray_max, counters):
    sdt = math.sqrt(dt)
    nb = hist.shape[0]
    nr = ray_hist.shape[0]
    lam = np.zeros(2)
    zp = np.zeros(2)
    k = th_re.shape[0]
    for s in range(n):
        d1 = mu[0] * dt + sdt * (chol[0, 0] * normals[s, 0])
        d2 = mu[1] * dt + sdt * (chol[1, 0] * normals[s, 0] + chol[1, 1] * normals[s, 1])
        l1 = 0.0
        l2 = 0.0
        if bridge:
            m1 = 0.5 * (d1 - math.sqrt(d1 * d1 - 2.0 * var[0] * dt * math.log(uniforms[s, 0])))
            m2 = 0.5 * (d2 - math.sqrt(d2 * d2 - 2.0 * var[1] * dt * math.log(uniforms[s, 1])))
            l1 = max(0.0, -(z[0] + m1))
            l2 = max(0.0, -(z[1] + m2))
            z[0] = z[0] + d1 + l1
            z[1] = z[1] + d2 + l2
        else:
            zp[0] = z[0] + d1
            zp[1] = z[1] + d2
            if _lcp2(zp, R, lam):
                l1 = lam[0]
                l2 = lam[1]
                z[0] = max(zp[0] + R[0, 0] * l1 + R[0, 1] * l2, 0.0)
                z[1] = max(zp[1] + R[1, 0] * l1 + R[1, 1] * l2, 0.0)
            else:
                counters[2] += 1
        if skip > 0:
            skip -= 1
            continue
        counters[0] += 1
        x1 = z[0]
        x2 = z[1]
        ltime[0] += l1
        ltime[1] += l2
        raw[0] += x1
        raw[1] += x2
        raw[2] += x1 * x1
        raw[3] += x2 * x2
        raw[4] += x1 * x2
        for q in range(k):
            a = math.exp(th_re[q, 0] * x1 + th_re[q, 1] * x2)
            ph = th_im[q, 0] * x1 + th_im[q, 1] * x2
            mom_re[q] += a * math.cos(ph)
            mom_im[q] += a * math.sin(ph)
        i = int(x1 / hmax * nb)
        j = int(x2 / hmax * nb)
        if i < nb and j < nb:
            hist[i, j] += 1
        else:
            counters[1] += 1
        if nr > 0:
            along = x1 * ray_e[0] + x2 * ray_e[1]
            perp = -x1 * ray_e[1] + x2 * ray_e[0]
            if abs(perp) < 0.5 * ray_band and along < ray_max:
                ray_hist[int(along / ray_max * nr)] += 1
    return skip


# ---------------------------------------------------------------------------
# accumulators
# ---------------------------------------------------------------------------

@dataclass
class Accumulators:
    config: SimConfig
    model: dict
    scheme: str
    steps: np.ndarray          # (replicas,) counted steps
    outside: np.ndarray        # (replicas,) samples outside the 2D histogram
    rejected: np.ndarray       # (replicas,) steps with an infeasible LCP
    mom_re: np.ndarray         # (replicas, k)
    mom_im: np.ndarray
    raw: np.ndarray            # (replicas, 5): sum z1, z2, z1^2, z2^2, z1 z2
    ltime: np.ndarray          # (replicas, 2)
    hist: np.ndarray           # (replicas, nb, nb)
    ray_hist: np.ndarray       # (replicas, ray_bins)
    extra: dict = field(default_factory=dict)

    @property
    def replicas(self) -> int:
        return len(self.steps)

    @property
    def time(self) -> np.ndarray:
        return self.steps * self.config.dt

    def local_time_rate(self):
        """Per-replica ``L(t)/t`` over the counted window; mean and stderr per axis."""
        rate = self.ltime / self.time[:, None]
        return rate.mean(axis=0), _se(rate)

    def density_cells(self):
        """Histogram as a density: mean and stderr over replicas, plus cell centers."""
        h = self.config.hist_max / self.config.hist_bins
        dens = self.hist / self.steps[:, None, None] / (h * h)
        centers = (np.arange(self.config.hist_bins) + 0.5) * h
        return dens.mean(axis=0), _se(dens), centers

    def ray_profile(self):
        if self.config.ray_alpha is None:
            raise DomainError("no ray histogram was declared")
        c = self.config
        dr = c.ray_max / c.ray_bins
        dens = self.ray_hist / self.steps[:, None] / (dr * c.ray_band)
        r = (np.arange(c.ray_bins) + 0.5) * dr
        return r, dens.mean(axis=0), _se(dens)

    def merge(self, other: "Accumulators") -> "Accumulators":
        if self.config.to_dict() | {"replicas": 0, "seed": 0} != other.config.to_dict() | {"replicas": 0, "seed": 0}:
            raise ConfigError("cannot merge accumulators from different configurations")
        cat = {k: np.concatenate([getattr(self, k), getattr(other, k)])
               for k in ("steps", "outside", "rejected", "mom_re", "mom_im", "raw", "ltime", "hist", "ray_hist")}
        return Accumulators(self.config, self.model, self.scheme, **cat)

    def save(self, path):
        """Write ``<path>.npz`` (arrays) and ``<path>.json`` (sidecar)."""
        path = Path(path)
        arrays = {k: getattr(self, k) for k in
                  ("steps", "outside", "rejected", "mom_re", "mom_im", "raw", "ltime", "hist", "ray_hist")}
        np.savez(path.with_suffix(".npz"), **arrays)
        side = {"schema_version": SCHEMA_VERSION, "config": self.config.to_dict(), "model": self.model,
                "scheme": self.scheme, "arrays": {k: list(v.shape) for k, v in arrays.items()},
                "array_file": path.with_suffix(".npz").name}
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True))
        return path.with_suffix(".npz"), path.with_suffix(".json")

    def hist_to_csv(self, path):
        mean, se, centers = self.density_cells()
        with open(path, "w") as fh:
            fh.write("x1,x2,density,stderr\n")
            for i, a in enumerate(centers):
                for j, b in enumerate(centers):
                    fh.write(f"{a:.17g},{b:.17g},{mean[i, j]:.17g},{se[i, j]:.17g}\n")


def load_accumulators(path) -> Accumulators:
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    if side.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("unsupported accumulator schema version", path="schema_version")
    cfg = dict(side["config"])
    cfg["thetas"] = tuple((complex(*a), complex(*b)) for a, b in cfg["thetas"])
    cfg["start"] = tuple(cfg["start"])
    data = np.load(path.with_suffix(".npz"))
    return Accumulators(SimConfig(**cfg), side["model"], side["scheme"], **{k: data[k] for k in data.files})


def _se(x):
    n = x.shape[0]
    if n < 2:
        return np.full(x.shape[1:], np.nan)
    return x.std(axis=0, ddof=1) / math.sqrt(n)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def _stream(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replica])))


def _replica(model, cfg: SimConfig, bridge: bool, replica: int, thetas):
    rng = _stream(cfg.seed, replica)
    chol = np.linalg.cholesky(model.sigma)
    var = np.diag(model.sigma).copy()
    mu = np.asarray(model.mu, dtype=float)
    R = np.asarray(model.refl, dtype=float)
    k = len(thetas)
    th_re = np.array([[t[0].real, t[1].real] for t in thetas]).reshape(k, 2)
    th_im = np.array([[t[0].imag, t[1].imag] for t in thetas]).reshape(k, 2)
    mom_re, mom_im = np.zeros(k), np.zeros(k)
    raw, ltime = np.zeros(5), np.zeros(2)
    hist = np.zeros((cfg.hist_bins, cfg.hist_bins), dtype=np.int64)
    nray = cfg.ray_bins if cfg.ray_alpha is not None else 0
    ray_hist = np.zeros(nray, dtype=np.int64)
    ray_e = np.array([math.cos(cfg.ray_alpha or 0.0), math.sin(cfg.ray_alpha or 0.0)])
    counters = np.zeros(3, dtype=np.int64)
    z = np.array(cfg.start, dtype=float)
    skip = cfg.n_burn
    remaining = cfg.n_steps
    dummy = np.ones((1, 2))
    while remaining > 0:
        n = min(CHUNK, remaining)
        normals = rng.standard_normal((n, 2))
        uniforms = 1.0 - rng.random((n, 2)) if bridge else dummy
        skip = _run_chunk(z, normals, uniforms, n, skip, cfg.dt, mu, chol, R, var, bridge,
                          th_re, th_im, mom_re, mom_im, raw, ltime, hist, cfg.hist_max, ray_e,
                          cfg.ray_band, ray_hist, cfg.ray_max, counters)
        remaining -= n
    return counters, mom_re, mom_im, raw, ltime, hist, ray_hist


def _threads(replicas: int) -> int:
    cap = os.environ.get("QK_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigError(f"QK_THREADS must be an integer, got {cap!r}", path="QK_THREADS") from exc
    return max(1, min(n, replicas))


def simulate_srbm(model: ContinuousModel, cfg: SimConfig) -> Accumulators:
    """Run ``cfg.replicas`` independent paths and return per-replica accumulators."""
    if not validate_continuous(model).stable:
        raise DomainError("model has no stationary distribution")
    scheme = cfg.scheme
    if scheme == "auto":
        scheme = "bridge" if model.orthogonal else "euler"
    if scheme == "bridge" and not model.orthogonal:
        raise ConfigError("the bridge scheme needs identity reflection", path="scheme")
    thetas = [(complex(a), complex(b)) for a, b in cfg.thetas]
    for a, b in thetas:
        if a.real > 0 or b.real > 0:
            raise DomainError("declared theta must have nonpositive real parts")
    bridge = scheme == "bridge"
    with ThreadPoolExecutor(_threads(cfg.replicas)) as pool:
        results = list(pool.map(lambda r: _replica(model, cfg, bridge, r, thetas), range(cfg.replicas)))
    cols = list(zip(*results))
    counters = np.stack(cols[0])
    return Accumulators(cfg, model.to_dict(), scheme, counters[:, 0], counters[:, 1], counters[:, 2],
                        np.stack(cols[1]), np.stack(cols[2]), np.stack(cols[3]), np.stack(cols[4]),
                        np.stack(cols[5]), np.stack(cols[6]))


def empirical_laplace(acc: Accumulators, theta, tol: float = 1e-12):
    """Time-average of ``exp(<theta | Z>)``: ``(mean, stderr)`` over replicas.

    ``theta = (0, 0)`` returns exactly ``(1, 0)``; any other ``theta`` must
    have been declared in ``SimConfig.thetas``.
    """
    t = (complex(theta[0]), complex(theta[1]))
    if t == (0, 0):
        return 1.0, 0.0
    for q, (a, b) in enumerate(acc.config.thetas):
        if abs(complex(a) - t[0]) <= tol and abs(complex(b) - t[1]) <= tol:
            per = (acc.mom_re[:, q] + 1j * acc.mom_im[:, q]) / acc.steps
            mean = per.mean()
            se = float(np.abs(_se(per[:, None].real)[0] + 1j * _se(per[:, None].imag)[0])) \
                if acc.replicas > 1 else math.nan
            mean = float(mean.real) if all(complex(x).imag == 0 for x in t) else complex(mean)
            return mean, se
    raise DomainError(f"theta {theta} was not declared before the simulation")
