"""The BO loop, the Euclidean and Cholesky baselines, and regret bookkeeping."""
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._linalg import mandel_indices
from .acquisition import AcquisitionProblem
from .domains import EigenvalueBox, sample_feasible
from .gp import NOISE_FLOOR, fit_mle
from .kernels import PUBLISHED_BETA_MIN
from .manifolds import SPD, Euclidean, Product, Sphere
from .optimizer import CGConfig, maximize_acquisition

log = logging.getLogger(__name__)

METHODS = ("gabo", "euclidean", "cholesky")
REGRET_FLOOR = 1e-12
FEAS_TOL = 1e-10


@dataclass(frozen=True)
class BOConfig:
    n_init: int = 5
    n_iters: int = 80
    noise_floor: float = NOISE_FLOOR
    method: str = "gabo"
    seed: int = 0
    cg: CGConfig = field(default_factory=CGConfig)
    beta_min: float = None
    mle_restarts: int = 5
    record_timing: bool = True

    def __post_init__(self):
        if self.n_init < 1 or self.n_iters < 0:
            raise ValueError("need n_init >= 1 and n_iters >= 0")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")


@dataclass
class TraceEntry:
    n: int
    x: object
    y: float
    best_y: float
    wall_seconds: float


@dataclass
class BOTrace:
    method: str
    seed: int
    n_init: int
    entries: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    salvaged: list = field(default_factory=list)

    @property
    def n_iters(self):
        return len(self.entries) - self.n_init

    @property
    def ys(self):
        return np.array([e.y for e in self.entries])

    @property
    def best_ys(self):
        return np.array([e.best_y for e in self.entries])

    def iteration_seconds(self):
        """Initialization time followed by the wall time of each BO iteration."""
        w = [e.wall_seconds for e in self.entries]
        return np.array([sum(w[: self.n_init])] + w[self.n_init:])

    def write_jsonl(self, path, header=None):
        with open(path, "w") as fh:
            head = {"method": self.method, "seed": self.seed, "n_init": self.n_init,
                    "version": __version__}
            head.update(header or {})
            fh.write(json.dumps({"header": head}, sort_keys=True) + "\n")
            for e in self.entries:
                rec = {"n": e.n, "x": _serialize(e.x), "y": e.y, "best_y": e.best_y,
                       "wall_seconds": e.wall_seconds}
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def read_jsonl(cls, path):
        with open(path) as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        head = lines[0]["header"] if lines and "header" in lines[0] else {}
        recs = lines[1:] if head else lines
        tr = cls(head.get("method", "unknown"), head.get("seed", 0), head.get("n_init", 1))
        tr.entries = [TraceEntry(r["n"], r["x"], r["y"], r["best_y"], r["wall_seconds"])
                      for r in recs]
        return tr


def _serialize(x):
    if isinstance(x, tuple):
        return [_serialize(xi) for xi in x]
    return np.asarray(x).tolist()


# -- search spaces -----------------------------------------------------------------


class UnitNormConstraint:
    """Ambient vectors constrained to the unit sphere (and optional coordinate box)."""

    def __init__(self, sphere, box=None):
        self.sphere = sphere
        self.box = box

    def contains(self, z, tol=FEAS_TOL):
        ok = abs(np.linalg.norm(z) - 1.0) <= tol
        return bool(ok and (self.box is None or self.box.contains(z, tol)))

    def project(self, z):
        nz = np.linalg.norm(z)
        z = z / nz if nz > 0 else self.sphere.random_point(np.random.default_rng(0))
        return z if self.box is None else self.box.project(z)

    def sample(self, rng):
        return sample_feasible(self.sphere, self.box, rng)


class SymVecEigenBox:
    """Upper-triangular vectors of symmetric matrices whose eigenvalues lie in a box."""

    def __init__(self, box):
        self.box = box
        self.n = box.manifold.n
        self._idx = mandel_indices(self.n)

    def encode(self, x):
        return np.asarray(x)[self._idx]

    def decode(self, v):
        r, c = self._idx
        a = np.zeros((self.n, self.n))
        a[r, c] = v
        a[c, r] = v
        return a

    def contains(self, v, tol=FEAS_TOL):
        return self.box.contains(self.decode(v), tol)

    def project(self, v):
        return self.encode(self.box.project(self.decode(v)))

    def sample(self, rng):
        return self.encode(self.box.sample(rng))


class CholeskyEigenBox:
    """Lower-triangular Cholesky factors (positive diagonal) of SPD matrices in a box."""

    def __init__(self, box):
        self.box = box
        self.n = box.manifold.n
        cols, rows = mandel_indices(self.n)
        self._idx = (rows, cols)

    def encode(self, x):
        return np.linalg.cholesky(np.asarray(x))[self._idx]

    def factor(self, v):
        a = np.zeros((self.n, self.n))
        a[self._idx] = v
        return a

    def decode(self, v):
        low = self.factor(v)
        a = low @ low.T
        return 0.5 * (a + a.T)

    def contains(self, v, tol=FEAS_TOL):
        d = np.diag(self.factor(v))
        return bool(np.all(d > 0) and self.box.contains(self.decode(v), tol))

    def project(self, v):
        low = self.factor(v)
        d = np.abs(np.diag(low))
        low[np.diag_indices(self.n)] = np.maximum(d, math.sqrt(self.box.lo) * 1e-3)
        a = self.box.project(0.5 * (low @ low.T + (low @ low.T).T))
        return self.encode(a)

    def sample(self, rng):
        return self.encode(self.box.sample(rng))


@dataclass
class SearchSpace:
    """Where the GP lives and the acquisition is optimized, plus the map back to the manifold."""

    gp_manifold: object
    domain: object
    beta_min: float
    encode: object
    decode: object


def _identity(x):
    return x


def beta_min_for(m, cache=None):
    """Published lengthscale threshold for ``m``; products take the largest factor value."""
    if m in PUBLISHED_BETA_MIN:
        return PUBLISHED_BETA_MIN[m]
    if isinstance(m, Euclidean):
        return 0.0
    if isinstance(m, Product):
        return max(beta_min_for(f, cache) for f in m.factors)
    from .cache import cached_beta_min

    return cached_beta_min(m, cache)


def make_search_space(method, m, dom=None, beta_min=None):
    if method == "gabo":
        bm = beta_min_for(m) if beta_min is None else beta_min
        return SearchSpace(m, dom, bm, _identity, _identity)
    if isinstance(m, Sphere):
        if method != "euclidean":
            raise ValueError("the Cholesky baseline is defined for SPD manifolds only")
        space = Euclidean(m.ambient_dim)
        return SearchSpace(space, UnitNormConstraint(m, dom), beta_min or 0.0, _identity, _identity)
    if isinstance(m, SPD):
        box = dom if dom is not None else EigenvalueBox(m)
        con = SymVecEigenBox(box) if method == "euclidean" else CholeskyEigenBox(box)
        return SearchSpace(Euclidean(m.dim), con, beta_min or 0.0, con.encode, con.decode)
    raise ValueError(f"baseline {method!r} is not defined on {m!r}")


# -- the loop --------------------------------------------------------------------


def run_bo(objective, m, dom, cfg, trace_hook=None):
    """Minimize ``objective`` over ``m`` (inside ``dom``) and return the full trace."""
    space = make_search_space(cfg.method, m, dom, cfg.beta_min)
    init_rng, fit_rng, acq_rng = np.random.default_rng(cfg.seed).spawn(3)
    clock = time.perf_counter if cfg.record_timing else (lambda: 0.0)
    trace = BOTrace(cfg.method, cfg.seed, cfg.n_init)
    xs, zs, ys = [], [], []

    def observe(x, z, t0):
        y = float(objective(x))
        if not math.isfinite(y):
            finite = np.array([v for v in ys if math.isfinite(v)])
            y = float(finite.max() + 3.0 * finite.std()) if finite.size else 0.0
            trace.salvaged.append(len(ys))
            log.warning("non-finite objective at query %d; salvaged as %.6g", len(ys), y)
        xs.append(x)
        zs.append(z)
        ys.append(y)
        best = min(ys)
        trace.entries.append(TraceEntry(len(ys) - 1, x, y, best, clock() - t0))
        if trace_hook is not None:
            trace_hook(trace.entries[-1])

    for _ in range(cfg.n_init):
        t0 = clock()
        x = sample_feasible(m, dom, init_rng)
        observe(x, space.encode(x), t0)

    model = None
    for _ in range(cfg.n_iters):
        t0 = clock()
        model = fit_mle(space.gp_manifold, zs, ys, space.beta_min, cfg.mle_restarts, fit_rng,
                        cfg.noise_floor, init=model)
        if model.params.beta < space.beta_min:
            raise AssertionError("fitted lengthscale below beta_min")
        trace.betas.append(model.params.beta)
        prob = AcquisitionProblem.from_model(model)
        z = maximize_acquisition(prob, space.domain, cfg.cg, acq_rng)
        observe(space.decode(z), z, t0)
    return trace


def simple_regret(trace, f_star):
    """Incumbent minus optimum after initialization (index 0) and after each BO iteration."""
    best = trace.best_ys[trace.n_init - 1:]
    return best - f_star


def log_regret(regret):
    return np.log10(np.maximum(regret, REGRET_FLOOR))


@dataclass
class AggregateTable:
    iters: np.ndarray
    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray
    time_mean: np.ndarray
    time_std: np.ndarray

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("iter,median_log_regret,q1,q3,mean_iter_seconds,std_iter_seconds\n")
            for row in zip(self.iters, self.median, self.q1, self.q3, self.time_mean, self.time_std):
                fh.write(",".join([str(int(row[0]))] + [repr(float(v)) for v in row[1:]]) + "\n")

    def rows(self):
        return [dict(iter=int(i), median_log_regret=m, q1=a, q3=b, mean_iter_seconds=t,
                     std_iter_seconds=s)
                for i, m, a, b, t, s in zip(self.iters, self.median, self.q1, self.q3,
                                            self.time_mean, self.time_std)]


def aggregate(traces, f_star):
    """Median and quartiles of log10 simple regret, plus per-iteration wall time."""
    traces = list(traces)
    if not traces:
        raise ValueError("aggregate needs at least one trace")
    lengths = {tr.n_iters for tr in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces have different lengths: {sorted(lengths)}")
    lr = np.array([log_regret(simple_regret(tr, f_star)) for tr in traces])
    q1, med, q3 = np.percentile(lr, [25, 50, 75], axis=0)
    secs = np.array([tr.iteration_seconds() for tr in traces])
    return AggregateTable(np.arange(lr.shape[1]), med, q1, q3, secs.mean(0), secs.std(0))


def timing_summary(traces):
    """Mean and std of the BO-iteration wall times pooled over traces; ``None`` if there are none."""
    secs = np.concatenate([tr.iteration_seconds()[1:] for tr in traces]) if traces else []
    if len(secs) == 0:
        return None
    return float(np.mean(secs)), float(np.std(secs))


def config_dict(cfg):
    d = asdict(cfg)
    d["cg"] = asdict(cfg.cg)
    return d

