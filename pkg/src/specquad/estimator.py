"""Randomized quadrature driver, spectral sums and a priori bounds."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import json
import math
import os
import re
import time

import numpy as np

from .measures import DiscreteDistribution, SeriesDistribution
from .moments import lanczos, moments_from_cheb, moments_from_lanczos
from .orthopoly import ChebyshevT, ReferenceMeasure
from .quadrature import (
    apply_damping,
    approx_quad_by_approximation,
    gaussian_quadrature,
    jackson_coefficients,
    quad_by_approximation,
    quad_by_interpolation,
)
from .tridiag import symtrid_eigen

__all__ = [
    "DomainError",
    "FunctionSpec",
    "EstimateConfig",
    "EstimateReport",
    "sample_unit_sphere",
    "sample_stream",
    "estimate_interval",
    "estimate_spectrum",
    "spectral_sum",
    "heat_capacity",
    "heat_capacity_from",
    "bound_trace_tail",
    "bound_cesm_tail",
    "bound_wasserstein_tail",
    "bound_required_degree_wasserstein",
    "jackson_best_approximation_bound",
    "damped_chebyshev_bound",
    "quadrature_error_bound",
    "report_to_json",
    "REPORT_SCHEMA",
]

METHODS = ("slq", "iq", "aq", "aaq")
DAMPINGS = ("none", "jackson")
MOMENT_PATHS = ("cheb", "lanczos")
THREADS_ENV = "SPECQUAD_THREADS"


class DomainError(ValueError):
    """A spectral-sum function was evaluated outside its domain."""


def _identity(x):
    return x


def _inverse(x):
    return 1.0 / x


def _runge(x):
    return 1.0 / (1.0 + 16.0 * x * x)


_FUNCTIONS = {
    # name: (number of parameters or None for variadic, evaluator, domain check)
    "identity": (0, lambda p: _identity, None),
    "inverse": (0, lambda p: _inverse, lambda x: x != 0),
    "log": (0, lambda p: np.log, lambda x: x > 0),
    "abs": (0, lambda p: np.abs, None),
    "exp_neg": (1, lambda p: (lambda x: np.exp(-p[0] * x)), None),
    "x2_exp_neg": (1, lambda p: (lambda x: x * x * np.exp(-p[0] * x)), None),
    "runge": (0, lambda p: _runge, None),
    "poly": (None, lambda p: (lambda x: np.polynomial.polynomial.polyval(x, p)), None),
    "step": (1, lambda p: (lambda x: (x <= p[0]).astype(float)), None),
}


@dataclass(frozen=True)
class FunctionSpec:
    """Named scalar function f for spectral sums tr(f(A)).

    ``poly`` takes ascending coefficients; ``step(t)`` is 1[x <= t], whose
    spectral sum is the eigenvalue count up to t.
    """

    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in _FUNCTIONS:
            raise ValueError(f"unknown function '{self.name}'; choose from {sorted(_FUNCTIONS)}")
        nparams = _FUNCTIONS[self.name][0]
        params = tuple(float(p) for p in self.params)
        if nparams is not None and len(params) != nparams:
            raise ValueError(f"{self.name} takes {nparams} parameter(s), got {len(params)}")
        if self.name == "poly" and not params:
            raise ValueError("poly needs at least one coefficient")
        object.__setattr__(self, "params", params)

    def __str__(self):
        if not self.params:
            return self.name
        return f"{self.name}({','.join(repr(p) for p in self.params)})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        _, make, domain = _FUNCTIONS[self.name]
        if domain is not None:
            bad = ~domain(x)
            if np.any(bad):
                node = float(np.atleast_1d(x)[np.atleast_1d(bad)][0])
                raise DomainError(f"{self} is undefined at node x={node!r}")
        return make(self.params)(x)

    @classmethod
    def parse(cls, text):
        """Parse e.g. ``log``, ``exp_neg(2)`` or ``poly(1,0,3)``."""
        m = re.fullmatch(r"\s*([a-z_0-9]+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise ValueError(f"cannot parse function spec '{text}'")
        args = m.group(2)
        params = () if args is None or not args.strip() else tuple(float(a) for a in args.split(","))
        return cls(m.group(1), params)


@dataclass(frozen=True)
class EstimateConfig:
    """Settings for :func:`estimate_spectrum`.

    ``s`` defaults to 2k. ``measure`` defaults to the Chebyshev measure of the
    first kind on ``interval``; when ``interval`` is None (or ``auto_interval``
    is set) it is estimated with a short Lanczos probe and unioned with any
    user interval. ``moment_path`` selects Chebyshev doubling (``cheb``) or
    Lanczos with connection coefficients (``lanczos``) for iq/aq/aaq.
    """

    method: str = "slq"
    k: int = 10
    s: int = None
    n_v: int = 10
    seed: int = 0
    damping: str = "none"
    reorth: bool = False
    measure: ReferenceMeasure = None
    interval: tuple = None
    auto_interval: bool = None
    moment_path: str = "cheb"
    aaq_nodes: int = None
    functions: tuple = ()
    threads: int = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got '{self.method}'")
        if self.damping not in DAMPINGS:
            raise ValueError(f"damping must be one of {DAMPINGS}, got '{self.damping}'")
        if self.moment_path not in MOMENT_PATHS:
            raise ValueError(f"moment_path must be one of {MOMENT_PATHS}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.n_v < 1:
            raise ValueError("n_v must be at least 1")
        s = 2 * self.k if self.s is None else int(self.s)
        if not 0 <= s <= 2 * self.k:
            raise ValueError(f"need 0 <= s <= 2k, got s={s}, k={self.k}")
        object.__setattr__(self, "s", s)
        if self.method == "slq" and self.damping != "none":
            raise ValueError("damping applies to iq/aq/aaq, not slq")
        if self.interval is not None:
            a, b = (float(t) for t in self.interval)
            if not a < b:
                raise ValueError(f"interval needs a < b, got [{a}, {b}]")
            object.__setattr__(self, "interval", (a, b))
        if self.auto_interval is None:
            object.__setattr__(self, "auto_interval", self.interval is None)
        funcs = tuple(FunctionSpec.parse(f) if isinstance(f, str) else f for f in self.functions)
        object.__setattr__(self, "functions", funcs)

    def echo(self):
        return {
            "method": self.method,
            "damping": self.damping,
            "k": self.k,
            "s": self.s,
            "n_v": self.n_v,
            "seed": self.seed,
            "reorth": self.reorth,
            "measure": None if self.measure is None else repr(self.measure),
            "interval": None if self.interval is None else list(self.interval),
            "auto_interval": self.auto_interval,
            "moment_path": self.moment_path,
            "aaq_nodes": self.aaq_nodes,
            "functions": [str(f) for f in self.functions],
        }


@dataclass(eq=False)
class EstimateReport:
    """Per-sample approximations, their average and derived spectral sums.

    ``sums`` maps function names to trace estimates n <int f d[Psi]>, and
    ``sample_sums`` holds the per-sample integrals.
    """

    config: EstimateConfig
    dim: int
    interval: tuple
    measure: ReferenceMeasure
    samples: list
    average: object
    sums: dict = field(default_factory=dict)
    sample_sums: dict = field(default_factory=dict)
    breakdowns: list = field(default_factory=list)
    timing_ms: float = 0.0


def sample_stream(seed, index=None):
    """Random generator for sample ``index``; independent of the thread count."""
    if index is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def sample_unit_sphere(n, stream):
    """Uniform random unit vector: a normalized standard normal draw."""
    if n < 1:
        raise ValueError("dimension must be positive")
    v = stream.standard_normal(n)
    v /= np.linalg.norm(v)
    return v


def estimate_interval(A, probe_k=30, margin=0.01, stream=None):
    """Interval around the extreme Ritz values of a short Lanczos probe."""
    if probe_k < 2:
        raise ValueError("probe_k must be at least 2")
    if stream is None:
        stream = sample_stream(0)
    v = sample_unit_sphere(A.dim, stream)
    T = lanczos(A, v, min(probe_k, A.dim))
    theta = symtrid_eigen(T.block(T.order)).eigenvalues
    lo, hi = float(theta[0]), float(theta[-1])
    w = hi - lo
    if T.order < 2 or w <= 0:
        eps = 64 * np.finfo(float).eps * max(1.0, abs(lo))
        return (lo - eps, hi + eps)
    return (lo - margin * w, hi + margin * w)


def _resolve_measure(A, cfg):
    """Reference measure and Chebyshev interval shared by all samples."""
    interval = cfg.interval
    if cfg.method != "slq" and cfg.auto_interval:
        need = cfg.measure is None or cfg.moment_path == "cheb"
        if need:
            auto = estimate_interval(A, min(2 * cfg.k, 30), 0.01, sample_stream(cfg.seed))
            if interval is not None:
                auto = (min(auto[0], interval[0]), max(auto[1], interval[1]))
            interval = auto
    measure = cfg.measure
    if cfg.method != "slq" and measure is None:
        if interval is None:
            raise ValueError("an interval or a measure is required")
        measure = ChebyshevT(*interval)
    return measure, interval


def _one_sample(A, cfg, measure, interval, index):
    v = sample_unit_sphere(A.dim, sample_stream(cfg.seed, index))
    if cfg.method == "slq":
        T = lanczos(A, v, cfg.k, reorth=cfg.reorth)
        return gaussian_quadrature(T), T.invariant and T.order < cfg.k
    if cfg.moment_path == "cheb":
        if interval is None:
            raise ValueError("the Chebyshev moment path needs an interval")
        m = moments_from_cheb(A, v, cfg.s, measure, *interval)
    else:
        m = moments_from_lanczos(A, v, cfg.s, measure, reorth=cfg.reorth)
    if cfg.damping == "jackson":
        m = apply_damping(m, jackson_coefficients(cfg.s))
    if cfg.method == "iq":
        return quad_by_interpolation(m), False
    if cfg.method == "aq":
        return quad_by_approximation(m), False
    return approx_quad_by_approximation(m, cfg.aaq_nodes), False


def _threads(cfg):
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def estimate_spectrum(A, cfg):
    """Average of n_v per-vector spectral approximations.

    Samples are processed by a thread pool and reduced in sample order, so the
    result does not depend on the number of threads.
    """
    t0 = time.perf_counter()
    measure, interval = _resolve_measure(A, cfg)
    nthreads = min(_threads(cfg), cfg.n_v)

    def work(index):
        return _one_sample(A, cfg, measure, interval, index)

    if nthreads == 1:
        results = [work(i) for i in range(cfg.n_v)]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(work, range(cfg.n_v)))
    samples = [r[0] for r in results]
    breakdowns = [i for i, r in enumerate(results) if r[1]]
    average = average_approximations(samples)
    report = EstimateReport(cfg, A.dim, interval, measure, samples, average, breakdowns=breakdowns)
    for f in cfg.functions:
        vals = [spectral_sum(x, f, cfg.aaq_nodes) for x in samples]
        report.sample_sums[str(f)] = vals
        report.sums[str(f)] = A.dim * float(np.mean(vals))
    report.timing_ms = 1000.0 * (time.perf_counter() - t0)
    return report


def average_approximations(samples):
    """Arithmetic mean of discrete or series approximations."""
    if all(isinstance(x, DiscreteDistribution) for x in samples):
        return DiscreteDistribution.mixture(samples)
    if all(isinstance(x, SeriesDistribution) for x in samples):
        measure = samples[0].measure
        return SeriesDistribution(measure, np.mean([x.coeffs for x in samples], axis=0))
    raise TypeError("cannot average mixed approximation types")


def spectral_sum(approx, f, d=None):
    """int f d(approx); series are discretized on a d-point Gauss rule (default 8(s+1))."""
    if isinstance(f, str):
        f = FunctionSpec.parse(f)
    if isinstance(approx, SeriesDistribution):
        approx = approx_quad_by_approximation(approx, d)
    return float(np.dot(approx.weights, f(approx.nodes)))


def heat_capacity_from(approx, T_grid, d=None):
    """C/k_B at each temperature from one (averaged) spectral approximation.

    The three traces share the approximation. Energies are shifted by the
    smallest node, which leaves C unchanged and avoids overflow.
    """
    if isinstance(approx, SeriesDistribution):
        approx = approx_quad_by_approximation(approx, d)
    x = approx.nodes - approx.nodes[0]
    w = approx.weights
    out = []
    for T in np.atleast_1d(np.asarray(T_grid, dtype=float)):
        if not T > 0:
            raise ValueError("temperatures must be positive")
        bx = x / T
        e = w * np.exp(-bx)
        z0 = e.sum()
        z1 = (bx * e).sum()
        z2 = (bx * bx * e).sum()
        out.append(z2 / z0 - (z1 / z0) ** 2)
    return np.array(out)


def heat_capacity(H, T_grid, cfg):
    """Estimate C(T)/k_B of a Hamiltonian with the configured quadrature."""
    report = estimate_spectrum(H, cfg)
    return heat_capacity_from(report.average, T_grid, cfg.aaq_nodes)


def bound_trace_tail(n, n_v, eps, f_min, f_max, capped=False):
    """Tail bound 2n exp(-n_v (n+2) eps^2 / (f_max - f_min)^2) for spectral sums."""
    if not eps > 0 or not f_max > f_min:
        raise ValueError("need eps > 0 and f_max > f_min")
    p = 2.0 * n * math.exp(-n_v * (n + 2) * eps**2 / (f_max - f_min) ** 2)
    return min(p, 1.0) if capped else p


def bound_cesm_tail(n, n_v, eps, pointwise=True, capped=False):
    """Pointwise 2 exp(-n_v (n+2) eps^2) or uniform (times n) CESM tail bound."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = 2.0 * math.exp(-n_v * (n + 2) * eps**2)
    if not pointwise:
        p *= n
    return min(p, 1.0) if capped else p


def bound_wasserstein_tail(n, n_v, eps, lam_min, lam_max, capped=False):
    """Probability bound for d_W of the averaged approximation exceeding eps."""
    if not eps > 0 or not lam_max > lam_min:
        raise ValueError("need eps > 0 and lam_max > lam_min")
    p = 2.0 * n * math.exp(-n_v * (n + 2) * eps**2 / (4.0 * (lam_max - lam_min) ** 2))
    return min(p, 1.0) if capped else p


def _ceil(x):
    # guard against ceil(100.00000000000001) = 101 from rounding
    return max(0, math.ceil(x - 1e-9 * max(1.0, abs(x))))


def bound_required_degree_wasserstein(method, eps, a=None, b=None, lambda_range=None, d_tv=1.0):
    """Degree s sufficient for the Wasserstein guarantee of the given method.

    ``method`` is ``g`` (Gauss), ``i``/``a`` (interpolation or approximation;
    uses ``d_tv``, the total variation of the averaged output) or
    ``d-i``/``d-a``/``damped`` (Jackson damping with mu^T_{a,b}).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if method == "g":
        return _ceil(-1.0 + 2.0 * math.pi * lambda_range / eps)
    if method in ("i", "a"):
        return _ceil(-1.0 + math.pi * (1.0 + d_tv) * lambda_range / eps)
    if method in ("d-i", "d-a", "damped"):
        return _ceil(-2.0 + math.pi**2 * (b - a) / eps)
    raise ValueError(f"unknown method tag '{method}'")


def jackson_best_approximation_bound(s):
    """Best degree-s approximation error bound for 1-Lipschitz f on [-1, 1]."""
    return math.pi / 2.0 / (s + 1)


def damped_chebyshev_bound(s):
    """Error bound of the Jackson-damped Chebyshev projection of 1-Lipschitz f."""
    return math.pi**2 / 2.0 / (s + 2)


def quadrature_error_bound(method, best_error, d_tv=1.0):
    """Bound on |int f d<Psi> - int f d<[Psi]_s>| from the best-approximation error."""
    if method == "g":
        return 2.0 * best_error
    if method in ("i", "a"):
        return (1.0 + d_tv) * best_error
    raise ValueError(f"unknown method tag '{method}'")


def _approx_json(x):
    if isinstance(x, DiscreteDistribution):
        return {"nodes": x.nodes, "weights": x.weights, "total_variation": x.total_variation()}
    return {"measure": repr(x.measure), "coeffs": x.coeffs}


def report_dict(report):
    """Plain-data view of a report following REPORT_SCHEMA."""
    samples = []
    for i, x in enumerate(report.samples):
        entry = _approx_json(x)
        if report.sample_sums:
            entry["sums"] = {k: v[i] for k, v in report.sample_sums.items()}
        samples.append(entry)
    config = report.config.echo()
    config["dim"] = report.dim
    config["breakdowns"] = report.breakdowns
    return {
        "config": config,
        "interval": None if report.interval is None else list(report.interval),
        "samples": samples,
        "average": _approx_json(report.average),
        "sums": dict(report.sums),
        "timing_ms": report.timing_ms,
    }


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError("non-finite number in report")
        return format(v, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_dump(str(k), indent, level)}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_json(report, timing=True):
    """Serialize a report with numbers at 17 significant digits."""
    d = report_dict(report)
    if not timing:
        d.pop("timing_ms")
    return _dump(d, 2, 0) + "\n"


_NUMBERS = {"type": "array", "items": {"type": "number"}}
_APPROX = {
    "oneOf": [
        {"type": "object", "required": ["nodes", "weights"], "properties": {"nodes": _NUMBERS, "weights": _NUMBERS}},
        {"type": "object", "required": ["measure", "coeffs"], "properties": {"measure": {"type": "string"}, "coeffs": _NUMBERS}},
    ]
}
REPORT_SCHEMA = {
    "type": "object",
    "required": ["config", "interval", "samples", "average", "sums", "timing_ms"],
    "properties": {
        "config": {"type": "object", "required": ["method", "k", "s", "n_v", "seed"]},
        "interval": {"oneOf": [{"type": "null"}, {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}]},
        "samples": {"type": "array", "items": _APPROX},
        "average": _APPROX,
        "sums": {"type": "object", "additionalProperties": {"type": "number"}},
        "timing_ms": {"type": "number", "minimum": 0},
    },
}
