"""Model configuration: the chain density a(l), the angle intensity sigma(l, t),
grids, variance scaling and the seed.

Function specs come in three kinds (constant, polynomial in the argument,
piecewise-linear tabulated) and are all exactly integrable, including their
squares, which is what the closed forms downstream rely on.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

KINDS = ("constant", "polynomial", "tabulated")
DEFAULT_SEED = 12345
_DOMAIN_SLACK = 1e-12


class ConfigError(ValueError):
    """Raised with the complete list of violations found in a config."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DomainError(ValueError):
    pass


class NumericalError(ArithmeticError):
    """A non-finite intermediate; ``where`` names the site, step or position."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message if where is None else f"{message} (at {where})")


@dataclass(frozen=True)
class FunctionSpec1D:
    kind: str
    value: float = 0.0
    coeffs: tuple = ()
    knots: tuple = ()
    values: tuple = ()
    domain: tuple = (0.0, 1.0)

    @classmethod
    def constant(cls, value, domain=(0.0, 1.0)):
        return cls("constant", value=float(value), domain=tuple(map(float, domain)))

    @classmethod
    def polynomial(cls, coeffs, domain=(0.0, 1.0)):
        """Coefficients in increasing degree: [c0, c1, ...] is c0 + c1*l + ..."""
        return cls("polynomial", coeffs=tuple(float(c) for c in coeffs),
                   domain=tuple(map(float, domain)))

    @classmethod
    def tabulated(cls, knots, values, domain=None):
        knots = tuple(float(k) for k in knots)
        if domain is None:
            domain = (knots[0], knots[-1]) if knots else (0.0, 1.0)
        return cls("tabulated", knots=knots, values=tuple(float(v) for v in values),
                   domain=tuple(map(float, domain)))

    def with_domain(self, lo, hi):
        return replace(self, domain=(float(lo), float(hi)))

    def _check_domain(self, x):
        lo, hi = self.domain
        slack = _DOMAIN_SLACK * max(1.0, hi - lo)
        x = np.asarray(x, dtype=float)
        if np.any(x < lo - slack) or np.any(x > hi + slack) or not np.all(np.isfinite(x)):
            raise DomainError(f"argument outside domain [{lo}, {hi}]")
        return np.clip(x, lo, hi)

    def __call__(self, x):
        x = self._check_domain(x)
        if self.kind == "constant":
            out = np.full_like(x, self.value)
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(x, self.coeffs) if self.coeffs else np.zeros_like(x)
        else:
            out = np.interp(x, self.knots, self.values)
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = self._check_domain(x)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "polynomial":
            d = np.polynomial.polynomial.polyder(self.coeffs) if len(self.coeffs) > 1 else [0.0]
            out = np.polynomial.polynomial.polyval(x, d)
        else:
            # central difference; one-sided at the ends of the domain
            lo, hi = self.domain
            eps = 1e-6 * (hi - lo)
            xp = np.minimum(x + eps, hi)
            xm = np.maximum(x - eps, lo)
            out = (np.interp(xp, self.knots, self.values)
                   - np.interp(xm, self.knots, self.values)) / (xp - xm)
        return out if out.ndim else float(out)

    def antiderivative(self, x, squared=False):
        """Integral from the lower domain end to x (of f, or of f**2)."""
        x = self._check_domain(x)
        lo = self.domain[0]
        P = np.polynomial.polynomial
        if self.kind == "constant":
            v = self.value * self.value if squared else self.value
            out = v * (x - lo)
        elif self.kind == "polynomial":
            c = P.polymul(self.coeffs, self.coeffs) if squared else np.asarray(self.coeffs)
            anti = P.polyint(c) if len(c) else [0.0]
            out = P.polyval(x, anti) - P.polyval(lo, anti)
        else:
            out = _tabulated_cumulative(np.asarray(self.knots), np.asarray(self.values), x, squared)
            out = out - _tabulated_cumulative(np.asarray(self.knots), np.asarray(self.values),
                                              np.asarray(lo), squared)
        return out if np.ndim(out) else float(out)

    def integral(self, x0, x1, squared=False):
        if np.any(np.asarray(x1) < np.asarray(x0)):
            raise DomainError("reversed integration bounds")
        return self.antiderivative(x1, squared) - self.antiderivative(x0, squared)

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coeffs": list(self.coeffs)}
        return {"kind": "tabulated", "knots": list(self.knots), "values": list(self.values)}


def _tabulated_cumulative(knots, values, x, squared):
    # exact integral of the piecewise-linear interpolant (or its square) from knots[0]
    h = np.diff(knots)
    v0, v1 = values[:-1], values[1:]
    seg = h * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0 if squared else h * (v0 + v1) / 2.0
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    j = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 2)
    s = x - knots[j]
    slope = (values[j + 1] - values[j]) / h[j]
    fa = values[j]
    if squared:
        part = fa * fa * s + fa * slope * s * s + slope * slope * s ** 3 / 3.0
    else:
        part = fa * s + 0.5 * slope * s * s
    return cum[j] + part


@dataclass(frozen=True)
class FunctionSpec2D:
    """Separable intensity sigma(l, t) = f(l) * g(t)."""

    f: FunctionSpec1D
    g: FunctionSpec1D

    def __call__(self, l, t):
        return np.multiply(self.f(l), self.g(t))

    def time_integral_sq(self, t):
        """int_0^t g(tau)^2 dtau."""
        return self.g.antiderivative(t, squared=True)

    def to_dict(self):
        return {"f": self.f.to_dict(), "g": self.g.to_dict()}


@dataclass(frozen=True)
class RngPolicy:
    seed: int = DEFAULT_SEED

    def stream(self, trajectory, component):
        from .rng import substream
        return substream(self.seed, trajectory, component)


@dataclass(frozen=True)
class ModelConfig:
    a: FunctionSpec1D
    sigma: FunctionSpec2D
    L: float = 1.0
    N: int = 400
    n: int = 400
    T: float = 1.0
    time_steps: int = 200
    kappa: float = 1.0
    rng: RngPolicy = field(default_factory=RngPolicy)

    @property
    def delta(self):
        return self.L / self.N

    @property
    def seed(self):
        return self.rng.seed

    @property
    def l_obs(self):
        """Length parameter of the observed prefix, n * delta."""
        return self.n * self.delta

    def sites(self):
        """l_s = s * delta for s = 1..n."""
        return np.arange(1, self.n + 1) * self.delta

    def with_updates(self, **kw):
        if "seed" in kw:
            kw["rng"] = RngPolicy(int(kw.pop("seed")))
        cfg = replace(self, **kw)
        if "L" in kw:
            cfg = replace(cfg, a=cfg.a.with_domain(0.0, cfg.L),
                          sigma=FunctionSpec2D(cfg.sigma.f.with_domain(0.0, cfg.L), cfg.sigma.g))
        if "T" in kw:
            cfg = replace(cfg, sigma=FunctionSpec2D(cfg.sigma.f, cfg.sigma.g.with_domain(0.0, cfg.T)))
        return cfg

    def to_dict(self):
        return {"a": self.a.to_dict(), "sigma": self.sigma.to_dict(), "L": self.L,
                "N": self.N, "n": self.n, "T": self.T, "time_steps": self.time_steps,
                "kappa": self.kappa, "seed": self.seed}


def make_config(a=1.0, f=1.0, g=1.0, L=1.0, N=400, n=None, T=1.0, time_steps=200,
                kappa=1.0, seed=DEFAULT_SEED):
    """Build a config; scalars become constant specs, sequences polynomial coefficients."""

    def spec(v, dom):
        if isinstance(v, FunctionSpec1D):
            return v.with_domain(*dom)
        if np.isscalar(v):
            return FunctionSpec1D.constant(v, dom)
        return FunctionSpec1D.polynomial(v, dom)

    return ModelConfig(a=spec(a, (0.0, L)),
                       sigma=FunctionSpec2D(spec(f, (0.0, L)), spec(g, (0.0, T))),
                       L=float(L), N=int(N), n=int(N if n is None else n), T=float(T),
                       time_steps=int(time_steps), kappa=float(kappa), rng=RngPolicy(int(seed)))


def eval_a(spec, l):
    return spec(l)


def integral_a(spec, l0, l1):
    if l1 < l0:
        raise DomainError("reversed integration bounds")
    spec._check_domain([l0, l1])
    return float(spec.integral(l0, l1))


def eta_tilde_sq(config, l, t):
    """kappa * int_0^t sigma(l, tau)^2 dtau (exact for every supported kind of g)."""
    config.sigma.g._check_domain(t)
    f = config.sigma.f(l)
    return config.kappa * np.multiply(f, f) * config.sigma.time_integral_sq(t)


def _spec_violations(spec, path, lo, hi, positive=False, probe=None):
    out = []
    if spec.kind not in KINDS:
        return [f"{path}.kind: unknown kind {spec.kind!r}"]
    if spec.kind == "constant" and not math.isfinite(spec.value):
        out.append(f"{path}.value: must be finite")
    if spec.kind == "polynomial":
        if not spec.coeffs:
            out.append(f"{path}.coeffs: must not be empty")
        elif not all(math.isfinite(c) for c in spec.coeffs):
            out.append(f"{path}.coeffs: must be finite")
    if spec.kind == "tabulated":
        k = np.asarray(spec.knots)
        if len(k) < 2 or len(k) != len(spec.values):
            out.append(f"{path}: knots and values must have equal length >= 2")
            return out
        if np.any(np.diff(k) <= 0):
            out.append(f"{path}.knots: must be strictly increasing")
        if k[0] > lo or k[-1] < hi:
            out.append(f"{path}.knots: must cover [{lo}, {hi}]")
        if not np.all(np.isfinite(spec.values)):
            out.append(f"{path}.values: must be finite")
    if positive and not out and probe:
        grid = np.linspace(lo, hi, probe + 1)
        if np.any(spec.with_domain(lo, hi)(grid) <= 0):
            out.append(f"{path}: a must be positive on [0, L]")
    return out


def check_config(config):
    """Return every violation in the config as 'path: message' strings."""
    errs = []
    c = config
    if not (isinstance(c.N, (int, np.integer)) and c.N >= 1):
        errs.append("N: must be an integer >= 1")
    if not (isinstance(c.n, (int, np.integer)) and c.n >= 1):
        errs.append("n: must be an integer >= 1")
    elif isinstance(c.N, (int, np.integer)) and c.n > c.N:
        errs.append("n: n must not exceed N")
    if not (isinstance(c.time_steps, (int, np.integer)) and c.time_steps >= 1):
        errs.append("time_steps: must be an integer >= 1")
    if not (math.isfinite(c.L) and c.L > 0):
        errs.append("L: must be positive")
    if not (math.isfinite(c.T) and c.T > 0):
        errs.append("T: must be positive")
    if not (math.isfinite(c.kappa) and c.kappa > 0):
        errs.append("kappa: must be positive")
    if not (0 <= int(c.seed) < 2 ** 64):
        errs.append("seed: must be an unsigned 64-bit integer")
    if errs and any(e.startswith(("L:", "T:", "N:")) for e in errs):
        return errs
    probe = 10 * int(c.N) if isinstance(c.N, (int, np.integer)) and c.N >= 1 else 1000
    errs += _spec_violations(c.a, "a", 0.0, c.L, positive=True, probe=probe)
    errs += _spec_violations(c.sigma.f, "sigma.f", 0.0, c.L)
    errs += _spec_violations(c.sigma.g, "sigma.g", 0.0, c.T)
    return errs


def validate_config(config):
    errs = check_config(config)
    if errs:
        raise ConfigError(errs)
    return config


_TOP_KEYS = {"a", "sigma", "L", "N", "n", "T", "time_steps", "kappa", "seed"}
_SPEC_KEYS = {"constant": {"kind", "value"}, "polynomial": {"kind", "coeffs"},
              "tabulated": {"kind", "knots", "values"}}


def _spec_from_dict(d, path, domain, errs):
    if not isinstance(d, dict):
        errs.append(f"{path}: must be an object")
        return None
    kind = d.get("kind")
    if kind not in _SPEC_KEYS:
        errs.append(f"{path}.kind: must be one of {', '.join(KINDS)}")
        return None
    extra = set(d) - _SPEC_KEYS[kind]
    missing = _SPEC_KEYS[kind] - set(d)
    for k in sorted(extra):
        errs.append(f"{path}.{k}: unknown key")
    for k in sorted(missing):
        errs.append(f"{path}.{k}: missing")
    if extra or missing:
        return None
    try:
        if kind == "constant":
            return FunctionSpec1D.constant(float(d["value"]), domain)
        if kind == "polynomial":
            return FunctionSpec1D.polynomial(d["coeffs"], domain)
        return FunctionSpec1D.tabulated(d["knots"], d["values"], domain)
    except (TypeError, ValueError):
        errs.append(f"{path}: non-numeric entries")
        return None


def config_from_dict(d, env=None):
    """Parse the JSON config schema; raises ConfigError listing every problem."""
    errs = []
    if not isinstance(d, dict):
        raise ConfigError(["<root>: must be an object"])
    for k in sorted(set(d) - _TOP_KEYS):
        errs.append(f"{k}: unknown key")
    for k in ("a", "sigma", "L", "N", "T"):
        if k not in d:
            errs.append(f"{k}: missing")
    if errs:
        raise ConfigError(errs)
    try:
        L, T = float(d["L"]), float(d["T"])
    except (TypeError, ValueError):
        raise ConfigError(["L/T: must be numbers"])
    a = _spec_from_dict(d["a"], "a", (0.0, L), errs)
    sig = d["sigma"]
    f = g = None
    if not isinstance(sig, dict) or set(sig) != {"f", "g"}:
        errs.append("sigma: must be an object with exactly the keys f and g")
    else:
        f = _spec_from_dict(sig["f"], "sigma.f", (0.0, L), errs)
        g = _spec_from_dict(sig["g"], "sigma.g", (0.0, T), errs)

    def integer(key, default):
        v = d.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            errs.append(f"{key}: must be an integer")
            return 1
        return v

    N = integer("N", None)
    n = integer("n", d.get("N"))
    steps = integer("time_steps", 200)
    seed = d.get("seed")
    if seed is None:
        env = env if env is not None else {}
        seed = env.get("STOCHAIN_SEED", DEFAULT_SEED)
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        errs.append("seed: must be an unsigned 64-bit integer")
        seed = 0
    try:
        kappa = float(d.get("kappa", 1.0))
    except (TypeError, ValueError):
        errs.append("kappa: must be a number")
        kappa = 1.0
    if errs:
        raise ConfigError(errs)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError(["seed: must be an unsigned 64-bit integer"])
    cfg = ModelConfig(a=a, sigma=FunctionSpec2D(f, g), L=L, N=N, n=n, T=T, time_steps=steps,
                      kappa=kappa, rng=RngPolicy(seed))
    return validate_config(cfg)


def load_config(path, env=None):
    with open(Path(path), encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"<file>: invalid JSON ({exc})"])
    return config_from_dict(d, env=env)


def default_config(**overrides):
    """a = sigma = 1 on [0, 1] x [0, 1], N = n = 400, 200 time steps, kappa = 1."""
    return make_config(**overrides)


def config_summary(config) -> dict[str, Any]:
    d = config.to_dict()
    d["delta"] = config.delta
    return d
