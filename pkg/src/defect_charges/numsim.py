"""Method-of-lines simulation of the bosonic models on two half-lines.

The tilde fields live on ``[-L, 0]`` and the plain fields on ``[0, L]``;
with this orientation the bulk charges plus the defect charges are the
conserved totals.  Space is discretized with the fourth-order diagonal-norm
summation-by-parts operator (centered 4th-order stencil in the interior)
and time with classical RK4.  Boundary data enter through characteristic
penalty terms: at ``x = 0`` the incoming characteristics are solved from the
defect conditions, at ``x = +-L`` they are set to the vacuum (absorbing) or
to the negated outgoing wave (reflecting).

Sine-Gordon is evolved in first-order form ``(phi, u = phi_t, w = phi_x)``.
The Thirring fields are complex and already first order; the defect degree
of freedom ``X`` follows its time-evolution rule and ``alpha`` is recovered
from ``sin 2 alpha = (g a / 2m) |X|^2``.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .symexpr import Atom, evaluate

MODELS = ("SG", "BT")
# RK4 with the SBP(4,2) operator and unit penalties is stable up to about
# dt = 0.9 h; the bound leaves a safety factor for the mass terms.
STABILITY_C = {"SG": 0.5, "BT": 0.5}
Q_FLOOR = 1e-12
CSV_COLUMNS = (
    "t", "N_L", "N_R", "E_L", "E_R", "P_L", "P_R",
    "N_D", "E_D", "P_D", "N_tot", "E_tot", "P_tot",
)
_DEFAULTS = {
    "SG": {"m": 1.0, "sigma": 1.0},
    "BT": {"m": 1.0, "g": 1.0, "a": 1.5},
}


class ConfigError(ValueError):
    pass


class BlowUp(FloatingPointError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t:.6g}")
        self.t = t


# --------------------------------------------------------------------------- SBP operator


_BLOCK = np.array(
    [
        [-24 / 17, 59 / 34, -4 / 17, -3 / 34, 0, 0],
        [-1 / 2, 0, 1 / 2, 0, 0, 0],
        [4 / 43, -59 / 86, 0, 59 / 86, -4 / 43, 0],
        [3 / 98, 0, -59 / 98, 0, 32 / 49, -4 / 49],
    ]
)
_NORM = np.array([17 / 48, 59 / 48, 43 / 48, 49 / 48])


class SBP4:
    """First-derivative operator ``D = H^-1 Q`` on ``n + 1`` equispaced nodes."""

    def __init__(self, n: int, h: float):
        if n < 8:
            raise ConfigError("the SBP(4,2) operator needs at least 9 nodes")
        self.n, self.h = n, h
        w = np.ones(n + 1)
        w[:4] = _NORM
        w[-4:] = _NORM[::-1]
        self.weights = w * h

    def __call__(self, f: np.ndarray) -> np.ndarray:
        h = self.h
        out = np.empty_like(f)
        out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        out[:4] = _BLOCK @ f[:6] / h
        out[-4:] = -(_BLOCK @ f[::-1][:6])[::-1] / h
        return out

    def integrate(self, f: np.ndarray) -> float:
        return float(np.dot(self.weights, f))

    def matrix(self) -> np.ndarray:
        return np.array([self(e) for e in np.eye(self.n + 1)]).T


# --------------------------------------------------------------------------- configuration


@dataclass
class LatticeConfig:
    model: str
    L: float = 80.0
    n: int = 1024
    dt: float | None = None  # default 0.25 h
    t_end: float = 40.0
    params: dict = field(default_factory=dict)
    initial_condition: dict = field(default_factory=lambda: {"type": "zero"})
    defect: bool = True
    far_boundary: str = "absorbing"
    measure_every: int = 8

    def __post_init__(self):
        self.model = str(self.model).upper()
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if int(self.n) != self.n or self.n < 64:
            raise ConfigError("n must be an integer >= 64")
        self.n = int(self.n)
        if not self.L > 0 or not self.t_end >= 0:
            raise ConfigError("L must be positive and t_end non-negative")
        unknown = set(self.params) - set(_DEFAULTS[self.model])
        if unknown:
            raise ConfigError(f"unknown parameters for {self.model}: {sorted(unknown)}")
        self.params = {**_DEFAULTS[self.model], **{k: float(v) for k, v in self.params.items()}}
        if self.dt is None:
            self.dt = 0.25 * self.h
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.dt > self.max_dt * (1 + 1e-12):
            raise ConfigError(
                f"dt = {self.dt:.6g} violates the stability bound dt <= {STABILITY_C[self.model]} h"
                f" = {self.max_dt:.6g}"
            )
        if self.far_boundary not in ("absorbing", "reflecting"):
            raise ConfigError("far_boundary must be 'absorbing' or 'reflecting'")
        if int(self.measure_every) < 1:
            raise ConfigError("measure_every must be >= 1")
        if "type" not in self.initial_condition:
            raise ConfigError("initial_condition needs a 'type'")

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def max_dt(self) -> float:
        return STABILITY_C[self.model] * self.h

    @classmethod
    def from_dict(cls, data: dict) -> LatticeConfig:
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        extra = set(data) - allowed
        if extra:
            raise ConfigError(f"unknown configuration keys: {sorted(extra)}")
        if "model" not in data:
            raise ConfigError("configuration needs 'model'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> LatticeConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
        cfg = cls.from_dict(data)
        ic = cfg.initial_condition
        if ic.get("type") == "custom" and "file" in ic and not Path(ic["file"]).is_absolute():
            ic["file"] = str(Path(path).parent / ic["file"])
        return cfg

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


# --------------------------------------------------------------------------- state


@dataclass
class LatticeState:
    """``left``/``right`` hold the per-side arrays; BT adds the defect variable ``X``."""

    t: float
    left: np.ndarray
    right: np.ndarray
    X: complex = 0j
    flags: dict = field(default_factory=lambda: {"arcsin_clamped": 0})

    def copy(self) -> LatticeState:
        return LatticeState(self.t, self.left.copy(), self.right.copy(), self.X, dict(self.flags))


def grids(cfg: LatticeConfig) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(0.0, cfg.L, cfg.n + 1)
    return x - cfg.L, x


# --------------------------------------------------------------------------- initial data


def sg_kink(x, t, m, v, x0):
    """Travelling kink and its analytic t- and x-derivatives."""
    gam = 1.0 / math.sqrt(1.0 - v * v)
    z = m * gam * (x - x0 - v * t)
    phi = 4.0 * np.arctan(np.exp(z))
    phx = 2.0 * m * gam / np.cosh(z)
    phxx = -2.0 * (m * gam) ** 2 * np.tanh(z) / np.cosh(z)
    return phi, -v * phx, phx, phxx


def kink_residual(x, m, v, x0) -> float:
    """Pointwise residual of phi_tt - phi_xx + m^2 sin phi for the kink."""
    phi, _, _, phxx = sg_kink(x, 0.0, m, v, x0)
    return float(np.max(np.abs(v * v * phxx - phxx + m * m * np.sin(phi))))


def _bump(s):
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def bt_pulse(x, amplitude, width, x0, k=1.0):
    """Smooth compactly supported right-moving wave packet in phi2."""
    env = amplitude * _bump((x - x0) / width)
    phi2 = env * np.exp(1j * k * x)
    return np.zeros_like(phi2), phi2


def alpha_of(X: complex, p: dict, flags: dict | None = None) -> float:
    s = p["g"] * p["a"] / (2 * p["m"]) * abs(X) ** 2
    if s > 1.0:
        if flags is not None:
            flags["arcsin_clamped"] = flags.get("arcsin_clamped", 0) + 1
        s = 1.0
    return 0.5 * math.asin(s)


def _bt_initial_X(left, right, p) -> complex:
    """Solve X = phi1~ e^{i alpha} + phi1 e^{-i alpha} with alpha = alpha(X)."""
    t1, p1 = left[0, -1], right[0, 0]
    X = complex(t1 + p1)
    for _ in range(200):
        al = alpha_of(X, p)
        nxt = t1 * np.exp(1j * al) + p1 * np.exp(-1j * al)
        if abs(nxt - X) < 1e-15:
            return complex(nxt)
        X = complex(nxt)
    raise ConfigError("initial defect variable did not converge; amplitude too large")


def _load_custom(cfg: LatticeConfig, names) -> tuple[np.ndarray, np.ndarray]:
    ic = cfg.initial_condition
    try:
        data = json.loads(Path(ic["file"]).read_text())
    except (KeyError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read custom initial data: {exc}") from exc
    sides = []
    for side in ("left", "right"):
        block = data.get(side, {})
        rows = []
        for name in names:
            re = np.asarray(block.get(name, block.get(name + "_re", [])), dtype=float)
            im = np.asarray(block.get(name + "_im", np.zeros_like(re)), dtype=float)
            if re.shape != (cfg.n + 1,) or im.shape != (cfg.n + 1,):
                raise ConfigError(
                    f"custom field {side}.{name} must have n + 1 = {cfg.n + 1} samples, got {re.shape}"
                )
            rows.append(re + 1j * im if cfg.model == "BT" else re)
        sides.append(np.array(rows))
    return sides[0], sides[1]


def init(cfg: LatticeConfig) -> LatticeState:
    xl, xr = grids(cfg)
    p = cfg.params
    ic = dict(cfg.initial_condition)
    kind = ic.pop("type")
    if cfg.model == "SG":
        if kind == "sg_kink":
            v, x0 = float(ic.get("v", 0.0)), float(ic.get("x0", 0.0))
            if not abs(v) < 1:
                raise ConfigError("kink speed must satisfy |v| < 1")
            res = kink_residual(np.concatenate([xl, xr]), p["m"], v, x0)
            if res >= 1e-6:
                raise ConfigError(f"kink initial data fails the field equation (residual {res:.3g})")
            left = np.array(sg_kink(xl, 0.0, p["m"], v, x0)[:3])
            right = np.array(sg_kink(xr, 0.0, p["m"], v, x0)[:3])
        elif kind == "gaussian":
            amp, width = float(ic.get("amplitude", 1.0)), float(ic.get("width", 2.0))
            x0 = float(ic.get("x0", 0.0))
            sides = []
            for x in (xl, xr):
                z = (x - x0) / width
                phi = amp * np.exp(-z * z)
                sides.append(np.array([phi, np.zeros_like(x), -2 * z / width * phi]))
            left, right = sides
        elif kind == "zero":
            left, right = np.zeros((3, cfg.n + 1)), np.zeros((3, cfg.n + 1))
        elif kind == "custom":
            left, right = _load_custom(cfg, ("phi", "phi_t"))
            d = SBP4(cfg.n, cfg.h)
            left = np.array([left[0], left[1], d(left[0])])
            right = np.array([right[0], right[1], d(right[0])])
        else:
            raise ConfigError(f"unknown SG initial condition {kind!r}")
        state = LatticeState(0.0, left, right)
    else:
        if kind == "bt_pulse":
            amp = float(ic.get("amplitude", 0.1))
            width = float(ic.get("width", 4.0))
            x0 = float(ic.get("x0", -10.0))
            k = float(ic.get("k", 1.0))
            left = np.array(bt_pulse(xl, amp, width, x0, k))
            right = np.array(bt_pulse(xr, amp, width, x0, k))
        elif kind == "zero":
            left = np.zeros((2, cfg.n + 1), complex)
            right = np.zeros((2, cfg.n + 1), complex)
        elif kind == "custom":
            left, right = _load_custom(cfg, ("phi1", "phi2"))
        else:
            raise ConfigError(f"unknown BT initial condition {kind!r}")
        X = _bt_initial_X(left, right, p) if cfg.defect else 0j
        state = LatticeState(0.0, left.astype(complex), right.astype(complex), X)
    _project_junction(cfg, state)
    return state


# --------------------------------------------------------------------------- junction closures


def sg_junction(cfg: LatticeConfig, left, right):
    """Star values ``(u~, w~, u, w)`` at x = 0 from the outgoing characteristics."""
    Lc = right[1, 0] + right[2, 0]  # left-moving, leaves the right domain
    Rt = left[1, -1] - left[2, -1]  # right-moving, leaves the left domain
    if not cfg.defect:
        u = 0.5 * (Lc + Rt)
        w = 0.5 * (Lc - Rt)
        return u, w, u, w
    m, sigma = cfg.params["m"], cfg.params["sigma"]
    phi, phit = right[0, 0], left[0, -1]
    F = m * sigma * math.sin(0.5 * (phit + phi))
    G = m / sigma * math.sin(0.5 * (phi - phit))
    ut = 0.5 * (Lc + Rt) + F
    u = 0.5 * (Lc - Rt) + G
    return ut, ut - Rt, u, Lc - u


def bt_junction(cfg: LatticeConfig, left, right, X, flags=None):
    """Incoming ``(phi1~, phi2)`` at x = 0 and ``alpha``."""
    if not cfg.defect:
        return right[0, 0], left[1, -1], 0.0
    p = cfg.params
    al = alpha_of(X, p, flags)
    e = np.exp(1j * al)
    t1 = X / e - right[0, 0] / e**2
    p2 = -1j * p["a"] * X / e + left[1, -1] / e**2
    return t1, p2, al


def _project_junction(cfg: LatticeConfig, s: LatticeState) -> None:
    """Make the junction nodes satisfy the junction conditions exactly."""
    if cfg.model == "SG":
        ut, wt, u, w = sg_junction(cfg, s.left, s.right)
        s.left[1, -1], s.left[2, -1] = ut, wt
        s.right[1, 0], s.right[2, 0] = u, w
    else:
        t1, p2, _ = bt_junction(cfg, s.left, s.right, s.X)
        s.left[0, -1], s.right[1, 0] = t1, p2


# --------------------------------------------------------------------------- semi-discrete system


class Solver:
    def __init__(self, cfg: LatticeConfig):
        self.cfg = cfg
        self.D = SBP4(cfg.n, cfg.h)
        self.w0 = self.D.weights[0]
        self.reflect = cfg.far_boundary == "reflecting"

    # SG ------------------------------------------------------------------
    def _sg_rhs(self, left, right):
        D, m2, h0 = self.D, self.cfg.params["m"] ** 2, self.w0
        out = []
        for f in (left, right):
            phi, u, w = f
            out.append(np.array([u.copy(), D(w) - m2 * np.sin(phi), D(u)]))
        dl, dr = out
        ut, wt, u, w = sg_junction(self.cfg, left, right)
        # incoming characteristic penalties, unit strength
        r = (right[1, 0] - right[2, 0]) - (u - w)
        dr[1, 0] -= 0.5 * r / h0
        dr[2, 0] += 0.5 * r / h0
        dr[0, 0] = u
        lt = (left[1, -1] + left[2, -1]) - (ut + wt)
        dl[1, -1] -= 0.5 * lt / h0
        dl[2, -1] -= 0.5 * lt / h0
        dl[0, -1] = ut
        # far ends
        Lr = right[1, -1] + right[2, -1]
        target = -(right[1, -1] - right[2, -1]) if self.reflect else 0.0
        dr[1, -1] -= 0.5 * (Lr - target) / h0
        dr[2, -1] -= 0.5 * (Lr - target) / h0
        Rl = left[1, 0] - left[2, 0]
        target = -(left[1, 0] + left[2, 0]) if self.reflect else 0.0
        dl[1, 0] -= 0.5 * (Rl - target) / h0
        dl[2, 0] += 0.5 * (Rl - target) / h0
        return dl, dr, 0j

    # BT ------------------------------------------------------------------
    def _bt_rhs(self, left, right, X, flags=None):
        p, D, h0 = self.cfg.params, self.D, self.w0
        m, g, a = p["m"], p["g"], p["a"]
        out = []
        for f in (left, right):
            f1, f2 = f
            n1, n2 = np.abs(f1) ** 2, np.abs(f2) ** 2
            d1 = D(f1) - 1j * (m * f2 + g * n2 * f1)
            d2 = -D(f2) - 1j * (m * f1 + g * n1 * f2)
            out.append(np.array([d1, d2]))
        dl, dr = out
        t1, p2, al = bt_junction(self.cfg, left, right, X, flags)
        dl[0, -1] -= (left[0, -1] - t1) / h0
        dr[1, 0] -= (right[1, 0] - p2) / h0
        if self.reflect:
            dr[0, -1] -= (right[0, -1] + right[1, -1]) / h0
            dl[1, 0] -= (left[1, 0] + left[0, 0]) / h0
        else:
            dr[0, -1] -= right[0, -1] / h0
            dl[1, 0] -= left[1, 0] / h0
        dX = 0j
        if self.cfg.defect:
            e = np.exp(1j * al)
            P1, T2 = right[0, 0], left[1, -1]
            dens = abs(t1) ** 2 + abs(P1) ** 2 + abs(T2) ** 2 + abs(p2) ** 2
            dX = (
                m / (2 * a) * (P1 * e - t1 / e)
                - 0.5j * m * (T2 * e + p2 / e)
                - 0.25j * g * dens * X
            )
        return dl, dr, dX

    def rhs(self, left, right, X, flags=None):
        if self.cfg.model == "SG":
            return self._sg_rhs(left, right)
        return self._bt_rhs(left, right, X, flags)

    def step(self, s: LatticeState, dt: float) -> LatticeState:
        l0, r0, x0 = s.left, s.right, s.X
        k1 = self.rhs(l0, r0, x0, s.flags)
        k2 = self.rhs(l0 + 0.5 * dt * k1[0], r0 + 0.5 * dt * k1[1], x0 + 0.5 * dt * k1[2], s.flags)
        k3 = self.rhs(l0 + 0.5 * dt * k2[0], r0 + 0.5 * dt * k2[1], x0 + 0.5 * dt * k2[2], s.flags)
        k4 = self.rhs(l0 + dt * k3[0], r0 + dt * k3[1], x0 + dt * k3[2], s.flags)
        c = dt / 6.0
        left = l0 + c * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        right = r0 + c * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        X = x0 + c * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t = s.t + dt
        if not (np.all(np.isfinite(left)) and np.all(np.isfinite(right)) and np.isfinite(X)):
            raise BlowUp(t)
        return LatticeState(t, left, right, complex(X), s.flags)


def step(cfg: LatticeConfig, state: LatticeState, dt: float | None = None) -> LatticeState:
    dt = cfg.dt if dt is None else dt
    if dt > cfg.max_dt * (1 + 1e-12):
        raise ConfigError(f"dt = {dt:.6g} exceeds the stability bound {cfg.max_dt:.6g}")
    return Solver(cfg).step(state, dt)


# --------------------------------------------------------------------------- measurement


@lru_cache(maxsize=None)
def symbolic_charges(model: str):
    """Bulk densities and defect contributions as derived symbolically."""
    from .defects import defect_charges
    from .models import build_model
    from .riccati import bulk_charges

    spec = build_model(model)
    bulk = bulk_charges(spec)
    defect = {k: v.full for k, v in defect_charges(spec).items()}
    return bulk, defect


def _sg_values(f) -> dict:
    phi = Atom("phi")
    return {phi: f[0], phi.raise_t(): f[1], phi.raise_x(): f[2]}


def _bt_values(f, D) -> dict:
    vals = {}
    for i, arr in enumerate(f, start=1):
        name = f"phi{i}"
        dx = D(arr)
        vals[Atom(name)] = arr
        vals[Atom(name, True)] = np.conj(arr)
        vals[Atom(name, dx=1)] = dx
        vals[Atom(name, True, 1)] = np.conj(dx)
    return vals


def _real(x) -> float:
    return float(np.real(x))


class Meter:
    def __init__(self, cfg: LatticeConfig):
        self.cfg = cfg
        self.D = SBP4(cfg.n, cfg.h)
        self.bulk, self.defect = symbolic_charges(cfg.model)
        zero = np.zeros(1)
        if cfg.model == "SG":
            zvals = _sg_values([zero, zero, zero])
        else:
            zvals = {a: zero for a in _bt_values([zero, zero], lambda v: v)}
        # densities are measured relative to the zero-field vacuum
        self.vacuum = {
            k: _real(np.atleast_1d(evaluate(e, zvals, cfg.params).get(0, 0.0))[0]) for k, e in self.bulk.items()
        }

    def _bulk(self, f) -> dict:
        vals = _sg_values(f) if self.cfg.model == "SG" else _bt_values(f, self.D)
        out = {}
        for k, e in self.bulk.items():
            dens = np.real(evaluate(e, vals, self.cfg.params).get(0, 0.0))
            out[k] = self.D.integrate(np.broadcast_to(dens, (self.cfg.n + 1,)) - self.vacuum[k])
        return out

    def defect_values(self, s: LatticeState) -> dict:
        cfg = self.cfg
        if not cfg.defect:
            return {"N": 0.0, "E": 0.0, "P": 0.0}
        if cfg.model == "SG":
            phi = Atom("phi")
            vals = {phi: s.right[0, 0], phi._replace(tilde=True): s.left[0, -1]}
        else:
            t1, p2, al = bt_junction(cfg, s.left, s.right, s.X)
            p1 = s.right[0, 0]
            vals = {
                Atom("phi1"): p1, Atom("phi1", True): np.conj(p1),
                Atom("phi2"): p2, Atom("phi2", True): np.conj(p2),
                Atom("X", kind="boundary"): s.X, Atom("X", True, kind="boundary"): np.conj(s.X),
                Atom("alpha", kind="alpha"): al,
            }
        out = {}
        for k, e in self.defect.items():
            out[k] = _real(evaluate(e, vals, cfg.params).get(0, 0.0)) if e.terms else 0.0
        return out

    def row(self, s: LatticeState) -> dict:
        bl, br = self._bulk(s.left), self._bulk(s.right)
        d = self.defect_values(s)
        r = {"t": s.t}
        for k in ("N", "E", "P"):
            lv, rv = bl.get(k, 0.0), br.get(k, 0.0)
            r[f"{k}_L"], r[f"{k}_R"], r[f"{k}_D"] = lv, rv, d.get(k, 0.0)
            r[f"{k}_tot"] = lv + rv + d.get(k, 0.0)
        return r


def measure(cfg: LatticeConfig, state: LatticeState) -> dict:
    return Meter(cfg).row(state)


@dataclass
class ChargeReport:
    rows: list
    flags: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        if name.endswith("_bulk"):
            k = name[0]
            return self.column(f"{k}_L") + self.column(f"{k}_R")
        return np.array([r[name] for r in self.rows])

    def drift(self, name: str) -> float:
        q = self.column(name)
        return float(np.max(np.abs(q - q[0])) / max(abs(q[0]), Q_FLOOR))

    def summary(self) -> dict:
        out = {}
        for k in ("N", "E", "P"):
            out[f"{k}_tot"] = self.drift(f"{k}_tot")
            out[f"{k}_bulk"] = self.drift(f"{k}_bulk")
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([f"{r[c]:.17g}" for c in CSV_COLUMNS])


def run(cfg: LatticeConfig, csv_path=None, state: LatticeState | None = None) -> ChargeReport:
    solver, meter = Solver(cfg), Meter(cfg)
    s = init(cfg) if state is None else state
    nsteps = int(round(cfg.t_end / cfg.dt))
    rows = [meter.row(s)]
    for i in range(1, nsteps + 1):
        s = solver.step(s, cfg.dt)
        if i % cfg.measure_every == 0 or i == nsteps:
            rows.append(meter.row(s))
    if s.flags.get("arcsin_clamped"):
        warnings.warn(f"alpha clamped {s.flags['arcsin_clamped']} times", RuntimeWarning)
    report = ChargeReport(rows, dict(s.flags))
    report.final_state = s
    if csv_path is not None:
        report.write_csv(csv_path)
    return report


def evolve(cfg: LatticeConfig, state: LatticeState, t: float) -> LatticeState:
    solver = Solver(cfg)
    for _ in range(int(round(t / cfg.dt))):
        state = solver.step(state, cfg.dt)
    return state


def time_reversal_error(cfg: LatticeConfig) -> float:
    """Run forward, reverse, run again; distance to the (reversed) initial state.

    Without a defect plain time reversal (u -> -u) is a symmetry.  The defect
    conditions are only invariant under the combined reflection x -> -x,
    t -> -t with the two sides exchanged, so that map is used instead.
    """
    if cfg.model != "SG":
        raise ConfigError("the time-reversal check is implemented for sine-Gordon")
    s0 = init(cfg)
    s1 = evolve(cfg, s0.copy(), cfg.t_end)
    flip = _reverse if not cfg.defect else _mirror
    s2 = evolve(cfg, flip(s1), cfg.t_end)
    back = flip(s2)
    return float(max(np.max(np.abs(back.left - s0.left)), np.max(np.abs(back.right - s0.right))))


def _reverse(s: LatticeState) -> LatticeState:
    left, right = s.left.copy(), s.right.copy()
    left[1] *= -1
    right[1] *= -1
    return LatticeState(0.0, left, right)


def _mirror(s: LatticeState) -> LatticeState:
    left = s.right[:, ::-1].copy()
    right = s.left[:, ::-1].copy()
    # phi_t and phi_x both change sign under the combined reflection
    left[1:] *= -1
    right[1:] *= -1
    return LatticeState(0.0, left, right)


def convergence_slope(ns, drifts) -> float:
    """Least-squares slope of -log(drift) against log(n)."""
    x, y = np.log(np.asarray(ns, float)), np.log(np.asarray(drifts, float))
    return float(-np.polyfit(x, y, 1)[0])
