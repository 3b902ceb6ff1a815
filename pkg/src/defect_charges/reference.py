"""Hand-entered reference forms used as goldens.

Each entry is typed in independently of the solvers.  The ``*_REJECTED``
tables hold variant forms (sign or factor slips) that do not satisfy the
defining equations; tests check that the computation matches the main table
and differs from every rejected variant.
"""

from __future__ import annotations

from fractions import Fraction as F

from .models import ALPHA, BT_X, BT_XD, GT_X, GT_XD, SG_PHI, SG_PI
from .symexpr import ONE, Atom, I, SymExpr, expi, param

m, g, a, sigma = param("m"), param("g"), param("a"), param("sigma")
half = F(1, 2)


def _f(name, dagger=False, dx=0, tilde=False, odd=False) -> SymExpr:
    return SymExpr.atom(Atom(name, dagger=dagger, dx=dx, tilde=tilde, odd=odd))


def _aux(name: str) -> SymExpr:
    return SymExpr.atom(Atom(name, kind="aux"))


# --------------------------------------------------------------------------- BT

p1, p2 = _f("phi1"), _f("phi2")
p1d, p2d = _f("phi1", True), _f("phi2", True)
p1x, p2x = _f("phi1", dx=1), _f("phi2", dx=1)
p1dx, p2dx = _f("phi1", True, 1), _f("phi2", True, 1)
p1t, p2t = _f("phi1", tilde=True), _f("phi2", tilde=True)
p1dt, p2dt = _f("phi1", True, tilde=True), _f("phi2", True, tilde=True)
sqgm = param("g", half) * param("m", -half)
X, Xd = SymExpr.atom(BT_X), SymExpr.atom(BT_XD)
w = lambda c: expi(ALPHA, c)  # noqa: E731

BT_GAMMA = {
    # (branch, i, j, order)
    ("inf", 2, 1, 1): sqgm * p1d,
    ("inf", 2, 1, 2): SymExpr(),
    ("inf", 2, 1, 3): sqgm * (-2 * I / m * p1dx + p2d + g / m * p2d * p2 * p1d),
    ("zero", 2, 1, 1): -sqgm * p2d,
    ("zero", 2, 1, 2): SymExpr(),
    ("zero", 2, 1, 3): sqgm * (-2 * I / m * p2dx - p1d - g / m * p1d * p1 * p2d),
    ("inf", 1, 2, 1): sqgm * p1,
    ("inf", 1, 2, 2): SymExpr(),
    ("inf", 1, 2, 3): sqgm * (2 * I / m * p1x + p2 + g / m * p2d * p2 * p1),
    ("zero", 1, 2, 1): -sqgm * p2,
    ("zero", 1, 2, 2): SymExpr(),
    ("zero", 1, 2, 3): sqgm * (2 * I / m * p2x - p1 - g / m * p1d * p1 * p2),
}

_bt_rho = p1d * p1 + p2d * p2
_bt_mix = p2d * p1 + p1d * p2
_bt_quart = p1d * p1 * p2d * p2

BT_DENSITIES = {
    # (j, branch, order) -> integrand
    (1, "inf", 0): I * g / 4 * _bt_rho,
    (1, "inf", 2): -I * g / m * (I * p1 * p1dx - m * half * _bt_mix - g * half * _bt_quart),
    (1, "zero", 0): -I * g / 4 * _bt_rho,
    (1, "zero", 2): -I * g / m * (I * p2 * p2dx + m * half * _bt_mix + g * half * _bt_quart),
    (2, "inf", 0): -I * g / 4 * _bt_rho,
    (2, "inf", 2): -I * g / m * (I * p1d * p1x + m * half * _bt_mix + g * half * _bt_quart),
    (2, "zero", 0): I * g / 4 * _bt_rho,  # corrected, see REJECTED below
    (2, "zero", 2): -I * g / m * (I * p2d * p2x - m * half * _bt_mix - g * half * _bt_quart),
}

BT_DENSITIES_REJECTED = {
    (2, "zero", 0): -I * g / 4 * _bt_rho,
}

BT_CHARGES = {
    "N": _bt_rho,
    "E": I * half * (p1 * p1dx - p1d * p1x - p2 * p2dx + p2d * p2x) - m * _bt_mix - g * _bt_quart,
    "P": I * half * (p1 * p1dx - p1d * p1x + p2 * p2dx - p2d * p2x),
}

BT_DEFECT = {
    (1, "inf", 2): I / a * w(2) + g / m * X * p1d * w(1),
    (1, "zero", 2): -I * a * w(-2) - I * a * g / m * X * p2d * w(-1),
    (2, "inf", 2): -I / a * w(-2) + g / m * Xd * p1 * w(-1),
    (2, "zero", 2): I * a * w(2) + I * a * g / m * Xd * p2 * w(1),
}

_cos2 = (w(2) + w(-2)) * half
BT_DEFECT_CHARGES = {
    "E": -m / (2 * g) * (a + ONE / a) * (w(2) + w(-2))
    + I * half * (X * p1d * w(1) - Xd * p1 * w(-1))
    - a * half * (X * p2d * w(-1) + Xd * p2 * w(1)),
    "P": m / (2 * g) * (a - ONE / a) * (w(2) + w(-2))
    + I * half * (X * p1d * w(1) - Xd * p1 * w(-1))
    + a * half * (X * p2d * w(-1) + Xd * p2 * w(1)),
}

BT_DEFECT_ELIMINATED = {
    "E": I * half * ((p1d * p1t - p2dt * p2) * w(2) - (p1dt * p1 - p2d * p2t) * w(-2))
    - m / g * (a + ONE / a) * _cos2,
    "P": I * half * ((p1d * p1t + p2dt * p2) * w(2) - (p1dt * p1 + p2d * p2t) * w(-2))
    + m / g * (a - ONE / a) * _cos2,
}

# N_D = 4 alpha / g, held as the coefficient of alpha in the log part
BT_NUMBER_ALPHA_COEFF = 4 / g


# --------------------------------------------------------------------------- GT

s1, s2 = _f("psi1", odd=True), _f("psi2", odd=True)
s1d, s2d = _f("psi1", True, odd=True), _f("psi2", True, odd=True)
s1x, s2x = _f("psi1", dx=1, odd=True), _f("psi2", dx=1, odd=True)
s1dx, s2dx = _f("psi1", True, 1, odd=True), _f("psi2", True, 1, odd=True)
s1t, s2t = _f("psi1", tilde=True, odd=True), _f("psi2", tilde=True, odd=True)
s1dt, s2dt = _f("psi1", True, tilde=True, odd=True), _f("psi2", True, tilde=True, odd=True)
Y, Yd = SymExpr.atom(GT_X), SymExpr.atom(GT_XD)
r2gm = param("2", half) * param("g", half) * param("m", -half)  # sqrt(2g/m)
rmg2 = param("m", half) * param("g", half) * param("2", -half)  # sqrt(mg/2)
_gt_rho = s2d * s2 + s1d * s1
_gt_bil = s1d * s1 + s2d * s2

G21_1, G21_2 = _aux("G21_1"), _aux("G21_2")
Gh21_1, Gh21_2 = _aux("Gh21_1"), _aux("Gh21_2")
G12_1, G12_2 = _aux("G12_1"), _aux("G12_2")
Gh12_1, Gh12_2 = _aux("Gh12_1"), _aux("Gh12_2")

GT_GAMMA = {
    ("inf", 3, 1, 1): r2gm * s1d,
    ("inf", 3, 1, 2): -(r2gm * s1) * G21_1,
    ("inf", 3, 1, 3): -2 * I / m * (r2gm * s1dx + I * rmg2 * (s2d - s1 * G21_2) + I * g * half * r2gm * s2d * s2 * s1d),
    ("zero", 3, 1, 1): -r2gm * s2d,
    ("zero", 3, 1, 2): -(r2gm * s2) * Gh21_1,
    ("zero", 3, 1, 3): -2 * I / m * (r2gm * s2dx - I * rmg2 * (s1d + s2 * Gh21_2) - I * g * half * r2gm * s1d * s1 * s2d),
    ("inf", 2, 3, 1): r2gm * s1d,
    ("inf", 1, 3, 2): SymExpr(),
    ("inf", 2, 3, 2): SymExpr(),
    ("zero", 1, 3, 2): SymExpr(),
    ("zero", 2, 3, 2): SymExpr(),
    ("zero", 1, 3, 1): r2gm * s2,
    ("zero", 3, 2, 1): -r2gm * s2,
    ("zero", 2, 3, 1): r2gm * s2d,
    ("inf", 3, 2, 3): 2 / m * (I * r2gm * s1x + rmg2 * (s2 + s1d * G12_2) + g * half * r2gm * s2d * s2 * s1),
    ("zero", 3, 2, 3): 2 / m * (-I * r2gm * s2x + rmg2 * (s1 - s2d * Gh12_2) + g * half * r2gm * s1d * s1 * s2),
    ("inf", 1, 3, 3): 2 / m * (-I * r2gm * s1x - rmg2 * s2 - g * half * r2gm * s2d * s2 * s1),
    ("zero", 1, 3, 3): 2 / m * (-I * r2gm * s2x + rmg2 * s1 + g * half * r2gm * s1d * s1 * s2),
    ("inf", 2, 3, 3): 2 / m * (I * r2gm * s1dx - rmg2 * s2d - g * half * r2gm * s2d * s2 * s1d),
    ("zero", 2, 3, 3): 2 / m * (-I * r2gm * s2dx - rmg2 * s1d - g * half * r2gm * s1d * s1 * s2d),
    # corrected entries, see REJECTED below
    ("inf", 1, 3, 1): -r2gm * s1,
    ("inf", 3, 2, 1): -r2gm * s1,
    ("inf", 3, 2, 2): r2gm * G12_1 * s1d,
    ("zero", 3, 2, 2): -r2gm * Gh12_1 * s2d,
}

GT_GAMMA_REJECTED = {
    ("inf", 1, 3, 1): r2gm * s1,
    ("inf", 3, 2, 1): r2gm * s1,
    ("inf", 3, 2, 2): r2gm * s1d,
    ("zero", 3, 2, 2): -r2gm * s2d,
}

GT_AUX_DX = {
    "G21_1": -I * g * _gt_rho * G21_1,
    "G21_2": -I * g * _gt_rho * G21_2 + 2 * g / m * s1d * s1dx + 2 * I * g * s1d * s2d,
    "Gh21_1": I * g * _gt_rho * Gh21_1,
    "Gh21_2": I * g * _gt_rho * Gh21_2 - 2 * g / m * s2d * s2dx - 2 * I * g * s1d * s2d,
    "G12_1": I * g * _gt_bil * G12_1,
    "Gh12_1": -I * g * _gt_bil * Gh12_1,
    "G12_2": I * g * _gt_bil * G12_2 + 2 * g / m * s1 * s1x - 2 * I * g * s1 * s2,
    "Gh12_2": -I * g * _gt_bil * Gh12_2 - 2 * g / m * s2 * s2x + 2 * I * g * s1 * s2,
}

_gt_mix = s2d * s1 + s1d * s2
_gt_quart = s2d * s2 * s1d * s1
GT_DENSITIES = {
    (1, "inf", 0): I * g * half * _gt_rho,
    (1, "inf", 2): -2 * g / m * s1 * s1dx + I * g * _gt_mix + I * g * g / m * _gt_quart,
    (1, "zero", 0): -I * g * half * _gt_rho,
    (1, "zero", 2): -2 * g / m * s2 * s2dx - I * g * _gt_mix - I * g * g / m * _gt_quart,
    (2, "inf", 0): -I * g * half * _gt_rho,
    (2, "inf", 2): -2 * g / m * s1d * s1x + I * g * _gt_mix + I * g * g / m * _gt_quart,
    (2, "zero", 0): I * g * half * _gt_rho,
    (2, "zero", 2): -2 * g / m * s2d * s2x - I * g * _gt_mix - I * g * g / m * _gt_quart,
    (3, "inf", 0): SymExpr(),
    (3, "zero", 0): SymExpr(),
    (3, "inf", 2): -2 * g / m * (s1d * s1x + s1 * s1dx) + 2 * I * g * _gt_mix + 2 * I * g * g / m * _gt_quart,
    (3, "zero", 2): -2 * g / m * (s2d * s2x + s2 * s2dx) - 2 * I * g * _gt_mix - 2 * I * g * g / m * _gt_quart,
}

GT_CHARGES = {
    "N": _gt_rho,
    "E": I * half * (s1 * s1dx + s1d * s1x - s2 * s2dx - s2d * s2x) + m * _gt_mix + g * _gt_quart,
    "P": I * half * (s1 * s1dx + s1d * s1x + s2 * s2dx + s2d * s2x),
}

_c = I * g * a / (2 * m)
GT_DEFECT = {
    (1, "inf", 0): _c * Yd * Y,
    (1, "zero", 0): -_c * Yd * Y,
    (1, "inf", 2): -g / m * Yd * Y - 2 * g / m * Y * s1d,
    (1, "zero", 2): -g * a * a / m * Yd * Y + 2 * I * a * g / m * Y * s2d,
    (2, "inf", 0): -_c * Yd * Y,
    (2, "zero", 0): _c * Yd * Y,
    (2, "inf", 2): g / m * Yd * Y - 2 * g / m * Yd * s1,
    (2, "zero", 2): g * a * a / m * Yd * Y - 2 * I * a * g / m * Yd * s2,
    (3, "inf", 0): SymExpr(),
    (3, "zero", 0): SymExpr(),
    (3, "inf", 2): -2 * g / m * Yd * s1 - 2 * g / m * Y * s1d,
    (3, "zero", 2): -2 * I * a * g / m * Yd * s2 + 2 * I * a * g / m * Y * s2d,
}

GT_DEFECT_CHARGES = {
    "N": a / m * Yd * Y,
    "E": I * half * ((Yd * s1 + Y * s1d) - I * a * (Yd * s2 - Y * s2d)),
    "P": I * half * ((Yd * s1 + Y * s1d) + I * a * (Yd * s2 - Y * s2d)),
}

GT_DEFECT_ELIMINATED = {
    "E": I * half * (s1dt * s1 - s1d * s1t + s2dt * s2 - s2d * s2t)
    - a * g / (2 * m) * s1dt * s1t * s1d * s1
    - g / (2 * m * a) * s2dt * s2t * s2d * s2,
    "P": I * half * (s1dt * s1 - s1d * s1t - s2dt * s2 + s2d * s2t)
    - a * g / (2 * m) * s1dt * s1t * s1d * s1
    + g / (2 * m * a) * s2dt * s2t * s2d * s2,
}


# --------------------------------------------------------------------------- SG

PHI_T = SymExpr.atom(SG_PI)
PHI_X = SymExpr.atom(SG_PHI.raise_x())
PHI_XT = SymExpr.atom(SG_PI.raise_x())
PHI_XX = SymExpr.atom(SG_PHI.raise_x(2))
PHI_TILDE = Atom("phi", tilde=True)
e = lambda c: expi(SG_PHI, c)  # noqa: E731
et = lambda c: expi(PHI_TILDE, c)  # noqa: E731
_sin = (e(1) - e(-1)) / (2 * I)
_cos = (e(1) + e(-1)) * half
_plus, _minus = PHI_T + PHI_X, PHI_T - PHI_X

SG_GAMMA = {
    ("inf", 2, 1, 0): I * e(-half),
    ("inf", 1, 2, 0): I * e(half),
    ("zero", 2, 1, 0): I * e(half),
    ("zero", 1, 2, 0): I * e(-half),
    ("inf", 2, 1, 1): -I / m * _plus * e(-half),
    ("zero", 2, 1, 1): I / m * _minus * e(half),
    ("inf", 1, 2, 1): -I / m * _plus * e(half),
    ("zero", 1, 2, 1): I / m * _minus * e(-half),
    ("inf", 2, 1, 2): e(-half) * (-2 / (m * m) * (PHI_XT + PHI_XX) + I / (2 * m * m) * _plus * _plus + _sin),
    ("zero", 2, 1, 2): e(half) * (-2 / (m * m) * (PHI_XT - PHI_XX) + I / (2 * m * m) * _minus * _minus - _sin),
    ("inf", 1, 2, 2): e(half) * (2 / (m * m) * (PHI_XT + PHI_XX) + I / (2 * m * m) * _plus * _plus - _sin),
    ("zero", 1, 2, 2): e(-half) * (2 / (m * m) * (PHI_XT - PHI_XX) + I / (2 * m * m) * _minus * _minus + _sin),
}

SG_DENSITIES = {
    (1, "inf", 1): (ONE / (4 * m * I)) * (half * _plus * _plus - m * m * _cos),
    (1, "zero", 1): I / (4 * m) * (half * _minus * _minus - m * m * _cos),
    (2, "inf", 1): I / (4 * m) * (half * _plus * _plus - m * m * _cos),
    (2, "zero", 1): (ONE / (4 * m * I)) * (half * _minus * _minus - m * m * _cos),
}

SG_CHARGES = {
    "E": half * (PHI_T * PHI_T + PHI_X * PHI_X) - m * m * _cos,
    "P": PHI_T * PHI_X,
}

SG_DEFECT = {
    (1, "inf", 1): -I * sigma * e(-half) * et(-half),
    (2, "inf", 1): I * sigma * e(half) * et(half),
    # corrected entries, see REJECTED below
    (1, "zero", 1): I / sigma * et(half) * e(-half) - ONE / m * _minus,
    (2, "zero", 1): -I / sigma * et(-half) * e(half) - ONE / m * _minus,
}

SG_DEFECT_REJECTED = {
    (1, "zero", 1): I / sigma * et(-half) * e(half) - ONE / m * _minus,
    (2, "zero", 1): -I / sigma * et(half) * e(-half) - ONE / m * _minus,
}

_cos_p = (e(half) * et(half) + e(-half) * et(-half)) * half
_cos_m = (et(half) * e(-half) + et(-half) * e(half)) * half
SG_DEFECT_CHARGES = {
    "E": 2 * m * (sigma * _cos_p + ONE / sigma * _cos_m),
    "P": 2 * m * (sigma * _cos_p - ONE / sigma * _cos_m),
}


GAMMA = {"BT": BT_GAMMA, "GT": GT_GAMMA, "SG": SG_GAMMA}
DENSITIES = {"BT": BT_DENSITIES, "GT": GT_DENSITIES, "SG": SG_DENSITIES}
CHARGES = {"BT": BT_CHARGES, "GT": GT_CHARGES, "SG": SG_CHARGES}
DEFECT = {"BT": BT_DEFECT, "GT": GT_DEFECT, "SG": SG_DEFECT}
DEFECT_CHARGES = {"BT": BT_DEFECT_CHARGES, "GT": GT_DEFECT_CHARGES, "SG": SG_DEFECT_CHARGES}
DEFECT_ELIMINATED = {"BT": BT_DEFECT_ELIMINATED, "GT": GT_DEFECT_ELIMINATED}
