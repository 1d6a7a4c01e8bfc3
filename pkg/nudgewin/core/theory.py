"""Constants and hypotheses of the convergence theorems for windowed nudging.

Every c and C of the theorems is represented by one configurable scalar,
``absolute_c``. The checker is advisory: simulations run whatever it says.
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .assimilation import InterpolantSpec
from .spectral import shell_index

logger = logging.getLogger(__name__)

ASSUMPTIONS = (
    "M0, M1 and M2 bound the reference only after an unquantified transient time t > t0.",
    "One absolute constant (absolute_c) stands in for every c and C of the theorems.",
    "The theorems are two-dimensional; 3D reports are indicative only.",
)

L2 = "l2"
H1 = "h1"


@dataclass(frozen=True)
class TheoryInputs:
    nu: float
    lambda1: float
    f_l2: float
    mu: float
    kappa: float
    tau: float
    interpolant: InterpolantSpec
    dim: int = 2
    absolute_c: float = 1.0


@dataclass(frozen=True)
class Condition:
    theorem: str
    name: str
    lhs: float
    relation: str
    rhs: float
    satisfied: Optional[bool]

    def to_dict(self):
        return {
            "theorem": self.theorem,
            "name": self.name,
            "lhs": self.lhs,
            "relation": self.relation,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
        }


_RELATIONS = {
    ">=": np.greater_equal,
    ">": np.greater,
    "<=": np.less_equal,
    "<": np.less,
}


def _compare(theorem, name, lhs, relation, rhs):
    lhs, rhs = float(lhs), float(rhs)
    satisfied = bool(_RELATIONS[relation](lhs, rhs))
    return Condition(theorem, name, lhs, relation, rhs, satisfied)


def _not_applicable(theorem, reason):
    return Condition(theorem, reason, float("nan"), "n/a", float("nan"), None)


def grashof(f_l2_norm, nu, lambda1):
    return f_l2_norm / (nu ** 2 * lambda1)


class NormBounds(NamedTuple):
    M0: float
    M1: float
    M2: float


def norm_bounds(G, nu, lambda1, absolute_c=1.0):
    return NormBounds(
        2.0 * nu ** 2 * G ** 2,
        2.0 * nu ** 2 * lambda1 * G ** 2,
        absolute_c * nu ** 2 * lambda1 ** 2 * G ** 4,
    )


def constant_k(nu, lambda1, M0, M1, mu, absolute_c=1.0):
    R = 2.0 * M0
    return absolute_c * (
        1.0
        + M0 * M1 / (nu ** 2 * np.sqrt(lambda1))
        + R ** 2 / nu ** 2
        + mu ** 2 / (nu ** 2 * lambda1 ** 2)
    )


def theta_l2(mu, tau, K):
    """Per-window L2 factor exp(-mu tau / 2) + K mu tau (1 - exp(-mu tau / 2))."""
    s = mu * tau
    return float(np.exp(-0.5 * s) - K * s * np.expm1(-0.5 * s))


def sigma_l2(theta, M1, nu, kappa, absolute_c=1.0):
    return float(theta * np.exp(absolute_c * M1 ** 2 * kappa / nu))


def explicit_kappa_bound(nu, M1, K, absolute_c=1.0):
    """kappa bound obtained by fixing mu tau = 1 / (2K)."""
    if M1 == 0:
        return float("inf")
    return float(-nu / (absolute_c * M1 ** 2) * np.log(0.5 * (1.0 + np.exp(-0.25 / K))))


def h1_constants(nu, lambda1, M0, M1, M2, mu, absolute_c=1.0):
    """(K1, K2) of the H1 estimate."""
    c = absolute_c
    R1 = 2.0 * M1
    K2 = c * M1 * M2 / (nu * np.sqrt(lambda1)) + c * M0 ** 2 * M1 ** 2 / nu ** 3
    K1 = c * (
        5.0 * nu
        + M1 * M2 / (nu * lambda1 ** 1.5)
        + M0 ** 2 * M1 ** 2 / (nu ** 3 * np.sqrt(lambda1))
        + R1 ** 4 / (nu ** 3 * lambda1 ** 1.5)
        + mu ** 2 / (nu * lambda1 ** 2)
        + mu / (4.0 * lambda1)
    )
    return float(K1), float(K2)


def discriminant(K1, K2, mu):
    a = 1.5 * K2 ** 2 + mu ** 2 * K1
    return float(a ** 2 - 2.0 * K2 ** 4)


def theta_h1(mu, tau, kappa, K1, K2):
    s = mu * tau
    return float((np.exp(-0.5 * s) - 2.0 * s * K1 * np.expm1(-0.5 * s)) * np.exp(K2 * kappa))


def _lambda_m_plus_1(inputs):
    return inputs.lambda1 * shell_index(inputs.interpolant.m + 1, inputs.dim)


def _tau_window(theorem, inputs):
    ok = 0 < inputs.tau <= inputs.kappa
    return Condition(theorem, "tau_window", inputs.tau, "<=", inputs.kappa, bool(ok))


def check_l2_theorem(inputs, values=None):
    """Conditions of the L2 theorem; it is stated for modal projection only."""
    if inputs.interpolant.kind != "modal":
        return [_not_applicable(L2, "modal_interpolant_required")]
    values = values or _core_values(inputs)
    nu, mu, kappa, C = inputs.nu, inputs.mu, inputs.kappa, inputs.absolute_c
    M0, M1, R = values["M0"], values["M1"], values["R"]
    lam = inputs.lambda1

    mu_floor = C * M1 ** 2 / nu
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.array([
            1.0,
            np.divide(nu, R),
            np.divide(nu ** 2, R ** 2),
            np.divide(nu ** 1.5 * np.sqrt(mu), M0 * M1),
            np.divide(nu ** 2 * np.sqrt(lam), M0 * M1),
            np.divide(np.sqrt(nu * lam), np.sqrt(mu)),
            np.divide(nu ** 2 * lam ** 2, mu ** 2),
            np.divide(nu * mu, M1 ** 2),
        ], dtype=float)
        kappa_ceiling = np.divide(C, mu) * np.min(terms) if mu > 0 else float("nan")

    mu_condition = _compare(L2, "mu_lower", mu, ">=", mu_floor)
    if not mu > 0:
        mu_condition = dataclasses.replace(mu_condition, satisfied=False)
    return [
        _tau_window(L2, inputs),
        _compare(L2, "lambda_m_plus_1", _lambda_m_plus_1(inputs), ">=", 6.0 * mu / nu),
        mu_condition,
        _compare(L2, "sigma", values["sigma"], "<", 1.0),
        _compare(L2, "kappa_upper", kappa, "<=", kappa_ceiling),
    ]


def _h_and_c0(inputs):
    spec = inputs.interpolant
    if spec.kind == "modal":
        # c0 h^2 <-> 1 / lambda_{m+1}
        return 1.0 / np.sqrt(_lambda_m_plus_1(inputs)), 1.0
    return spec.h, spec.c0


def check_h1_theorem(inputs, values=None):
    values = values or _core_values(inputs)
    nu, mu, kappa, tau, C = inputs.nu, inputs.mu, inputs.kappa, inputs.tau, inputs.absolute_c
    lam = inputs.lambda1
    M0, M1, M2 = values["M0"], values["M1"], values["M2"]
    K1, K2, D = values["K1"], values["K2"], values["D"]

    mu_floor = max(
        C * M1 * M2 / (nu * np.sqrt(lam)),
        C * M0 ** 2 * M1 ** 2 / nu ** 3,
        C * M1 * M2 / (nu * np.sqrt(lam)) + C * M1 ** 4 / (nu ** 3 * lam),
        4.0 * K2,
    )
    h, c0 = _h_and_c0(inputs)
    with np.errstate(divide="ignore", invalid="ignore"):
        h_ceiling = 0.5 * np.sqrt(np.divide(nu, c0 * mu))

    conditions = [
        _tau_window(H1, inputs),
        _compare(H1, "mu_lower", mu, ">", mu_floor),
        _compare(H1, "h_upper", h, "<", h_ceiling),
        _compare(H1, "discriminant", D, ">", 0.0),
    ]
    if D > 0 and mu > 0:
        a = 1.5 * K2 ** 2 + mu ** 2 * K1
        # (a - sqrt(D)) / K2^3 rewritten without the cancellation
        root_bound = 2.0 * K2 / (a + np.sqrt(D))
        kappa_ceiling = min(
            np.exp(-K2) / (4.0 * C * mu ** 2 * K1),
            C * np.sqrt(lam * nu) / mu ** 1.5,
            root_bound,
        )
        conditions.append(_compare(H1, "kappa_upper", kappa, "<", kappa_ceiling))
    else:
        conditions.append(Condition(H1, "kappa_upper", kappa, "<", float("nan"), False))
    conditions.append(_compare(H1, "mu_tau", mu * tau, ">=", 4.0 * K2 * kappa))
    conditions.append(_compare(H1, "theta_h1", values["theta_h1"], "<", 1.0))
    return conditions


def _core_values(inputs):
    nu, lam, mu, C = inputs.nu, inputs.lambda1, inputs.mu, inputs.absolute_c
    G = grashof(inputs.f_l2, nu, lam)
    M0, M1, M2 = norm_bounds(G, nu, lam, C)
    K = constant_k(nu, lam, M0, M1, mu, C)
    theta = theta_l2(mu, inputs.tau, K)
    K1, K2 = h1_constants(nu, lam, M0, M1, M2, mu, C)
    return {
        "G": G,
        "M0": M0,
        "M1": M1,
        "M2": M2,
        "R": 2.0 * M0,
        "R1": 2.0 * M1,
        "K": K,
        "K1": K1,
        "K2": K2,
        "theta": theta,
        "sigma": sigma_l2(theta, M1, nu, inputs.kappa, C),
        "theta_h1": theta_h1(mu, inputs.tau, inputs.kappa, K1, K2),
        "D": discriminant(K1, K2, mu),
        "kappa_explicit": explicit_kappa_bound(nu, M1, K, C),
    }


@dataclass
class TheoryReport:
    G: float
    M0: float
    M1: float
    M2: float
    R: float
    R1: float
    K: float
    K1: float
    K2: float
    theta: float
    sigma: float
    theta_h1: float
    D: float
    kappa_explicit: float
    absolute_c: float
    conditions: list = field(default_factory=list)
    assumptions: tuple = ASSUMPTIONS

    SCALARS = (
        "G", "M0", "M1", "M2", "R", "R1", "K", "K1", "K2",
        "theta", "sigma", "theta_h1", "D", "kappa_explicit", "absolute_c",
    )

    def conditions_for(self, theorem):
        return [c for c in self.conditions if c.theorem == theorem]

    def satisfied(self, theorem):
        conditions = self.conditions_for(theorem)
        return bool(conditions) and all(c.satisfied is True for c in conditions)

    def to_dict(self):
        report = {name: getattr(self, name) for name in self.SCALARS}
        report["conditions"] = [c.to_dict() for c in self.conditions]
        report["assumptions"] = list(self.assumptions)
        return report

    def to_text(self):
        lines = [f"# assumption: {note}" for note in self.assumptions]
        lines += [f"{name} = {getattr(self, name)!r}" for name in self.SCALARS]
        for c in self.conditions:
            key = f"{c.theorem}.{c.name}"
            status = "n/a" if c.satisfied is None else ("pass" if c.satisfied else "fail")
            lines.append(f"{key}.lhs = {c.lhs!r}")
            lines.append(f"{key}.relation = {c.relation}")
            lines.append(f"{key}.rhs = {c.rhs!r}")
            lines.append(f"{key}.satisfied = {status}")
        lines.append(f"l2.all = {'pass' if self.satisfied(L2) else 'fail'}")
        lines.append(f"h1.all = {'pass' if self.satisfied(H1) else 'fail'}")
        return "\n".join(lines) + "\n"

    def csv_rows(self):
        return [c.to_dict() for c in self.conditions]


def theory_report(inputs):
    values = _core_values(inputs)
    conditions = check_l2_theorem(inputs, values) + check_h1_theorem(inputs, values)
    report = TheoryReport(
        **{name: values[name] for name in TheoryReport.SCALARS if name != "absolute_c"},
        absolute_c=inputs.absolute_c,
        conditions=conditions,
    )
    logger.debug("Theory report: L2 %s, H1 %s", report.satisfied(L2), report.satisfied(H1))
    return report


def scan_parameters(inputs, theorem, mu_values, kappa_values, tau_fractions=(1.0,), h_values=None):
    """First (mu, kappa, tau, h) on the grid where every condition holds, else None."""
    check = check_l2_theorem if theorem == L2 else check_h1_theorem
    h_options = [None] if h_values is None else list(h_values)
    for mu in mu_values:
        for kappa in kappa_values:
            for fraction in tau_fractions:
                for h in h_options:
                    spec = inputs.interpolant
                    if h is not None:
                        spec = dataclasses.replace(spec, h=h)
                    trial = dataclasses.replace(
                        inputs, mu=mu, kappa=kappa, tau=fraction * kappa, interpolant=spec
                    )
                    conditions = check(trial)
                    if all(c.satisfied is True for c in conditions):
                        return {"mu": mu, "kappa": kappa, "tau": trial.tau, "h": h}
    return None
