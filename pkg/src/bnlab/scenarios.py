"""Catalog of the well-posedness scenarios and their admissible parameter ranges.

Each catalogued scenario pairs a concrete (domain, boundary noise) combination
with the interval of weight exponents theta in which the boundary problem is
well posed in the weighted space, plus any decay requirement on delta.  The
predictions are table lookups with the arithmetic spelled out; requests
outside the catalog get an explicit no-prediction answer, never a guess.
"""

from dataclasses import dataclass

from .convolution import ConvolutionSetup
from .geometry import WeightedSpaceParams, half_space, interval01, half_line, unit_ball
from .noise import (atomic_measure, bessel_measure, circle_white_noise, endpoint_noise,
                    homogeneous_noise, lebesgue_measure, rotational_noise)


@dataclass(frozen=True)
class Prediction:
    scenario: str
    theta_lo: float
    theta_hi: float
    delta_min: float = 0.0
    notes: str = ""

    def admits(self, theta, delta=None):
        ok = self.theta_lo < theta < self.theta_hi
        if delta is not None and self.delta_min > 0:
            ok = ok and delta > self.delta_min
        return ok

    def describe(self):
        out = f"theta in ({self.theta_lo:g}, {self.theta_hi:g})"
        if self.delta_min > 0:
            out += f", delta > {self.delta_min:g}"
        return out


class NoPrediction(Exception):
    """The setup does not match any catalogued scenario."""


def catalog(p=2.0):
    """Scenario table: id, description, admissible range (formula and value at p)."""
    low = f"(p-1, 2p-1) = ({p - 1:g}, {2 * p - 1:g})"
    mid = f"(3p/2-1, 2p-1) = ({1.5 * p - 1:g}, {2 * p - 1:g})"
    return [
        ("p71", "interval (0,1), independent endpoint noises", f"theta in {low}"),
        ("p72", "half line, endpoint noise", f"theta in {low}, delta > 1/2"),
        ("p74", "unit ball (d>=2), sup-summable boundary series", f"theta in {low}"),
        ("p78", "white noise on the circle (ball d=2)", f"theta in {mid}"),
        ("p711i", "bounded C^{1,a} region, sup-summable series (majorant route)",
         f"theta in {low}"),
        ("p711ii", "bounded C^{1,a} region in the plane, boundary white noise",
         f"theta in {mid}"),
        ("p713", "half space, finite spectral measure",
         f"theta in {low}, delta > (m+1)/2"),
        ("p717", "half plane, space-time white noise on the boundary line (m=1)",
         f"theta in {mid}, delta > 1"),
        ("p718i", "half plane, Bessel spectral density, kappa >= m",
         f"theta in {low}, delta > (m+1)/2"),
        ("p718ii", "half plane, Bessel spectral density, m-2 < kappa < m",
         "theta in (p + p(m-kappa)/2 - 1, 2p-1), delta > (m+1)/2"),
        ("r88", "Dirac atom boundary noise on the circle",
         "rejected - Dirac boundary noise not treatable"),
    ]


list_scenarios = catalog


def predict_wellposedness(setup, m=1):
    """Admissible theta-interval for the setup's scenario, with verdict helpers.

    Raises NoPrediction for uncatalogued combinations.
    """
    p = setup.params.p
    dom, nz = setup.domain.kind, setup.noise.kind
    if dom == "interval01" and nz == "endpoints":
        return Prediction("p71", p - 1, 2 * p - 1)
    if dom == "halfline" and nz == "endpoints":
        return Prediction("p72", p - 1, 2 * p - 1, delta_min=0.5)
    if dom == "unitball" and nz == "finite_series":
        return Prediction("p74", p - 1, 2 * p - 1)
    if dom == "unitball" and nz == "circle_white":
        return Prediction("p78", 1.5 * p - 1, 2 * p - 1)
    if dom == "generic" and nz == "finite_series":
        return Prediction("p711i", p - 1, 2 * p - 1)
    if dom == "generic" and nz == "circle_white":
        return Prediction("p711ii", 1.5 * p - 1, 2 * p - 1)
    if dom == "halfspace" and nz == "homogeneous":
        mu = setup.noise.measure
        delta_min = (m + 1) / 2.0
        if mu.kind == "atoms" or (mu.kind == "bessel" and mu.kappa > mu.m):
            sid = "p713" if mu.kind == "atoms" else "p718i"
            return Prediction(sid, p - 1, 2 * p - 1, delta_min=delta_min)
        if mu.kind == "lebesgue":
            if mu.m != 1:
                raise NoPrediction("space-time white boundary noise is catalogued for m = 1 only")
            return Prediction("p717", 1.5 * p - 1, 2 * p - 1, delta_min=1.0)
        if mu.kind == "bessel":
            if mu.kappa == mu.m:
                return Prediction("p718i", p - 1, 2 * p - 1, delta_min=delta_min)
            if mu.m - 2 < mu.kappa < mu.m:
                lo = p + 0.5 * p * (mu.m - mu.kappa) - 1
                return Prediction("p718ii", lo, 2 * p - 1, delta_min=delta_min)
            raise NoPrediction("kappa <= m-2 is not treatable")
    raise NoPrediction(f"no catalogued scenario for {dom} + {nz}")


def build_setup(scenario, p=2.0, theta=None, delta=None, horizon=0.5, alpha=0.0,
                kappa=0.5, truncation=16, z_max=24.0, n_cells=64):
    """Instantiate the (domain, noise, params) tuple of a catalogued scenario."""
    scenario = scenario.lower()
    if scenario == "p71":
        dom, nz, mode, ddef = interval01(), None, "exact", 0.0
        nz = endpoint_noise(dom)
    elif scenario == "p72":
        dom = half_line()
        nz, mode, ddef = endpoint_noise(dom), "exact", 1.0
    elif scenario == "p74":
        dom = unit_ball(2)
        nz = rotational_noise([1.0, 0.5, 0.25], [[1.0, 0.0], [0.0, 2.0], [3.0, 1.0]])
        mode, ddef = "majorant", 0.0
    elif scenario == "p78":
        dom = unit_ball(2)
        nz, mode, ddef = circle_white_noise(truncation), "majorant", 0.0
    elif scenario == "p713":
        dom = half_space(2)
        nz = homogeneous_noise(atomic_measure([[0.7], [1.9]], [0.6, 0.4]),
                               z_max=z_max, n_cells=n_cells)
        mode, ddef = "exact", 1.5
    elif scenario == "p717":
        dom = half_space(2)
        nz = homogeneous_noise(lebesgue_measure(1), z_max=z_max, n_cells=n_cells)
        mode, ddef = "exact", 1.5
    elif scenario in ("p718", "p718i", "p718ii"):
        dom = half_space(2)
        nz = homogeneous_noise(bessel_measure(kappa, 1), z_max=z_max, n_cells=n_cells)
        mode, ddef = "exact", 1.5
    else:
        raise NoPrediction(f"no setup builder for scenario {scenario}")
    delta = ddef if delta is None else delta
    setup = ConvolutionSetup(dom, nz, WeightedSpaceParams(p, theta, delta),
                             horizon=horizon, alpha=alpha, mode=mode)
    return setup, predict_wellposedness(setup)
