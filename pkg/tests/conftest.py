"""Shared fixtures, frozen reference values, and small numeric helpers.

REFERENCE below was frozen from an independent 40-digit computation
(mpmath): closed-form moment generating functions, numeric
differentiation for the z-derivative, and a multidimensional Newton
solve of the double-root system

    psi(z, eps) = 0,    d psi / d z (z, eps) = 0,

with residuals certified below 1e-30 before rounding to double.  The
package under test played no part in producing these numbers, so any
agreement is evidence, not circularity.
"""

import math

import pytest

from wavespeed.charfun import ModelParams, psi_eval
from wavespeed.kernels import (
    DiracKernel,
    GaussianKernel,
    TwoPointKernel,
    UniformKernel,
)

# Critical points (p = 2 throughout; kernel parameter 1 throughout).
REFERENCE = {
    "gauss_h0": dict(eps0=0.075655398064302, z0=1.8429734202059718,
                     c_star=3.6356330241126478, w0=0.5069195400038451),
    "gauss_h0.5": dict(eps0=0.32459330447083556, z0=1.0560807945626691,
                       c_star=1.755214594594332, w0=0.6016818671717756),
    "gauss_h1": dict(eps0=0.6669823215042359, z0=0.7496450563672468,
                     c_star=1.2244550268321388, w0=0.6122275134160694),
    "gauss_h2": dict(eps0=1.6088971349219328, z0=0.47441883528843726,
                     c_star=0.7883804765020843, w0=0.6017638049503157),
    "gauss_h3": dict(eps0=2.8853900817779268, z0=0.34657359027997264,
                     c_star=0.5887050112577373, w0=0.5887050112577373),
    "gauss_h5": dict(eps0=6.433714255240208, z0=0.22491862693456757,
                     c_star=0.3942476522736754, w0=0.5705008657310545),
    "gauss_h10": dict(eps0=21.096100282675476, z0=0.11965405475266963,
                      c_star=0.21772029263307552, w0=0.5495769517190704),
    "gauss_h20": dict(eps0=75.22614515537799, z0=0.06177389848651263,
                      c_star=0.11529635991798104, w0=0.5357835974219571),
    "gauss_h50": dict(eps0=436.03654928937544, z0=0.025197120818156445,
                      c_star=0.04788930705525327, w0=0.5261533809433648),
    "gauss_h100": dict(eps0=1698.7805661508078, z0=0.012681575742639159,
                       c_star=0.024262265896530428, w0=0.5226871965183045),
    "uniform_h1": dict(eps0=1.2333868930064356, z0=0.7192721275603366,
                       c_star=0.900430786597033, w0=0.7988089015466219),
    "uniform_h3": dict(eps0=4.786300200608808, z0=0.32100017129568204,
                       c_star=0.4570882241196003, w0=0.702271803028752),
    "twopoint_h1": dict(eps0=0.9584519876085695, z0=0.7612950081099756,
                        c_star=1.0214446047271941, w0=0.7453120850477262),
}

# Root of 1 + x = p*exp(-alpha*x) and the seed rho0 = 1/(4x) it induces.
IVP_REFERENCE = {
    (2.0, 1.0): dict(x=0.3748225281836234, rho0=0.6669823215042359),
    (math.e, 1.0): dict(x=0.5571455989976114, rho0=0.44871574046315277),
}

# Explicit bounds, Gaussian alpha=1, p=2 (closed forms evaluated at
# 40 digits; k1 = 2q + 4q e^{q^2} with q = 1/sqrt(3), k2 = 2 sqrt(ln 2)).
K1_GAUSS_P2 = 4.377729375610612
K2_GAUSS_P2 = 1.6651092223153956

# Minimum of the r-family upper bound at p=2, h=1, Gaussian alpha=1.
AD_OPT_GAUSS_P2_H1 = dict(value=2.459236883225107, r=0.5190832771887373)


def rel(a: float, b: float) -> float:
    """Relative gap with a floor so exact zeros compare cleanly."""
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def bisect_root(f, lo: float, hi: float, iters: int = 200) -> float:
    """Plain bisection; f(lo) and f(hi) must have opposite signs."""
    flo = f(lo)
    fhi = f(hi)
    assert flo * fhi < 0.0, f"no sign change on [{lo}, {hi}]"
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if hi - lo <= 1e-16 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def on_curve_points(params: ModelParams, kernel, eps: float, z_peak: float):
    """Both simple roots of psi(., eps) when eps sits below the critical
    value: one on each side of the interior minimum near z_peak."""
    def f(z):
        return psi_eval(z, eps, params, kernel).value

    assert f(z_peak) < 0.0, "eps is not below the critical curve"
    z_hi = z_peak
    while f(z_hi) < 0.0:
        z_hi *= 2.0
    left = bisect_root(f, 1e-12, z_peak)
    right = bisect_root(f, z_peak, z_hi)
    return left, right


@pytest.fixture
def gauss1() -> GaussianKernel:
    return GaussianKernel(1.0)


@pytest.fixture
def uniform1() -> UniformKernel:
    return UniformKernel(1.0)


@pytest.fixture
def twopoint1() -> TwoPointKernel:
    return TwoPointKernel(1.0)


@pytest.fixture
def dirac() -> DiracKernel:
    return DiracKernel()
