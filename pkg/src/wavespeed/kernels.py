"""Symmetric dispersal kernels and their exponential moments.

Every kernel here is an even probability measure K on the real line
whose moment functional

    M(lam) = integral K(s) exp(lam*s) ds

is finite for every real lam.  Evenness makes M even, which the rest of
the package leans on in two places: the decayed moment
integral K(s) exp(-w*s) ds equals M(w), and the signed first moment
integral s*K(s) exp(-w*s) ds equals -M'(w).

Closed-form variants (Gaussian, Uniform, TwoPoint, DiracLimit) know
M, M' and M'' exactly.  TabulatedKernel carries atoms (s_j, m_j) on the
nonnegative half line, each atom standing for the symmetric pair +-s_j;
that representation keeps evenness exact in floating point instead of
merely approximate.

Heavy-tailed kernels (Laplace, Cauchy, ...) have no finite M and are
rejected at construction by not existing here.  Kernels with atoms are
supported even though much of the surrounding theory is usually stated
for densities; their `density` method reports point masses and says so.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod

import numpy as np

from .errors import DomainError, MgfOverflowError, UnsupportedVariantError

# exp() overflows a little above 709; keep headroom for products
_EXP_LIMIT = 700.0


def checked_exp(x: float) -> float:
    """exp(x), but raise MgfOverflowError instead of returning inf."""
    if x > _EXP_LIMIT:
        raise MgfOverflowError(
            f"exp({x:.6g}) exceeds floating-point range; shrink the bracket"
        )
    return math.exp(x)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise DomainError(msg)


class Kernel(ABC):
    """Even probability kernel with finite exponential moments.

    Immutable after construction; instances are freely shareable across
    threads.  Subclasses implement the moment functional M and its first
    two derivatives, the second moment, and a discretization used by the
    front simulator.
    """

    @abstractmethod
    def mgf(self, lam: float) -> float:
        """M(lam) >= 1, even in lam.  Raises MgfOverflowError when the
        value would leave floating-point range."""

    @abstractmethod
    def mgf_deriv(self, lam: float) -> float:
        """M'(lam); odd in lam, nonnegative for lam >= 0."""

    @abstractmethod
    def mgf_deriv2(self, lam: float) -> float:
        """M''(lam); even in lam, positive unless the kernel is a point
        mass at the origin."""

    @abstractmethod
    def second_moment(self) -> float:
        """integral s^2 K(s) ds, equal to M''(0)."""

    @abstractmethod
    def spec_string(self) -> str:
        """Round-trippable CLI spec, e.g. ``gaussian:alpha=1``."""

    def density(self, s: float) -> float:
        """Pointwise density K(s).  Variants made of atoms either report
        the atom masses (documented per class) or refuse."""
        raise UnsupportedVariantError(
            f"{type(self).__name__} has no pointwise density; "
            "use mgf-level operations"
        )

    def support_radius(self) -> float:
        """Smallest S with K supported in [-S, S]; inf if none."""
        return math.inf

    def discrete_weights(self, dx: float, half_width: float):
        """Discretize K on a grid of spacing dx for convolution.

        Returns (offsets, weights): integer grid offsets -W..W and
        nonnegative weights renormalized to unit sum.  The default
        implementation samples the density; atom variants override.
        """
        _require(dx > 0.0, f"dx must be positive, got {dx}")
        _require(half_width > 0.0, f"half_width must be positive, got {half_width}")
        cut = min(half_width, self.support_radius() + dx)
        nw = max(1, int(math.ceil(cut / dx)))
        offsets = np.arange(-nw, nw + 1)
        weights = np.array([self.density(j * dx) for j in offsets], dtype=float)
        total = weights.sum()
        if not total > 0.0:
            raise DomainError("kernel discretization has no mass; widen half_width")
        return offsets, weights / total

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec_string()!r})"


class GaussianKernel(Kernel):
    """Heat kernel (4*pi*alpha)^(-1/2) exp(-s^2/(4*alpha)).

    M(lam) = exp(alpha*lam^2); the parameter alpha > 0 is the variance
    divided by two, so second_moment() = 2*alpha.
    """

    def __init__(self, alpha: float):
        _require(math.isfinite(alpha) and alpha > 0.0,
                 f"gaussian kernel needs alpha > 0, got {alpha}")
        self.alpha = float(alpha)

    def mgf(self, lam: float) -> float:
        return checked_exp(self.alpha * lam * lam)

    def mgf_deriv(self, lam: float) -> float:
        return 2.0 * self.alpha * lam * self.mgf(lam)

    def mgf_deriv2(self, lam: float) -> float:
        a = self.alpha
        return (2.0 * a + 4.0 * a * a * lam * lam) * self.mgf(lam)

    def second_moment(self) -> float:
        return 2.0 * self.alpha

    def density(self, s: float) -> float:
        return math.exp(-s * s / (4.0 * self.alpha)) / math.sqrt(4.0 * math.pi * self.alpha)

    def spec_string(self) -> str:
        return f"gaussian:alpha={self.alpha:g}"


class UniformKernel(Kernel):
    """Box kernel 1/(2a) on [-a, a].

    M(lam) = sinh(a*lam)/(a*lam).  Near lam = 0 the ratio and its
    derivatives are evaluated by series to dodge cancellation in
    differences like u*cosh(u) - sinh(u).
    """

    _SERIES_CUT = 0.25

    def __init__(self, a: float):
        _require(math.isfinite(a) and a > 0.0,
                 f"uniform kernel needs a > 0, got {a}")
        self.a = float(a)

    def mgf(self, lam: float) -> float:
        u = self.a * lam
        if abs(u) > _EXP_LIMIT:
            raise MgfOverflowError(f"sinh({u:.6g}) exceeds floating-point range")
        if abs(u) <= self._SERIES_CUT:
            u2 = u * u
            return 1.0 + u2 / 6.0 + u2 * u2 / 120.0 + u2 * u2 * u2 / 5040.0 \
                + u2 * u2 * u2 * u2 / 362880.0
        return math.sinh(u) / u

    def mgf_deriv(self, lam: float) -> float:
        # d/dlam sinh(u)/u = a * (u*cosh(u) - sinh(u)) / u^2
        u = self.a * lam
        if abs(u) > _EXP_LIMIT:
            raise MgfOverflowError(f"sinh({u:.6g}) exceeds floating-point range")
        if abs(u) <= self._SERIES_CUT:
            u2 = u * u
            g = u * (1.0 / 3.0 + u2 / 30.0 + u2 * u2 / 840.0
                     + u2 * u2 * u2 / 45360.0 + u2 * u2 * u2 * u2 / 3991680.0)
            return self.a * g
        return self.a * (u * math.cosh(u) - math.sinh(u)) / (u * u)

    def mgf_deriv2(self, lam: float) -> float:
        u = self.a * lam
        if abs(u) > _EXP_LIMIT:
            raise MgfOverflowError(f"sinh({u:.6g}) exceeds floating-point range")
        a2 = self.a * self.a
        if abs(u) <= self._SERIES_CUT:
            u2 = u * u
            gp = 1.0 / 3.0 + u2 / 10.0 + u2 * u2 / 168.0 \
                + u2 * u2 * u2 / 6480.0 + u2 * u2 * u2 * u2 / 443520.0
            return a2 * gp
        sh, ch = math.sinh(u), math.cosh(u)
        return a2 * ((u * u + 2.0) * sh - 2.0 * u * ch) / (u * u * u)

    def second_moment(self) -> float:
        return self.a * self.a / 3.0

    def density(self, s: float) -> float:
        return 1.0 / (2.0 * self.a) if abs(s) <= self.a else 0.0

    def support_radius(self) -> float:
        return self.a

    def spec_string(self) -> str:
        return f"uniform:a={self.a:g}"


class TwoPointKernel(Kernel):
    """Half masses at s = -a and s = +a; M(lam) = cosh(a*lam).

    a = 0 collapses to the point mass at the origin.  There is no
    Lebesgue density; `density` reports the atom mass (0.5 at +-a).
    """

    def __init__(self, a: float):
        _require(math.isfinite(a) and a >= 0.0,
                 f"twopoint kernel needs a >= 0, got {a}")
        self.a = float(a)

    def _u(self, lam: float) -> float:
        u = self.a * lam
        if abs(u) > _EXP_LIMIT:
            raise MgfOverflowError(f"cosh({u:.6g}) exceeds floating-point range")
        return u

    def mgf(self, lam: float) -> float:
        return math.cosh(self._u(lam))

    def mgf_deriv(self, lam: float) -> float:
        return self.a * math.sinh(self._u(lam))

    def mgf_deriv2(self, lam: float) -> float:
        return self.a * self.a * math.cosh(self._u(lam))

    def second_moment(self) -> float:
        return self.a * self.a

    def density(self, s: float) -> float:
        # atom masses, not a Lebesgue density
        if self.a == 0.0:
            return 1.0 if s == 0.0 else 0.0
        return 0.5 if abs(s) == self.a else 0.0

    def support_radius(self) -> float:
        return self.a

    def discrete_weights(self, dx: float, half_width: float):
        _require(dx > 0.0, f"dx must be positive, got {dx}")
        j = int(round(self.a / dx))
        if j == 0:
            return np.array([0]), np.array([1.0])
        return np.array([-j, 0, j]), np.array([0.5, 0.0, 0.5])

    def spec_string(self) -> str:
        return f"twopoint:a={self.a:g}"


class DiracKernel(Kernel):
    """Point mass at the origin: M == 1, all moments vanish.

    Realizes the vanishing-dispersal limit in which the nonlocal term
    becomes purely local; the only variant with closed-form critical
    speed, hence the prime test oracle.  Bound inequalities that are
    strict for spread-out kernels may degenerate to equalities here.
    """

    def mgf(self, lam: float) -> float:
        return 1.0

    def mgf_deriv(self, lam: float) -> float:
        return 0.0

    def mgf_deriv2(self, lam: float) -> float:
        return 0.0

    def second_moment(self) -> float:
        return 0.0

    def support_radius(self) -> float:
        return 0.0

    def discrete_weights(self, dx: float, half_width: float):
        _require(dx > 0.0, f"dx must be positive, got {dx}")
        return np.array([0]), np.array([1.0])

    def spec_string(self) -> str:
        return "dirac"


class TabulatedKernel(Kernel):
    """Kernel given by atoms on the nonnegative half line.

    Atom j sits at s_j >= 0 with mass m_j standing for the symmetric
    pair -s_j, +s_j together (for s_j = 0 it is a single atom), so

        M(lam)  = sum_j m_j cosh(lam*s_j)
        M'(lam) = sum_j m_j s_j sinh(lam*s_j)

    are even/odd exactly, and sum_j m_j = 1 after the constructor
    renormalizes.  Built either from explicit atoms (`from_atoms`,
    backing the CSV kernel spec) or from a density via composite
    Gauss-Legendre panels (`from_density`, used for quadrature twins of
    the closed-form kernels).
    """

    _GL_ORDER = 32

    def __init__(self, support, masses, label: str = "table"):
        s = np.asarray(support, dtype=float)
        m = np.asarray(masses, dtype=float)
        _require(s.ndim == 1 and s.shape == m.shape and s.size > 0,
                 "tabulated kernel needs matching 1-D support and mass arrays")
        _require(bool(np.all(np.isfinite(s))) and bool(np.all(np.isfinite(m))),
                 "tabulated kernel entries must be finite")
        _require(bool(np.all(s >= 0.0)), "tabulated support lives on s >= 0 "
                 "(each atom stands for the pair +-s)")
        _require(bool(np.all(m >= 0.0)), "tabulated masses must be nonnegative")
        total = m.sum()
        _require(total > 0.0, "tabulated kernel has zero total mass")
        order = np.argsort(s)
        self._s = s[order]
        self._m = m[order] / total
        self._label = label

    @classmethod
    def from_atoms(cls, positions, weights, label: str = "table") -> "TabulatedKernel":
        """Fold signed atoms (s_i, w_i) onto the half line.

        Input may list one or both signs; mass accumulates at |s_i|, so a
        one-sided listing is symmetrized automatically.
        """
        pos = np.asarray(positions, dtype=float)
        wts = np.asarray(weights, dtype=float)
        _require(pos.shape == wts.shape and pos.ndim == 1 and pos.size > 0,
                 "atom positions and weights must be matching 1-D arrays")
        folded: dict[float, float] = {}
        for s_i, w_i in zip(np.abs(pos), wts):
            folded[float(s_i)] = folded.get(float(s_i), 0.0) + float(w_i)
        items = sorted(folded.items())
        return cls([s for s, _ in items], [m for _, m in items], label=label)

    @classmethod
    def from_density(cls, density, half_width: float, nodes: int = 513,
                     label: str = "table") -> "TabulatedKernel":
        """Quadrature kernel: composite Gauss-Legendre panels on [0, S].

        `nodes` is the total budget across [-S, S]; the half line gets
        nodes//2 of them, grouped into panels of order 32.  Pair masses
        are 2*weight*density(node), renormalized to unit total.
        """
        _require(half_width > 0.0, f"half_width must be positive, got {half_width}")
        _require(nodes >= 8, f"need at least 8 quadrature nodes, got {nodes}")
        n_half = max(cls._GL_ORDER, nodes // 2)
        panels = max(1, math.ceil(n_half / cls._GL_ORDER))
        edges = np.linspace(0.0, half_width, panels + 1)
        xg, wg = np.polynomial.legendre.leggauss(cls._GL_ORDER)
        pos, mass = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            s = mid + half * xg
            pos.append(s)
            mass.append(2.0 * half * wg * np.array([density(v) for v in s]))
        return cls(np.concatenate(pos), np.concatenate(mass), label=label)

    def mgf(self, lam: float) -> float:
        self._guard(lam)
        return float(np.dot(self._m, np.cosh(lam * self._s)))

    def mgf_deriv(self, lam: float) -> float:
        self._guard(lam)
        return float(np.dot(self._m * self._s, np.sinh(lam * self._s)))

    def mgf_deriv2(self, lam: float) -> float:
        self._guard(lam)
        return float(np.dot(self._m * self._s * self._s, np.cosh(lam * self._s)))

    def _guard(self, lam: float) -> None:
        top = abs(lam) * float(self._s[-1])
        if top > _EXP_LIMIT:
            raise MgfOverflowError(f"cosh({top:.6g}) exceeds floating-point range")

    def second_moment(self) -> float:
        return float(np.dot(self._m, self._s * self._s))

    def density(self, s: float) -> float:
        # atom-mass lookup (exact position match), not a Lebesgue density
        hits = np.nonzero(self._s == abs(s))[0]
        if hits.size == 0:
            return 0.0
        m = float(self._m[hits].sum())
        return m if s == 0.0 else 0.5 * m

    def support_radius(self) -> float:
        return float(self._s[-1])

    def discrete_weights(self, dx: float, half_width: float):
        _require(dx > 0.0, f"dx must be positive, got {dx}")
        acc: dict[int, float] = {}
        for s_j, m_j in zip(self._s, self._m):
            j = int(round(s_j / dx))
            if j == 0:
                acc[0] = acc.get(0, 0.0) + m_j
            else:
                acc[j] = acc.get(j, 0.0) + 0.5 * m_j
                acc[-j] = acc.get(-j, 0.0) + 0.5 * m_j
        nw = max(abs(j) for j in acc)
        offsets = np.arange(-nw, nw + 1)
        weights = np.array([acc.get(int(j), 0.0) for j in offsets])
        return offsets, weights / weights.sum()

    def spec_string(self) -> str:
        return self._label


def tabulated_twin(kernel: Kernel, nodes: int = 513) -> TabulatedKernel:
    """Quadrature replacement for a closed-form kernel.

    Atom kernels copy their atoms exactly; density kernels are sampled
    with the default truncation S = 10*(1 + sqrt(second moment)),
    clipped to the support radius when it is finite.  Used to check that
    the pipeline does not secretly depend on closed forms.
    """
    if isinstance(kernel, TabulatedKernel):
        return kernel
    if isinstance(kernel, DiracKernel):
        return TabulatedKernel([0.0], [1.0], label="dirac-twin")
    if isinstance(kernel, TwoPointKernel):
        return TabulatedKernel([kernel.a], [1.0], label=f"twin-of-{kernel.spec_string()}")
    half = 10.0 * (1.0 + math.sqrt(kernel.second_moment()))
    half = min(half, kernel.support_radius())
    return TabulatedKernel.from_density(
        kernel.density, half_width=half, nodes=nodes,
        label=f"twin-of-{kernel.spec_string()}")


def _parse_kv(body: str, key: str, variant: str) -> float:
    parts = body.split("=", 1)
    if len(parts) != 2 or parts[0].strip() != key:
        raise DomainError(
            f"kernel spec '{variant}:{body}' should look like '{variant}:{key}=<number>'")
    try:
        return float(parts[1])
    except ValueError as exc:
        raise DomainError(f"kernel spec '{variant}:{body}': "
                          f"'{parts[1]}' is not a number") from exc


def _load_table(path: str) -> TabulatedKernel:
    pos, wts = [], []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DomainError(f"cannot read kernel table '{path}': {exc}") from exc
    for idx, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise DomainError(f"{path}:{idx + 1}: expected two columns 's,weight'")
        try:
            s_i, w_i = float(cells[0]), float(cells[1])
        except ValueError:
            if idx == 0:
                continue  # header row
            raise DomainError(f"{path}:{idx + 1}: non-numeric row {line!r}") from None
        pos.append(s_i)
        wts.append(w_i)
    if not pos:
        raise DomainError(f"kernel table '{path}' contains no data rows")
    return TabulatedKernel.from_atoms(pos, wts, label=f"table:{path}")


def kernel_from_spec(text: str) -> Kernel:
    """Parse a CLI kernel spec.

    Grammar: ``gaussian:alpha=A`` | ``uniform:a=A`` | ``twopoint:a=A``
    | ``dirac`` | ``table:PATH`` where PATH names a two-column CSV
    ``s,weight`` of (possibly one-sided) atoms.
    """
    text = text.strip()
    if not text:
        raise DomainError("empty kernel spec")
    head, _, body = text.partition(":")
    head = head.strip().lower()
    if head == "dirac":
        if body:
            raise DomainError("kernel spec 'dirac' takes no parameters")
        return DiracKernel()
    if head == "gaussian":
        return GaussianKernel(_parse_kv(body, "alpha", "gaussian"))
    if head == "uniform":
        return UniformKernel(_parse_kv(body, "a", "uniform"))
    if head == "twopoint":
        return TwoPointKernel(_parse_kv(body, "a", "twopoint"))
    if head == "table":
        if not body:
            raise DomainError("kernel spec 'table:' needs a CSV path")
        return _load_table(body)
    raise DomainError(
        f"unknown kernel variant '{head}'; expected one of "
        "gaussian:alpha=, uniform:a=, twopoint:a=, dirac, table:path.csv")
