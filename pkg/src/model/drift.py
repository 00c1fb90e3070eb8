import math
from fractions import Fraction
import numpy as np
from model.errors import DomainError


class FiniteSetApprox:
    """
    Finite enumeration standing in for a countable set, optionally fattened.

    Membership is exact equality when fattening is 0 and distance < fattening otherwise.

    Attributes:
        elements (np.ndarray): sorted distinct reals
        fattening (float): delta >= 0
    """
    def __init__(self, elements, fattening: float = 0.0):
        values = np.unique(np.asarray(list(elements), dtype=float))
        if values.size and not np.all(np.isfinite(values)):
            raise DomainError("set elements must be finite reals")
        if fattening < 0.0 or not math.isfinite(fattening):
            raise DomainError(f"fattening must be a finite non-negative real, got {fattening}")
        values.setflags(write=False)
        self.elements = values
        self.fattening = float(fattening)

    @classmethod
    def rationals(cls, max_numerator: int, max_denominator: int, fattening: float = 0.0) -> "FiniteSetApprox":
        """
        Truncated enumeration {p/q : |p| <= max_numerator, 1 <= q <= max_denominator}.

        Args:
            max_numerator (int): bound on |p|
            max_denominator (int): bound on q
            fattening (float): membership radius

        Returns:
            FiniteSetApprox: the enumeration
        """
        values = {
            float(Fraction(p, q))
            for q in range(1, max_denominator + 1)
            for p in range(-max_numerator, max_numerator + 1)
        }
        return cls(sorted(values), fattening)

    def contains(self, x) -> np.ndarray:
        """Vectorized membership test."""
        x = np.asarray(x, dtype=float)
        if self.elements.size == 0:
            return np.zeros(x.shape, dtype=bool)
        position = np.searchsorted(self.elements, x)
        right = self.elements[np.minimum(position, self.elements.size - 1)]
        left = self.elements[np.maximum(position - 1, 0)]
        distance = np.minimum(np.abs(x - right), np.abs(x - left))
        if self.fattening == 0.0:
            return distance == 0.0
        return distance < self.fattening

    def to_dict(self) -> dict:
        return {'kind': 'finite_set', 'elements': self.elements.tolist(), 'fattening': self.fattening}


class Interval:
    """
    Half-open interval [lo, hi) used as an occupation set.

    Attributes:
        lo (float): left end, included
        hi (float): right end, excluded
    """
    def __init__(self, lo: float, hi: float):
        if not lo < hi:
            raise DomainError(f"interval needs lo < hi, got [{lo}, {hi})")
        self.lo = float(lo)
        self.hi = float(hi)

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x < self.hi)

    def to_dict(self) -> dict:
        return {'kind': 'interval', 'lo': self.lo, 'hi': self.hi}


#-------------------------------------
# Evaluable pieces
#-------------------------------------
class ConstantFunction:
    """f(t, x) = value."""
    def __init__(self, value: float):
        self.value = float(value)
        self.bound = abs(self.value)
        self.is_affine = True

    def __call__(self, t, x):
        return np.full(np.shape(x), self.value, dtype=float)

    def to_dict(self) -> dict:
        return {'kind': 'constant', 'value': self.value}


class AffineFunction:
    """f(t, x) = intercept + slope * x."""
    def __init__(self, intercept: float, slope: float):
        self.intercept = float(intercept)
        self.slope = float(slope)
        self.bound = abs(self.intercept) if self.slope == 0.0 else math.inf
        self.is_affine = True

    def __call__(self, t, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    def to_dict(self) -> dict:
        return {'kind': 'affine', 'intercept': self.intercept, 'slope': self.slope}


#-------------------------------------
# Drift catalog
#-------------------------------------
class DriftSpec:
    """Base class of the drift catalog b(t, x)."""
    kind = "drift"

    def evaluate(self, t, x) -> np.ndarray:
        raise NotImplementedError

    def sup_bound(self) -> float:
        """Finite sup over (t, x) of |b|, or inf when none is known."""
        return math.inf

    def breakpoints(self) -> list:
        """Discontinuity points in x."""
        return []

    def to_dict(self) -> dict:
        return {'kind': self.kind}


class SmoothDrift(DriftSpec):
    """
    Lipschitz drift given by a vectorized callable.

    Attributes:
        function (callable): f(t, x)
        lipschitz (float): Lipschitz constant L in x
        bound (float): sup |f|, inf if unbounded
        name (str): tag used in configs and manifests
    """
    kind = "smooth"

    def __init__(self, function, lipschitz: float, bound: float = math.inf, name: str = "custom"):
        if lipschitz < 0.0:
            raise DomainError(f"Lipschitz constant must be non-negative, got {lipschitz}")
        self.function = function
        self.lipschitz = float(lipschitz)
        self.bound = float(bound)
        self.name = name

    def evaluate(self, t, x):
        return np.asarray(self.function(t, np.asarray(x, dtype=float)), dtype=float)

    def sup_bound(self) -> float:
        return self.bound

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'name': self.name, 'lipschitz': self.lipschitz, 'bound': self.bound}


class PiecewiseDrift(DriftSpec):
    """
    Piecewise uniformly continuous drift with finitely many breakpoints.

    Piece i applies on [a_i, a_{i+1}) (right-continuous at the breakpoints).

    Attributes:
        points (list): breakpoints a_1 < ... < a_m
        pieces (list): m + 1 vectorized callables f_i(t, x)
        growth_constant (float): C in |b(t,x)| <= C (1 + |x|)
    """
    kind = "piecewise"

    def __init__(self, breakpoints: list, pieces: list, growth_constant: float, bound: float = None):
        points = [float(a) for a in breakpoints]
        if any(b <= a for a, b in zip(points, points[1:])):
            raise DomainError("breakpoints must be strictly increasing")
        if len(pieces) != len(points) + 1:
            raise DomainError(f"{len(points)} breakpoints need {len(points) + 1} pieces, got {len(pieces)}")
        self.points = points
        self.pieces = list(pieces)
        self.growth_constant = float(growth_constant)
        if bound is None:
            bound = max(getattr(piece, 'bound', math.inf) for piece in self.pieces)
        self.bound = float(bound)

    def evaluate(self, t, x):
        x = np.asarray(x, dtype=float)
        which = np.searchsorted(np.asarray(self.points), x, side='right')
        out = np.empty(x.shape, dtype=float)
        for index, piece in enumerate(self.pieces):
            mask = which == index
            if np.any(mask):
                t_part = t[mask] if np.ndim(t) and np.shape(t) == x.shape else t
                out[mask] = piece(t_part, x[mask])
        return out

    def sup_bound(self) -> float:
        return self.bound

    def breakpoints(self) -> list:
        return list(self.points)

    def piece_is_affine(self, index: int) -> bool:
        return bool(getattr(self.pieces[index], 'is_affine', False))

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'breakpoints': self.points,
            'pieces': [getattr(p, 'to_dict', lambda: {'kind': 'callable'})() for p in self.pieces],
            'growth_constant': self.growth_constant,
            'bound': self.bound
        }


class DirichletTerm:
    """
    One summand f_i(x) 1_{M_i}(x).

    Attributes:
        function (callable): f_i(t, x)
        exponent (float): integrability exponent q_i in (1, inf]
        members (FiniteSetApprox): M_i
        bound (float): sup |f_i|, inf if unbounded
    """
    def __init__(self, function, exponent: float, members: FiniteSetApprox, bound: float = None):
        if not exponent > 1.0:
            raise DomainError(f"integrability exponent must lie in (1, inf], got {exponent}")
        self.function = function
        self.exponent = float(exponent)
        self.members = members
        self.bound = float(getattr(function, 'bound', math.inf) if bound is None else bound)

    def to_dict(self) -> dict:
        return {
            'function': getattr(self.function, 'to_dict', lambda: {'kind': 'callable'})(),
            'exponent': self.exponent,
            'members': self.members.to_dict(),
            'bound': self.bound
        }


class DirichletDrift(DriftSpec):
    """b(x) = sum_i f_i(x) 1_{M_i}(x) with countable (here finite) sets M_i."""
    kind = "dirichlet"

    def __init__(self, terms: list):
        if not terms:
            raise DomainError("a Dirichlet-type drift needs at least one term")
        self.terms = list(terms)

    def evaluate(self, t, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=float)
        for term in self.terms:
            hit = term.members.contains(x)
            if np.any(hit):
                t_part = t[hit] if np.ndim(t) and np.shape(t) == x.shape else t
                out[hit] += term.function(t_part, x[hit])
        return out

    def sup_bound(self) -> float:
        return sum(term.bound for term in self.terms)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'terms': [term.to_dict() for term in self.terms]}


class IndicatorComplementDrift(DriftSpec):
    """
    b(t, x) = inner(t, x) 1_{x not in F} with F countable (here finite).

    Attributes:
        excluded (FiniteSetApprox): the set F
        inner (DriftSpec | None): inner drift, None meaning b-tilde = 1
    """
    kind = "indicator_complement"

    def __init__(self, excluded: FiniteSetApprox, inner: DriftSpec = None):
        self.excluded = excluded
        self.inner = inner

    def evaluate(self, t, x):
        x = np.asarray(x, dtype=float)
        base = np.ones(x.shape, dtype=float) if self.inner is None else self.inner.evaluate(t, x)
        return np.where(self.excluded.contains(x), 0.0, base)

    def sup_bound(self) -> float:
        return 1.0 if self.inner is None else self.inner.sup_bound()

    def breakpoints(self) -> list:
        inner_points = [] if self.inner is None else self.inner.breakpoints()
        return sorted(set(inner_points) | set(self.excluded.elements.tolist()))

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'excluded': self.excluded.to_dict(),
            'inner': None if self.inner is None else self.inner.to_dict()
        }


class SignDrift(DriftSpec):
    """
    b(x) = scale * sign(x - shift) with sign(0) = 0.

    Attributes:
        scale (float): multiplier; negative values give a nonincreasing drift
        shift (float): location of the jump
    """
    kind = "sign"

    def __init__(self, scale: float = 1.0, shift: float = 0.0):
        self.scale = float(scale)
        self.shift = float(shift)

    def evaluate(self, t, x):
        return self.scale * np.sign(np.asarray(x, dtype=float) - self.shift)

    def sup_bound(self) -> float:
        return abs(self.scale)

    def breakpoints(self) -> list:
        return [self.shift]

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'scale': self.scale, 'shift': self.shift}


class TransformedDrift(DriftSpec):
    """
    Drift of Y = F(X) under the Lamperti change of variable: b(t, F^{-1}(y)) / sigma(F^{-1}(y)).

    Attributes:
        drift (DriftSpec): drift of the multiplicative equation
        inverse (callable): F^{-1}, vectorized
        sigma (callable): diffusion coefficient, vectorized
        sigma_low (float): lower bound of sigma
        forward (callable): F, vectorized, used to map breakpoints
    """
    kind = "lamperti"

    def __init__(self, drift: DriftSpec, inverse, sigma, sigma_low: float, forward):
        self.drift = drift
        self.inverse = inverse
        self.sigma = sigma
        self.sigma_low = float(sigma_low)
        self.forward = forward

    def evaluate(self, t, y):
        x = self.inverse(np.asarray(y, dtype=float))
        return self.drift.evaluate(t, x) / np.asarray(self.sigma(x), dtype=float)

    def sup_bound(self) -> float:
        return self.drift.sup_bound() / self.sigma_low

    def breakpoints(self) -> list:
        points = self.drift.breakpoints()
        return [float(self.forward(np.asarray(a))) for a in points]

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'drift': self.drift.to_dict(), 'sigma_low': self.sigma_low}
