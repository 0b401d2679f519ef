"""Rotator-pendulum systems and their perturbations.

The unperturbed Hamiltonian is ``H0(I, p, q) = h0(I) + sum_i s_i
(p_i^2/2 + V_i(q_i))`` with a generalized rotator ``h0`` (a polynomial in
the actions I) and ``n`` signed penduli whose potentials are 1-periodic
trig polynomials with a Morse maximum at q = 0. Perturbations are vector
fields ``X^1(p, q, I, theta, t; eps)`` given directly, derived from a
Hamiltonian ``H1`` through the canonical brackets, or the builtin linear
damping used by the error-horizon experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from . import exprs

__all__ = [
    "PotentialSpec", "RotatorSpec", "SystemSpec", "ExtendedState", "Tangent",
    "PerturbationField", "FieldEvalError", "eval_unperturbed",
    "eval_perturbed", "hamiltonian_to_field", "pendulum_energy",
    "wrap_angle", "EPS_MAX",
]

#: largest perturbation size accepted by the evaluators/integrators
EPS_MAX = 0.1

_FOUR_PI_SQ = 4.0 * math.pi ** 2


class FieldEvalError(ValueError):
    """A perturbation component failed to evaluate; carries context."""


def wrap_angle(x):
    """Reduce an angle difference to the fundamental window [-1/2, 1/2)."""
    return (np.asarray(x) + 0.5) % 1.0 - 0.5


# ---------------------------------------------------------------------------
# System specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """1-periodic pendulum potential ``V(q) = sum_k c_k (cos(2 pi k q) - 1)``.

    V(0) = 0 by construction; the Morse-maximum requirement V''(0) < 0
    reads ``sum_k c_k k^2 > 0`` and is enforced at construction.
    """

    kind: str  # "builtin-cosine" | "trig-polynomial"
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("builtin-cosine", "trig-polynomial"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if not self.coeffs:
            raise ValueError("potential needs at least one coefficient")
        if self.curvature_at_top >= 0.0:
            raise ValueError("potential must have a Morse maximum at q=0 "
                             f"(V''(0) = {self.curvature_at_top} >= 0)")

    @classmethod
    def builtin_cosine(cls) -> "PotentialSpec":
        """The normalized potential (1/(4 pi^2))(cos(2 pi q) - 1), V''(0) = -1."""
        return cls("builtin-cosine", (1.0 / _FOUR_PI_SQ,))

    @classmethod
    def trig_polynomial(cls, coeffs: Sequence[float]) -> "PotentialSpec":
        return cls("trig-polynomial", tuple(float(c) for c in coeffs))

    @property
    def curvature_at_top(self) -> float:
        """V''(0) = -4 pi^2 sum_k c_k k^2."""
        return -_FOUR_PI_SQ * sum(c * (k + 1) ** 2
                                  for k, c in enumerate(self.coeffs))

    def value(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        for k, c in enumerate(self.coeffs, start=1):
            out += c * (np.cos(2 * np.pi * k * q) - 1.0)
        return out if out.ndim else float(out)

    def dvalue(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        for k, c in enumerate(self.coeffs, start=1):
            out -= c * 2 * np.pi * k * np.sin(2 * np.pi * k * q)
        return out if out.ndim else float(out)

    def d2value(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        for k, c in enumerate(self.coeffs, start=1):
            out -= c * (2 * np.pi * k) ** 2 * np.cos(2 * np.pi * k * q)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class RotatorSpec:
    """Generalized rotator ``h0(I) = sum_m c_m prod_j I_j^e_mj``.

    The frequency map ``omega = grad h0`` and the Hessian are computed
    analytically from the monomials.
    """

    d: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("rotator dimension must be >= 1")
        for coef, powers in self.terms:
            if len(powers) != self.d:
                raise ValueError(f"monomial exponent tuple {powers} does not "
                                 f"match dimension {self.d}")
            if any(e < 0 for e in powers):
                raise ValueError("monomial exponents must be non-negative")

    @classmethod
    def quadratic(cls, d: int = 1) -> "RotatorSpec":
        """h0(I) = |I|^2 / 2."""
        terms = []
        for j in range(d):
            powers = tuple(2 if k == j else 0 for k in range(d))
            terms.append((0.5, powers))
        return cls(d, tuple(terms))

    def h0(self, I) -> float:
        I = np.asarray(I, dtype=float)
        total = 0.0
        for coef, powers in self.terms:
            total += coef * np.prod(I ** np.asarray(powers))
        return float(total)

    def omega(self, I) -> np.ndarray:
        I = np.asarray(I, dtype=float)
        out = np.zeros(self.d)
        for coef, powers in self.terms:
            for j, e in enumerate(powers):
                if e == 0:
                    continue
                term = coef * e
                for k, ek in enumerate(powers):
                    ee = ek - 1 if k == j else ek
                    if ee > 0:
                        term *= I[k] ** ee
                out[j] += term
        return out

    def hessian(self, I) -> np.ndarray:
        I = np.asarray(I, dtype=float)
        out = np.zeros((self.d, self.d))
        for coef, powers in self.terms:
            for j, ej in enumerate(powers):
                if ej == 0:
                    continue
                for l, el in enumerate(powers):
                    e2 = el - (1 if l == j else 0)
                    if e2 == 0:
                        continue
                    term = coef * ej * e2
                    for k, ek in enumerate(powers):
                        ee = ek - (1 if k == j else 0) - (1 if k == l else 0)
                        if ee > 0:
                            term *= I[k] ** ee
                    out[j, l] += term
        return out


@dataclass(frozen=True)
class SystemSpec:
    """A rotator plus ``n`` signed penduli; phase space R^{2(d+n)}."""

    rotator: RotatorSpec
    penduli: tuple[tuple[PotentialSpec, int], ...]

    def __post_init__(self):
        if not self.penduli:
            raise ValueError("need at least one pendulum")
        for _, s in self.penduli:
            if s not in (-1, 1):
                raise ValueError(f"pendulum sign must be +-1, got {s}")

    @classmethod
    def standard(cls, d: int = 1, n: int = 1) -> "SystemSpec":
        """Quadratic rotator with n normalized-cosine penduli, signs +1."""
        pend = tuple((PotentialSpec.builtin_cosine(), 1) for _ in range(n))
        return cls(RotatorSpec.quadratic(d), pend)

    @property
    def n(self) -> int:
        return len(self.penduli)

    @property
    def d(self) -> int:
        return self.rotator.d

    @property
    def signs(self) -> np.ndarray:
        return np.array([s for _, s in self.penduli], dtype=float)

    def layout(self) -> dict[str, int]:
        """Variable-name to flat-slot mapping used by the kernels."""
        n, d = self.n, self.d
        lay: dict[str, int] = {}
        for i in range(n):
            lay[f"p{i + 1}"] = i
            lay[f"q{i + 1}"] = n + i
        for j in range(d):
            lay[f"I{j + 1}"] = 2 * n + j
            lay[f"theta{j + 1}"] = 2 * n + d + j
        lay["t"] = 2 * n + 2 * d
        lay["eps"] = 2 * n + 2 * d + 1
        return lay


class SysPack(NamedTuple):
    """Flat-array form of a SystemSpec consumed by the kernels."""

    n: int
    d: int
    sgn: np.ndarray
    pc: np.ndarray
    poff: np.ndarray
    h0c: np.ndarray
    h0e: np.ndarray


@lru_cache(maxsize=64)
def pack_system(spec: SystemSpec) -> SysPack:
    n, d = spec.n, spec.d
    sgn = spec.signs
    pc: list[float] = []
    poff = [0]
    for pot, _ in spec.penduli:
        pc.extend(pot.coeffs)
        poff.append(len(pc))
    h0c = np.array([c for c, _ in spec.rotator.terms], dtype=float)
    h0e = np.array([list(p) for _, p in spec.rotator.terms],
                   dtype=np.int64).reshape(len(spec.rotator.terms), d)
    return SysPack(n, d, sgn, np.asarray(pc, dtype=float),
                   np.asarray(poff, dtype=np.int64), h0c, h0e)


# ---------------------------------------------------------------------------
# States and tangents
# ---------------------------------------------------------------------------

def _vec(x, length: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if arr.shape != (length,):
        raise ValueError(f"{name} must have shape ({length},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries: {arr}")
    return arr


@dataclass
class ExtendedState:
    """A point (p, q, I, theta, t); angles stored unwrapped in R.

    Treated as an immutable value: operations return new states.
    """

    p: np.ndarray
    q: np.ndarray
    I: np.ndarray
    theta: np.ndarray
    t: float = 0.0

    def __init__(self, p, q, I, theta, t: float = 0.0):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        q = np.atleast_1d(np.asarray(q, dtype=float))
        I = np.atleast_1d(np.asarray(I, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if p.shape != q.shape or I.shape != theta.shape:
            raise ValueError("pendulum and rotator blocks must pair up")
        for name, arr in (("p", p), ("q", q), ("I", I), ("theta", theta)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries: {arr}")
        if not math.isfinite(t):
            raise ValueError(f"t must be finite, got {t}")
        self.p, self.q, self.I, self.theta, self.t = (
            p.copy(), q.copy(), I.copy(), theta.copy(), float(t))

    @property
    def n(self) -> int:
        return self.p.size

    @property
    def d(self) -> int:
        return self.I.size

    def pack(self) -> np.ndarray:
        """Flat ODE vector [p, q, I, theta, t]."""
        return np.concatenate([self.p, self.q, self.I, self.theta, [self.t]])

    @classmethod
    def unpack(cls, z: np.ndarray, n: int, d: int) -> "ExtendedState":
        return cls(z[:n], z[n:2 * n], z[2 * n:2 * n + d],
                   z[2 * n + d:2 * n + 2 * d], z[2 * n + 2 * d])

    def replace(self, **kw) -> "ExtendedState":
        args = dict(p=self.p, q=self.q, I=self.I, theta=self.theta, t=self.t)
        args.update(kw)
        return ExtendedState(**args)


@dataclass
class Tangent:
    """State-space derivative (dp, dq, dI, dtheta) with dt = 1 for the flow."""

    dp: np.ndarray
    dq: np.ndarray
    dI: np.ndarray
    dtheta: np.ndarray
    dt: float = 1.0


# ---------------------------------------------------------------------------
# Perturbation fields
# ---------------------------------------------------------------------------

class FieldPack(NamedTuple):
    kind: int
    codes: np.ndarray
    centry: np.ndarray
    consts: np.ndarray


_EMPTY_CODES = np.zeros(0, dtype=np.int32)
_EMPTY_ENTRY = np.zeros(1, dtype=np.int64)
_EMPTY_CONSTS = np.zeros(0, dtype=np.float64)


@dataclass
class PerturbationField:
    """Evaluator bundle for the four X^1 component families.

    ``kind`` is one of "none", "direct", "hamiltonian", "damping".
    ``c1_bound`` is user-declared size metadata consumed by the
    error-horizon harness (never inferred).
    """

    kind: str
    pack: FieldPack
    n: int
    d: int
    h1: exprs.Expr | None = None
    component_exprs: tuple[tuple[exprs.Expr, ...], ...] | None = None
    gammas: tuple[np.ndarray, np.ndarray] | None = None
    c1_bound: float = 1.0
    source: str | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, spec: SystemSpec) -> "PerturbationField":
        return cls("none", FieldPack(K.FIELD_NONE, _EMPTY_CODES, _EMPTY_ENTRY,
                                     _EMPTY_CONSTS), spec.n, spec.d)

    @classmethod
    def from_hamiltonian(cls, spec: SystemSpec, h1: "str | exprs.Expr",
                         c1_bound: float = 1.0) -> "PerturbationField":
        source = h1 if isinstance(h1, str) else None
        ast = exprs.parse(h1, n=spec.n, d=spec.d) if isinstance(h1, str) else h1
        code, consts = exprs.compile_program(ast, spec.layout())
        centry = np.array([0, code.size], dtype=np.int64)
        return cls("hamiltonian",
                   FieldPack(K.FIELD_HAMILTONIAN, code, centry, consts),
                   spec.n, spec.d, h1=ast, c1_bound=c1_bound, source=source)

    @classmethod
    def from_components(cls, spec: SystemSpec,
                        xp: Sequence["str | exprs.Expr"],
                        xq: Sequence["str | exprs.Expr"],
                        xI: Sequence["str | exprs.Expr"],
                        xtheta: Sequence["str | exprs.Expr"],
                        c1_bound: float = 1.0) -> "PerturbationField":
        n, d = spec.n, spec.d
        if len(xp) != n or len(xq) != n or len(xI) != d or len(xtheta) != d:
            raise ValueError("component counts must be (n, n, d, d) = "
                             f"({n}, {n}, {d}, {d})")
        lay = spec.layout()
        asts = []
        for item in (*xp, *xq, *xI, *xtheta):
            asts.append(exprs.parse(item, n=n, d=d)
                        if isinstance(item, str) else item)
        codes: list[np.ndarray] = []
        centry = [0]
        consts: list[float] = []
        for ast in asts:
            code, cns = exprs.compile_program(ast, lay)
            # rebase constant indices into the shared pool
            code = code.copy()
            for k in range(0, code.size, 2):
                if code[k] == K.OP_CONST:
                    code[k + 1] += len(consts)
            consts.extend(cns.tolist())
            codes.append(code)
            centry.append(centry[-1] + code.size)
        grouped = (tuple(asts[:n]), tuple(asts[n:2 * n]),
                   tuple(asts[2 * n:2 * n + d]), tuple(asts[2 * n + d:]))
        return cls("direct",
                   FieldPack(K.FIELD_COMPONENTS,
                             np.concatenate(codes) if codes else _EMPTY_CODES,
                             np.asarray(centry, dtype=np.int64),
                             np.asarray(consts, dtype=np.float64)),
                   n, d, component_exprs=grouped, c1_bound=c1_bound)

    @classmethod
    def damping(cls, spec: SystemSpec, gamma_p=1.0, gamma_I=1.0,
                c1_bound: float = 1.0) -> "PerturbationField":
        """X^1 = (-gamma_p * p, 0, -gamma_I * I, 0)."""
        gp = np.broadcast_to(np.asarray(gamma_p, dtype=float), (spec.n,)).copy()
        gI = np.broadcast_to(np.asarray(gamma_I, dtype=float), (spec.d,)).copy()
        consts = np.concatenate([gp, gI])
        return cls("damping",
                   FieldPack(K.FIELD_DAMPING, _EMPTY_CODES, _EMPTY_ENTRY,
                             consts),
                   spec.n, spec.d, gammas=(gp, gI), c1_bound=c1_bound)

    # -- evaluation ----------------------------------------------------------

    def _xs(self, z: ExtendedState, eps: float) -> np.ndarray:
        return np.concatenate([z.p, z.q, z.I, z.theta, [z.t, eps]])

    def components(self, z: ExtendedState, eps: float = 0.0):
        """(X^1p, X^1q, X^1I, X^1theta) at (z, t; eps) via the kernels."""
        n, d = self.n, self.d
        xs = self._xs(z, eps)
        seed = np.zeros_like(xs)
        fk = self.pack
        out = []
        for cls_idx, count in ((0, n), (1, n), (2, d), (3, d)):
            vals = np.empty(count)
            for i in range(count):
                names = ("X1p", "X1q", "X1I", "X1theta")
                try:
                    vals[i] = K.field_component(fk.kind, fk.codes, fk.centry,
                                                fk.consts, xs, seed, n, d,
                                                cls_idx, i)
                except (ZeroDivisionError, ValueError) as exc:
                    raise FieldEvalError(
                        f"{names[cls_idx]}[{i}] failed ({exc}) at state "
                        f"p={z.p}, q={z.q}, I={z.I}, theta={z.theta}, "
                        f"t={z.t}, eps={eps}")
                if not math.isfinite(vals[i]):
                    raise FieldEvalError(
                        f"{names[cls_idx]}[{i}] evaluated non-finite at "
                        f"state p={z.p}, q={z.q}, I={z.I}, theta={z.theta}, "
                        f"t={z.t}, eps={eps}")
            out.append(vals)
        return tuple(out)

    def components_reference(self, z: ExtendedState, eps: float = 0.0):
        """Tree-walking re-evaluation (cross-validates the compiled path)."""
        n, d = self.n, self.d
        if self.kind == "none":
            zs = np.zeros
            return zs(n), zs(n), zs(d), zs(d)
        if self.kind == "damping":
            gp, gI = self.gammas
            return (-gp * z.p, np.zeros(n), -gI * z.I, np.zeros(d))
        bind = {f"p{i+1}": z.p[i] for i in range(n)}
        bind.update({f"q{i+1}": z.q[i] for i in range(n)})
        bind.update({f"I{j+1}": z.I[j] for j in range(d)})
        bind.update({f"theta{j+1}": z.theta[j] for j in range(d)})
        bind["t"] = z.t
        bind["eps"] = eps
        if self.kind == "direct":
            xp, xq, xI, xth = self.component_exprs
            return (np.array([exprs.eval_expr(e, bind) for e in xp]),
                    np.array([exprs.eval_expr(e, bind) for e in xq]),
                    np.array([exprs.eval_expr(e, bind) for e in xI]),
                    np.array([exprs.eval_expr(e, bind) for e in xth]))
        # hamiltonian: canonical brackets from forward-mode derivatives
        h1 = self.h1
        dp = np.array([exprs.derivative(h1, f"p{i+1}")(bind) for i in range(n)])
        dq = np.array([exprs.derivative(h1, f"q{i+1}")(bind) for i in range(n)])
        dI = np.array([exprs.derivative(h1, f"I{j+1}")(bind) for j in range(d)])
        dth = np.array([exprs.derivative(h1, f"theta{j+1}")(bind)
                        for j in range(d)])
        return (-dq, dp, -dth, dI)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def eval_unperturbed(spec: SystemSpec, z: ExtendedState) -> Tangent:
    """dp_i = -s_i V_i'(q_i), dq_i = s_i p_i, dI = 0, dtheta = omega(I)."""
    sgn = spec.signs
    dv = np.array([pot.dvalue(z.q[i])
                   for i, (pot, _) in enumerate(spec.penduli)])
    return Tangent(dp=-sgn * dv, dq=sgn * z.p,
                   dI=np.zeros(spec.d), dtheta=spec.rotator.omega(z.I))


def eval_perturbed(spec: SystemSpec, field: PerturbationField,
                   z: ExtendedState, eps: float) -> Tangent:
    """Unperturbed tangent plus eps times the perturbation components."""
    if abs(eps) > EPS_MAX:
        raise ValueError(f"|eps| = {abs(eps)} exceeds the supported "
                         f"maximum {EPS_MAX}")
    base = eval_unperturbed(spec, z)
    if eps == 0.0:
        return base
    xp, xq, xI, xth = field.components(z, eps)
    return Tangent(dp=base.dp + eps * xp, dq=base.dq + eps * xq,
                   dI=base.dI + eps * xI, dtheta=base.dtheta + eps * xth)


def hamiltonian_to_field(spec: SystemSpec, h1: "str | exprs.Expr",
                         c1_bound: float = 1.0) -> PerturbationField:
    """Canonical vector field of H1: X^1 = (-dH1/dq, dH1/dp, -dH1/dtheta, dH1/dI)."""
    return PerturbationField.from_hamiltonian(spec, h1, c1_bound=c1_bound)


def pendulum_energy(spec: SystemSpec, z: ExtendedState) -> np.ndarray:
    """y_i = s_i (p_i^2 / 2 + V_i(q_i)); zero exactly on the separatrices."""
    vals = np.array([pot.value(z.q[i])
                     for i, (pot, _) in enumerate(spec.penduli)])
    return spec.signs * (0.5 * z.p ** 2 + vals)


def h0_energy(spec: SystemSpec, z: ExtendedState) -> float:
    """Total unperturbed energy H0 = h0(I) + sum_i y_i."""
    return spec.rotator.h0(z.I) + float(np.sum(pendulum_energy(spec, z)))
