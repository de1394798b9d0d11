"""Constitutive maps for filtration equations and step-control settings."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class NonlinKind(str, enum.Enum):
    POWER = "Power"
    LOG1P = "Log1p"
    STEFAN = "StefanGraph"
    IDENTITY = "Identity"


@dataclass(frozen=True)
class Nonlinearity:
    """Monotone map ``Phi`` with ``Phi(0) = 0`` and its (generalised) inverse ``beta``.

    * ``Power``: ``Phi(u) = |u|^(m-1) u``.
    * ``Log1p``: ``Phi(u) = log(1 + u)`` (defined for ``u > -1``).
    * ``StefanGraph``: one-phase Stefan law ``Phi(u) = (u - L)_+`` for ``u >= 0``
      (and ``Phi(u) = u`` for ``u < 0``).  Its inverse is the maximal graph
      ``beta(0) = [0, L]``, replaced by ``beta_eps(v) = v + L min(v/eps, 1)``
      for ``v >= 0``; ``phi`` returns the exact inverse of ``beta_eps``, so
      ``beta(phi(u)) = u``.
    * ``Identity``: the heat equation.
    """

    kind: NonlinKind = NonlinKind.IDENTITY
    m: float = 1.0
    latent: float = 1.0
    eps: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NonlinKind(self.kind))
        if self.kind is NonlinKind.POWER and not self.m > 0:
            raise ValueError("power nonlinearity needs m > 0")
        if self.kind is NonlinKind.STEFAN and not (self.latent > 0 and self.eps > 0):
            raise ValueError("Stefan graph needs positive latent heat and eps")

    @classmethod
    def power(cls, m: float) -> "Nonlinearity":
        return cls(NonlinKind.POWER, m=m)

    @property
    def solve_in_u(self) -> bool:
        """Newton runs on ``u`` when ``Phi`` is smooth, otherwise on ``v = Phi(u)``.

        Fast diffusion (``m < 1``) has an infinite slope at 0 and the Stefan
        map has kinks; both are handled in ``v``, where the step equation is
        the gradient of a convex energy (see :meth:`primitive`).
        """
        if self.kind is NonlinKind.POWER:
            return self.m >= 1.0
        return self.kind is not NonlinKind.STEFAN

    def phi(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        k = self.kind
        if k is NonlinKind.IDENTITY:
            return u.copy()
        if k is NonlinKind.POWER:
            return np.sign(u) * np.abs(u) ** self.m
        if k is NonlinKind.LOG1P:
            return np.log1p(u)
        top = self.latent + self.eps
        return np.where(u < 0, u, np.where(u <= top, u * (self.eps / top), u - self.latent))

    def dphi(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        k = self.kind
        if k is NonlinKind.IDENTITY:
            return np.ones_like(u)
        if k is NonlinKind.POWER:
            return self.m * np.abs(u) ** (self.m - 1.0)
        if k is NonlinKind.LOG1P:
            return 1.0 / (1.0 + u)
        top = self.latent + self.eps
        return np.where((u < 0) | (u > top), 1.0, self.eps / top)

    def beta(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is NonlinKind.IDENTITY:
            return v.copy()
        if k is NonlinKind.POWER:
            return np.sign(v) * np.abs(v) ** (1.0 / self.m)
        if k is NonlinKind.LOG1P:
            return np.expm1(v)
        return v + self.latent * np.clip(v / self.eps, 0.0, 1.0)

    def primitive(self, v: np.ndarray) -> np.ndarray:
        """``B(v) = int_0^v beta``, convex since ``beta`` is nondecreasing."""
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is NonlinKind.IDENTITY:
            return 0.5 * v * v
        if k is NonlinKind.POWER:
            q = 1.0 + 1.0 / self.m
            return np.abs(v) ** q / q
        if k is NonlinKind.LOG1P:
            return np.expm1(v) - v
        vp = np.maximum(v, 0.0)
        latent = np.where(vp < self.eps, vp * vp / (2.0 * self.eps), vp - 0.5 * self.eps)
        return 0.5 * v * v + self.latent * latent

    def dbeta(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        k = self.kind
        if k is NonlinKind.IDENTITY:
            return np.ones_like(v)
        if k is NonlinKind.POWER:
            return np.abs(v) ** (1.0 / self.m - 1.0) / self.m
        if k is NonlinKind.LOG1P:
            return np.exp(v)
        # right derivative at the kink v = 0: nonnegative data move into (0, eps)
        return 1.0 + np.where((v >= 0) & (v < self.eps), self.latent / self.eps, 0.0)


@dataclass(frozen=True)
class StepControl:
    h: float = 1e-3
    newton_tol: float = 1e-10
    newton_max: int = 50
    cfl_safety: float = 0.45

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("time step must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if int(self.newton_max) < 1:
            raise ValueError("newton_max must be at least 1")
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
