"""Monte Carlo sampling of Gaussian-ensemble spectra.

Samples are drawn in blocks of :data:`BLOCK` matrices; block ``b`` of a
configuration uses its own generator seeded by ``(seed, b)``, so the i-th
matrix depends only on ``(config, i)`` and sweeps can be split freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .densities import EnsembleSpec, integrate_against
from .poly import Poly

__all__ = [
    "BLOCK",
    "SampleConfig",
    "TraceStats",
    "KramersPairingError",
    "entry_variances",
    "sample_block",
    "sample_spectrum",
    "sample_spectra",
    "empirical_trace_mean",
    "empirical_moments",
    "convention_probe",
    "semicircle_cdf",
    "semicircle_distance",
]

BLOCK = 256
VarianceConvention = Literal["paper_definition", "mehta_consistent"]


class KramersPairingError(ArithmeticError):
    """Embedded GSE eigenvalues failed to pair up."""


@dataclass(frozen=True)
class SampleConfig:
    kind: str
    n: int
    sigma2: float
    count: int
    seed: int = 0
    variance_convention: VarianceConvention = "mehta_consistent"

    def __post_init__(self):
        if self.kind not in ("GOE", "GUE", "GSE"):
            raise ValueError(f"unknown ensemble {self.kind!r}")
        if self.n < 1 or self.count < 1 or not self.sigma2 > 0:
            raise ValueError("need n >= 1, count >= 1 and sigma2 > 0")
        if self.variance_convention not in ("paper_definition", "mehta_consistent"):
            raise ValueError(f"unknown variance convention {self.variance_convention!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TraceStats:
    mean: float
    stderr: float
    count: int


def entry_variances(cfg: SampleConfig) -> tuple[float, float]:
    """(diagonal variance, total off-diagonal E|X_ij|^2) for ``cfg``.

    GUE: (s2, s2) under both conventions.  GOE: (2 s2, s2) Mehta-consistent,
    (s2, 2 s2) by the literal definition.  GSE: (s2, 2 s2) Mehta-consistent,
    i.e. s2/2 per quaternion component; the literal N(0, s2/2) reading gives
    (s2, s2/2).
    """
    s2 = float(cfg.sigma2)
    mehta = cfg.variance_convention == "mehta_consistent"
    if cfg.kind == "GUE":
        return s2, s2
    if cfg.kind == "GOE":
        return (2 * s2, s2) if mehta else (s2, 2 * s2)
    return (s2, 2 * s2) if mehta else (s2, s2 / 2)


def _sym(a: np.ndarray) -> np.ndarray:
    up = np.triu(a, 1)
    return up + np.swapaxes(up, -1, -2)


def _antisym(a: np.ndarray) -> np.ndarray:
    up = np.triu(a, 1)
    return up - np.swapaxes(up, -1, -2)


def _diag(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    return a[..., None] * np.eye(n)


def _matrices(cfg: SampleConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.n
    vd, vo = entry_variances(cfg)
    shape = (BLOCK, n, n)
    diag = rng.standard_normal((BLOCK, n)) * math.sqrt(vd)
    if cfg.kind == "GOE":
        return _sym(rng.standard_normal(shape) * math.sqrt(vo)) + _diag(diag)
    if cfg.kind == "GUE":
        comp = math.sqrt(vo / 2)
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * comp
        up = np.triu(z, 1)
        return up + np.conj(np.swapaxes(up, -1, -2)) + _diag(diag)
    comp = math.sqrt(vo / 4)
    a = _sym(rng.standard_normal(shape) * comp) + _diag(diag)
    b, c, d = (_antisym(rng.standard_normal(shape) * comp) for _ in range(3))
    m = np.empty((BLOCK, 2 * n, 2 * n), dtype=complex)
    m[:, 0::2, 0::2] = a + 1j * b
    m[:, 0::2, 1::2] = c + 1j * d
    m[:, 1::2, 0::2] = -c + 1j * d
    m[:, 1::2, 1::2] = a - 1j * b
    return m


def _kramers_dedup(ev: np.ndarray) -> np.ndarray:
    lo, hi = ev[:, 0::2], ev[:, 1::2]
    radius = np.max(np.abs(ev), axis=1, keepdims=True)
    gap = np.max(np.abs(hi - lo) / np.maximum(radius, 1e-300), axis=1)
    if np.any(gap > 1e-8):
        raise KramersPairingError(f"embedded eigenvalues do not pair (max relative gap {gap.max():.3g})")
    return lo


def sample_block(cfg: SampleConfig, block: int) -> np.ndarray:
    """Sorted spectra of block ``block``, shape (BLOCK, n)."""
    rng = np.random.default_rng([cfg.seed, block])
    ev = np.linalg.eigvalsh(_matrices(cfg, rng))
    return _kramers_dedup(ev) if cfg.kind == "GSE" else ev


def sample_spectrum(cfg: SampleConfig, index: int) -> np.ndarray:
    """Sorted eigenvalues of the ``index``-th matrix of the stream."""
    if not 0 <= index < cfg.count:
        raise IndexError("sample index out of range")
    return sample_block(cfg, index // BLOCK)[index % BLOCK]


def sample_spectra(cfg: SampleConfig) -> np.ndarray:
    """All ``cfg.count`` spectra, shape (count, n)."""
    blocks = -(-cfg.count // BLOCK)
    out = np.concatenate([sample_block(cfg, b) for b in range(blocks)])
    return out[: cfg.count]


def _stats(values: np.ndarray) -> TraceStats:
    count = len(values)
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if count > 1 else 0.0
    return TraceStats(mean, sd / math.sqrt(count), count)


def empirical_trace_mean(cfg: SampleConfig, g: Poly, spectra: np.ndarray | None = None) -> TraceStats:
    """Mean and standard error of (1/n) sum_j g(lambda_j) over the stream."""
    if g.degree > 16:
        raise ValueError("test polynomials are limited to degree 16")
    if spectra is None:
        spectra = sample_spectra(cfg)
    coeffs = [float(c) for c in g.coeffs] or [0.0]
    values = np.mean(np.polynomial.polynomial.polyval(spectra, coeffs), axis=1)
    return _stats(values)


def empirical_moments(cfg: SampleConfig, orders=(2, 4)) -> dict[int, TraceStats]:
    spectra = sample_spectra(cfg)
    return {k: empirical_trace_mean(cfg, Poly.monomial(k), spectra) for k in orders}


def _formula_moment(kind: str, n: int, sigma2: float, k: int) -> float:
    return integrate_against(EnsembleSpec(kind, n, sigma2, "probability"), Poly.monomial(k))


def convention_probe(n: int, sigma2: float, count: int = 100_000, seed: int = 0,
                     kinds=("GOE", "GUE", "GSE"), z_limit: float = 3.0) -> dict:
    """Compare both variance conventions with the density formulas.

    For each kind, m2 and m4 are estimated under each convention and turned
    into z-scores against the quadrature moments of the formula density.
    The verdict is ``"identical"`` when both conventions draw the same
    entries, the name of the single passing convention, or
    ``"inconclusive"`` when both or neither pass.
    """
    if n > 6:
        raise ValueError("the probe is meant for n <= 6")
    report = {}
    for kind in kinds:
        formula = {k: _formula_moment(kind, n, sigma2, k) for k in (2, 4)}
        entry = {"formula": formula, "conventions": {}}
        passing = []
        variances = {}
        for conv in ("mehta_consistent", "paper_definition"):
            cfg = SampleConfig(kind, n, sigma2, count, seed, conv)
            v = entry_variances(cfg)
            variances[conv] = v if n > 1 else v[:1]
            stats = empirical_moments(cfg)
            z = {k: (stats[k].mean - formula[k]) / stats[k].stderr if stats[k].stderr > 0 else math.inf
                 for k in stats}
            ok = all(abs(v) < z_limit for v in z.values())
            entry["conventions"][conv] = {
                "m2": stats[2].mean, "m2_stderr": stats[2].stderr,
                "m4": stats[4].mean, "m4_stderr": stats[4].stderr,
                "z": z, "pass": ok,
            }
            if ok:
                passing.append(conv)
        if variances["mehta_consistent"] == variances["paper_definition"]:
            verdict = "identical"
        elif len(passing) == 1:
            verdict = passing[0]
        else:
            verdict = "inconclusive"
        entry["verdict"] = verdict
        report[kind] = entry
    return report


def semicircle_cdf(x) -> np.ndarray:
    """CDF of sqrt(4 - t^2)/(2 pi) on [-2, 2]."""
    t = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    return 0.5 + (t * np.sqrt(4 - t * t) / 2 + 2 * np.arcsin(t / 2)) / (2 * math.pi)


def semicircle_distance(cfg: SampleConfig) -> float:
    """Sup distance on [-2, 2] between the pooled empirical CDF and the semicircle CDF."""
    ev = np.sort(sample_spectra(cfg).ravel())
    grid = np.concatenate([[-2.0, 2.0], ev[(ev > -2) & (ev < 2)]])
    ref = semicircle_cdf(grid)
    right = np.searchsorted(ev, grid, side="right") / len(ev)
    left = np.searchsorted(ev, grid, side="left") / len(ev)
    return float(max(np.max(np.abs(right - ref)), np.max(np.abs(left - ref))))


def with_convention(cfg: SampleConfig, convention: VarianceConvention) -> SampleConfig:
    return replace(cfg, variance_convention=convention)
