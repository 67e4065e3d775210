"""Formal sums of symbols, their cutoff assembly, class-constant fits and amplitude reduction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import multiindex as mi
from .exact import minus_i_power, parse_tau
from .expr import ExprSymbol, jet_eval
from .report import Report
from .symbols import PolyAmplitude, PolySymbol, RationalSymbol, SymbolError, _as_points
from .weights import CutoffFamily, WeightFunction, YoungConjugate, japanese, smooth_step


# ---------------------------------------------------------------------------
# derivative tables

def symbol_partials(a, x, xi, K: int) -> dict[tuple, np.ndarray]:
    """Table {(alpha, beta): d_x^alpha d_xi^beta a} at the points, |alpha+beta| <= K."""
    if isinstance(a, ExprSymbol):
        return jet_eval(a, x, xi, K)
    if isinstance(a, GridSymbol):
        return a.partials(K)
    d = a.dim
    out = {}
    for key in mi.iterate_upto(K, 2 * d):
        al, be = key[:d], key[d:]
        out[(al, be)] = np.asarray(a.derive(al, be).evaluate(x, xi))
    return out


@dataclass
class GridSymbol:
    """Symbol sampled on a tensor grid over (x, xi) with optional derivative samples."""

    axes: list[np.ndarray]
    values: np.ndarray
    derivatives: dict[tuple, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.axes = [np.asarray(ax, dtype=float) for ax in self.axes]
        if len(self.axes) % 2:
            raise SymbolError("grid symbol needs 2d axes")
        for ax in self.axes:
            dif = np.diff(ax)
            if np.any(dif <= 0) or not np.allclose(dif, dif[0], rtol=1e-10, atol=0):
                raise SymbolError("grid symbol axes must be uniform and strictly increasing")
        if self.values.shape != tuple(ax.size for ax in self.axes):
            raise SymbolError("grid values do not match the axes")

    @property
    def dim(self) -> int:
        return len(self.axes) // 2

    @classmethod
    def sample(cls, a, axes: Sequence[np.ndarray], K: int = 0) -> "GridSymbol":
        axes = [np.asarray(ax, dtype=float) for ax in axes]
        d = len(axes) // 2
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        x, xi = mesh[..., :d], mesh[..., d:]
        table = symbol_partials(a, x, xi, K)
        zero = ((0,) * d, (0,) * d)
        return cls(axes, table[zero], table)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        mesh = np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)
        return mesh[..., :self.dim], mesh[..., self.dim:]

    def partials(self, K: int) -> dict[tuple, np.ndarray]:
        d = self.dim
        out = {}
        for key in mi.iterate_upto(K, 2 * d):
            k = (key[:d], key[d:])
            if k == ((0,) * d, (0,) * d):
                out[k] = self.values
            elif k in self.derivatives:
                out[k] = self.derivatives[k]
            else:
                raise SymbolError(f"grid symbol lacks sampled derivative {k}")
        return out

    def evaluate(self, x, xi) -> np.ndarray:
        from scipy.interpolate import RegularGridInterpolator

        d = self.dim
        X = _as_points(x, d)
        XI = _as_points(xi, d)
        pts = np.concatenate(np.broadcast_arrays(X, XI), axis=-1)
        re = RegularGridInterpolator(self.axes, self.values.real)(pts)
        im = RegularGridInterpolator(self.axes, self.values.imag)(pts)
        return re + 1j * im


# ---------------------------------------------------------------------------
# formal sums

@dataclass
class FormalSum:
    """Graded sequence (a_j) with class parameters (m, rho, R)."""

    terms: list
    m: float = 0.0
    rho: float = 1.0
    R: float = 1.0
    weight: WeightFunction | None = None

    def __post_init__(self):
        if self.R < 1:
            raise SymbolError("formal sums need R >= 1")
        if not 0 < self.rho <= 1:
            raise SymbolError("rho must lie in (0, 1]")
        if not self.terms:
            raise SymbolError("formal sum needs at least the j = 0 term")

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def total(self):
        acc = self.terms[0]
        for t in self.terms[1:]:
            acc = acc + t
        return acc

    def partial(self, N: int):
        """Sum of the first N terms (j < N)."""
        acc = None
        for t in self.terms[:N]:
            acc = t if acc is None else acc + t
        return acc

    def __getitem__(self, j: int):
        return self.terms[j] if j < len(self.terms) else None


class AssembledSymbol:
    """a(x, xi) = sum_j phi_j(x, xi) a_j(x, xi), optionally times an inner excision."""

    def __init__(self, fs: FormalSum, cutoff: CutoffFamily, conj: YoungConjugate,
                 inner: tuple[float, float] | None = None):
        if abs(cutoff.R - fs.R) > 1e-12:
            raise SymbolError(f"cutoff scale R={cutoff.R} differs from the formal sum's R={fs.R}")
        self.fs = fs
        self.cutoff = cutoff
        self.conj = conj
        self.inner = inner
        self.dim = fs.dim

    def active_terms(self, radius: float) -> list[int]:
        return [j for j in self.cutoff.active_terms(self.conj, radius, len(self.fs.terms) - 1)]

    def evaluate(self, x, xi) -> np.ndarray:
        d = self.dim
        X = _as_points(x, d)
        XI = _as_points(xi, d)
        X, XI = np.broadcast_arrays(X, XI)
        z = np.concatenate([X, XI], axis=-1)
        shape = z.shape[:-1]
        zf = z.reshape(-1, 2 * d)
        out = np.zeros(zf.shape[0], dtype=complex)
        rmax = float(np.max(np.linalg.norm(zf, axis=-1))) if zf.size else 0.0
        for j in self.active_terms(rmax + 1e-12):
            w = self.cutoff.phi_j(self.conj, j, zf)
            live = w > 0
            if not np.any(live):
                continue
            vals = np.asarray(self.fs.terms[j].evaluate(zf[live, :d], zf[live, d:]))
            out[live] += w[live] * vals
        if self.inner is not None:
            out *= smooth_step(japanese(zf), *self.inner)
        return out.reshape(shape)

    __call__ = evaluate


def assemble_formal_sum(fs: FormalSum, cutoff: CutoffFamily, conj: YoungConjugate) -> AssembledSymbol:
    return AssembledSymbol(fs, cutoff, conj)


# ---------------------------------------------------------------------------
# sampling regions

@dataclass
class Region:
    """Sample points on spheres |z| = r with r geometric between r_min and r_max."""

    r_min: float = 1.0
    r_max: float = 100.0
    n_radii: int = 24
    n_dirs: int = 48
    seed: int = 0
    include_core: bool = False

    def directions(self, dim2: int) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        v = rng.normal(size=(self.n_dirs, dim2))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        axes = np.concatenate([np.eye(dim2), -np.eye(dim2)])
        diag = np.ones((1, dim2)) / math.sqrt(dim2)
        return np.concatenate([axes, diag, -diag, v])

    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_radii)

    def points(self, dim2: int) -> tuple[np.ndarray, np.ndarray]:
        """(points of shape (n_r, n_dir, 2d), radii)."""
        r = self.radii()
        dirs = self.directions(dim2)
        pts = r[:, None, None] * dirs[None, :, :]
        if self.include_core:
            core_r = np.array([0.0, 0.25, 0.5, 0.75])
            core = core_r[:, None, None] * dirs[None, :, :]
            pts = np.concatenate([core, pts])
            r = np.concatenate([core_r, r])
        return pts, r


def region_for_japanese(lo: float, hi: float, **kw) -> Region:
    """Region whose Japanese bracket <z> spans [lo, hi]."""
    return Region(r_min=math.sqrt(max(lo * lo - 1.0, 1e-12)), r_max=math.sqrt(hi * hi - 1.0), **kw)


def _outer_slope(logr: np.ndarray, logv: np.ndarray) -> float:
    half = len(logr) // 2
    if len(logr) - half < 2:
        return 0.0
    return float(np.polyfit(logr[half:], logv[half:], 1)[0])


# ---------------------------------------------------------------------------
# class constants

def estimate_class_constants(a, w: WeightFunction, m: float, rho: float, region: Region | None = None,
                             K: int = 4, ns: Sequence[int] = (1, 2, 4), conj: YoungConjugate | None = None,
                             growth_tol: float = 0.5) -> Report:
    """Fit C_n in |D_x^alpha D_xi^beta a| <= C_n <z>^{-rho|alpha+beta|} e^{n rho phi*(|alpha+beta|/n)} e^{m omega}.

    Divergence (class-membership failure) is flagged when the per-annulus
    maximum keeps growing on the outer half of the region or is not finite.
    """
    region = region or Region(r_min=1.0, r_max=100.0, include_core=True)
    conj = conj or w.conjugate()
    d = a.dim
    pts, radii = region.points(2 * d)
    flat = pts.reshape(-1, 2 * d)
    with np.errstate(over="ignore", invalid="ignore"):
        table = symbol_partials(a, flat[:, :d], flat[:, d:], K)
    jb = japanese(flat)
    om = np.asarray(w(np.linalg.norm(flat, axis=-1)))
    rep = Report(f"class-constants[m={m:g},rho={rho:g},{w.spec}]")
    fits = {}
    diverges = False
    for n in ns:
        per_order = []
        ann = np.zeros(len(radii))
        for k in range(K + 1):
            logw = -rho * k * np.log(jb) + n * rho * float(conj(k / n)) + m * om
            best = np.zeros(flat.shape[0])
            for (al, be), vals in table.items():
                if mi.norm(al) + mi.norm(be) != k:
                    continue
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    ratio = np.abs(vals) * np.exp(-logw)
                ratio = np.where(np.isnan(ratio), np.inf, ratio)
                best = np.maximum(best, ratio)
            per_order.append(float(np.max(best)))
            ann = np.maximum(ann, best.reshape(len(radii), -1).max(axis=1))
        C = max(per_order)
        finite = math.isfinite(C)
        outer = ann[radii >= 1.0]
        rr = radii[radii >= 1.0]
        slope = _outer_slope(np.log(rr), np.log(np.maximum(outer, 1e-300))) if finite else math.inf
        bad = (not finite) or slope > growth_tol
        diverges = diverges or bad
        fits[n] = {"C": C, "per_order": per_order, "outer_slope": slope}
        if bad:
            where = int(np.argmax(~np.isfinite(ann))) if not finite else int(np.argmax(outer))
            rep.note(f"n={n}: weighted derivatives grow (slope {slope:.3g}) near radius {radii[where]:.4g}")
    rep.set("fits", fits)
    rep.set("diverges", diverges)
    rep.check("bounded", not diverges, "fitted constants diverge on the sampled region")
    return rep


# ---------------------------------------------------------------------------
# equivalence of formal sums

def verify_equivalence(fs1: FormalSum, fs2: FormalSum, ns: Sequence[int] = (1, 2), Nmax: int = 4,
                       conj: YoungConjugate | None = None, r_max: float = 1e4, n_radii: int = 40,
                       n_dirs: int = 16, seed: int = 0, growth_tol: float = 0.5) -> Report:
    """Weighted sup of partial-sum differences on the regions of the definition.

    For each (n, N) the region is log(<z>/R) >= (n/N) phi*(N/n), sampled
    log-uniformly in <z> up to ``r_max``.  Non-equivalence is flagged when the
    weighted difference keeps growing (log-log slope above ``growth_tol``).
    """
    if (fs1.m, fs1.rho, fs1.R) != (fs2.m, fs2.rho, fs2.R):
        raise SymbolError("formal sums must share (m, rho, R)")
    w = fs1.weight or fs2.weight
    if w is None:
        raise SymbolError("equivalence check needs a weight function")
    conj = conj or w.conjugate()
    m, rho, R = fs1.m, fs1.rho, fs1.R
    d = fs1.dim
    rep = Report("formal-sum-equivalence")
    sups = {}
    equivalent = True
    zero = PolySymbol.zero(d)
    for n in ns:
        for N in range(1, Nmax + 1):
            start = R * math.exp((n / N) * float(conj(N / n)))
            if start >= r_max:
                sups[f"n={n},N={N}"] = {"sup": 0.0, "slope": 0.0, "note": "region beyond r_max"}
                continue
            jr = np.geomspace(start, r_max, n_radii)
            region = Region(r_min=math.sqrt(max(start ** 2 - 1, 1e-12)), r_max=math.sqrt(r_max ** 2 - 1),
                            n_radii=n_radii, n_dirs=n_dirs, seed=seed)
            pts, radii = region.points(2 * d)
            flat = pts.reshape(-1, 2 * d)
            diff = 0.0
            scale = 0.0
            for j in range(N):
                aj = fs1[j] if fs1[j] is not None else zero
                bj = fs2[j] if fs2[j] is not None else zero
                va = np.asarray(aj.evaluate(flat[:, :d], flat[:, d:]))
                vb = np.asarray(bj.evaluate(flat[:, :d], flat[:, d:]))
                diff = diff + (va - vb)
                scale = scale + np.abs(va) + np.abs(vb)
            # differences below the rounding floor of the summands carry no information
            resolved = np.abs(diff) > 64 * np.finfo(float).eps * scale
            jb = japanese(flat)
            weighted = np.abs(diff) * jb ** (rho * N) * math.exp(-n * rho * float(conj(N / n))) \
                * np.exp(-m * np.asarray(w(np.linalg.norm(flat, axis=-1))))
            weighted = np.where(resolved, weighted, 0.0)
            ann = weighted.reshape(len(radii), -1).max(axis=1)
            sup = float(np.max(ann))
            positive = ann > 1e-300
            slope = _outer_slope(np.log(jr[positive]), np.log(ann[positive])) if positive.sum() > 3 else 0.0
            grows = slope > growth_tol or not math.isfinite(sup)
            equivalent = equivalent and not grows
            sups[f"n={n},N={N}"] = {"sup": sup, "slope": slope,
                                    "unresolved_fraction": float(1.0 - resolved.mean())}
    rep.set("suprema", sups)
    rep.set("equivalent", equivalent)
    rep.check("equivalent", equivalent, "weighted partial-sum differences grow on the sampled region")
    return rep


# ---------------------------------------------------------------------------
# amplitude reduction

def amplitude_reduce(amp: PolyAmplitude, tau, m: float = 0.0, rho: float = 1.0, R: float = 1.0,
                     weight: WeightFunction | None = None) -> FormalSum:
    """p_j = sum_{|beta+gamma|=j} tau^|beta| (1-tau)^|gamma| / (beta! gamma!) d_xi^{beta+gamma} (-D_x)^beta D_y^gamma a |_{y=x}."""
    t = parse_tau(tau)
    d = amp.dim
    bx = amp.x_degrees
    gy = amp.y_degrees
    top = mi.norm(amp.xi_degrees)
    terms = []
    for j in range(top + 1):
        acc = PolySymbol.zero(d)
        for nb in range(j + 1):
            for beta in mi.of_norm(nb, d):
                if not mi.leq(beta, bx):
                    continue
                for gamma in mi.of_norm(j - nb, d):
                    if not mi.leq(gamma, gy):
                        continue
                    w = Fraction(1, mi.factorial(beta) * mi.factorial(gamma)) * t ** nb * (1 - t) ** (j - nb)
                    if w == 0:
                        continue
                    der = amp.derive(dx=beta, dy=gamma, dxi=mi.add(beta, gamma))
                    if not der.terms:
                        continue
                    # (-D_x)^beta D_y^gamma = (-1)^|beta| (-i)^{|beta|+|gamma|} d_x^beta d_y^gamma
                    sign = -1 if nb % 2 else 1
                    acc = acc + der.restrict_diagonal().scale(w * sign * minus_i_power(j))
        terms.append(acc)
    while len(terms) > 1 and terms[-1].is_zero():
        terms.pop()
    return FormalSum(terms, m=m, rho=rho, R=R, weight=weight)
