"""Hypoellipticity fits, the recursive parametrix and its exact verification."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import multiindex as mi
from .calculus import change_quantization, composition_terms, tau_coefficient, weyl_coefficient
from .exact import minus_i_power, parse_tau
from .formal import AssembledSymbol, FormalSum, Region, _outer_slope, region_for_japanese, symbol_partials
from .hermite import (GridFunction, HermiteExpansion, apply_operator, grid_apply_op_tau, hermite_functions,
                      make_grid, quantize_to_operator)
from .report import Report
from .symbols import PolySymbol, RationalSymbol, SymbolError
from .weights import CutoffFamily, WeightFunction, YoungConjugate, japanese

MAX_ORDER = 12
MAX_DIM = 2


class DomainError(SymbolError):
    pass


# ---------------------------------------------------------------------------
# parameters

@dataclass
class HypoParams:
    """Constants of the hypoellipticity definition.

    ``weight`` is omega; ``sigma`` must be a Gevrey weight with
    omega(t^{1/rho}) = o(sigma(t)).  ``n`` is the largest n tried in the
    derivative fit and ``C``, if given, an upper bound the fitted C must meet.
    """

    weight: WeightFunction
    m: float = 0.0
    m0: float = 0.0
    rho: float = 1.0
    R: float = 2.0
    sigma: WeightFunction | None = None
    n: int = 4
    C: float | None = None

    def __post_init__(self):
        if self.m0 > self.m:
            raise DomainError(f"m0={self.m0} exceeds m={self.m}")
        if not 0 < self.rho <= 1:
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}")
        if self.R < 1:
            raise DomainError(f"R must be >= 1, got {self.R}")
        if self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.C is not None and not self.C > 0:
            raise DomainError(f"C must be positive, got {self.C}")
        if self.sigma is None:
            self.sigma = default_sigma(self.weight, self.rho)
        if self.sigma.family != "gevrey":
            raise DomainError(f"sigma must be a Gevrey weight, got {self.sigma.spec}")
        ok, ratios = o_relation(self.weight, self.sigma, self.rho)
        if not ok:
            raise DomainError(f"omega(t^(1/rho)) is not o(sigma(t)) for {self.weight.spec}, "
                              f"{self.sigma.spec}, rho={self.rho}: tail ratios {ratios[-3:]}")


def o_relation(w: WeightFunction, sigma: WeightFunction, rho: float,
               log10_range: tuple[float, float] = (2.0, 40.0), samples: int = 60) -> tuple[bool, np.ndarray]:
    """Check omega(t^{1/rho}) / sigma(t) decreases on a geometric sample and ends well below its start."""
    s = np.linspace(*log10_range, samples) * math.log(10.0)
    with np.errstate(over="ignore"):
        ratios = np.asarray(w.phi(s / rho)) / np.asarray(sigma.phi(s))
    tail = ratios[samples // 3:]
    ok = bool(np.all(np.isfinite(tail)) and np.all(np.diff(tail) <= 1e-12) and tail[-1] < 0.5 * tail[0])
    return ok, ratios


def default_sigma(w: WeightFunction, rho: float) -> WeightFunction:
    """A Gevrey sigma dominating omega(t^{1/rho}); exponent halfway to 1 above the growth of omega."""
    if w.family == "gevrey":
        b = w.param / rho
        if b >= 1:
            raise DomainError(f"no Gevrey sigma below t^1 dominates {w.spec} at rho={rho}")
        return WeightFunction.gevrey((1 + b) / 2)
    return WeightFunction.gevrey(0.5)


# ---------------------------------------------------------------------------
# recursion

@dataclass
class ParametrixResult:
    terms: list
    tau: Fraction | float
    base: PolySymbol
    certificate: dict = field(default_factory=dict)
    assembled: AssembledSymbol | None = None

    @property
    def order(self) -> int:
        return len(self.terms) - 1

    def replaced(self, j: int, term) -> "ParametrixResult":
        terms = list(self.terms)
        terms[j] = term
        return ParametrixResult(terms, self.tau, self.base, dict(self.certificate))


def certify_nonvanishing(p: PolySymbol, box: float = 8.0, per_axis: int = 9, nrandom: int = 2000,
                         seed: int = 0) -> dict:
    """Certificate that p has no zeros.

    Structural: real coefficients, positive constant, every other monomial
    even in every variable with a positive coefficient.  Otherwise p is
    sampled and the smallest |p| relative to the largest is reported.
    """
    if p.is_zero():
        raise DomainError("p is identically zero")
    d = p.dim
    structural = True
    c0 = p.constant_term()
    for (al, be), c in p.terms.items():
        cc = complex(c)
        if cc.imag != 0 or cc.real <= 0:
            structural = False
            break
        if (any(al) or any(be)) and any(k % 2 for k in al + be):
            structural = False
            break
    if structural and complex(c0).real > 0:
        return {"method": "structural", "lower_bound": float(complex(c0).real)}
    grid = np.linspace(-box, box, per_axis)
    pts = np.array(list(itertools.product(grid, repeat=2 * d)))
    rng = np.random.default_rng(seed)
    pts = np.concatenate([pts, rng.uniform(-box, box, size=(nrandom, 2 * d))])
    vals = np.abs(np.asarray(p.evaluate(pts[:, :d], pts[:, d:])))
    k = int(np.argmin(vals))
    scale = float(np.max(vals))
    if vals[k] <= 1e-12 * max(scale, 1.0):
        z = pts[k]
        raise DomainError(f"p vanishes at x={z[:d].tolist()}, xi={z[d:].tolist()} (|p|={vals[k]:.3g})")
    return {"method": "sampled", "min_abs": float(vals[k]), "margin": float(vals[k] / scale),
            "argmin": pts[k].tolist()}


def _dscale(sym, dx, dxi):
    # d_xi^dxi D_x^dx
    der = sym.derive(dx, dxi)
    return der.scale(minus_i_power(mi.norm(dx))) if any(dx) else der


def parametrix_terms(p: PolySymbol, tau, N: int) -> ParametrixResult:
    """q_0 = 1/p and q_j = -q_0 sum_{0<|e+g|<=j} c(e,g) (d_xi^g D_x^e q_{j-|e+g|})(d_xi^e D_x^g p)."""
    if not isinstance(p, PolySymbol):
        raise SymbolError("the exact parametrix needs a polynomial symbol")
    if not 0 <= N <= MAX_ORDER:
        raise DomainError(f"truncation order N={N} outside 0..{MAX_ORDER}")
    if p.dim > MAX_DIM:
        raise DomainError(f"exact parametrix is limited to d <= {MAX_DIM}, got d={p.dim}")
    cert = certify_nonvanishing(p)
    t = parse_tau(tau)
    d = p.dim
    q0 = RationalSymbol.inverse(p)
    terms = [q0]
    eb, gb = p.xi_degrees, p.x_degrees
    pder = {}
    qder: list[dict] = [{}]
    for j in range(1, N + 1):
        acc = RationalSymbol(PolySymbol.zero(d), p)
        for order in range(1, j + 1):
            k = j - order
            if terms[k].is_zero():
                continue
            for ne in range(order + 1):
                for eps in mi.of_norm(ne, d):
                    if not mi.leq(eps, eb):
                        continue
                    for gam in mi.of_norm(order - ne, d):
                        if not mi.leq(gam, gb):
                            continue
                        c = Fraction(-1 if ne % 2 else 1, mi.factorial(eps) * mi.factorial(gam)) \
                            * t ** ne * (1 - t) ** (order - ne)
                        if c == 0:
                            continue
                        key = (gam, eps)
                        if key not in pder:
                            pder[key] = _dscale(p, gam, eps)
                        right = pder[key]
                        if right.is_zero():
                            continue
                        cache = qder[k]
                        if (eps, gam) not in cache:
                            cache[(eps, gam)] = _dscale(terms[k], eps, gam)
                        acc = acc + (cache[(eps, gam)] * right).scale(c)
        terms.append(-(q0 * acc))
        qder.append({})
    return ParametrixResult(terms, t, p, cert)


# ---------------------------------------------------------------------------
# verification

def _grade_coefficient(tau):
    t = parse_tau(tau)
    return weyl_coefficient if t == Fraction(1, 2) else tau_coefficient(t)


def graded_terms(res: ParametrixResult, p: PolySymbol, top: int) -> list:
    """r_j for j <= top, r_j = sum over k + s = j of the order-s composition term of q_k with p."""
    coef = _grade_coefficient(res.tau)
    zero = RationalSymbol(PolySymbol.zero(p.dim), p)
    r = [zero for _ in range(top + 1)]
    for k, q in enumerate(res.terms[:top + 1]):
        if q.is_zero():
            continue
        for s, term in composition_terms(q, p, coef, max_order=top - k):
            r[k + s] = r[k + s] + term
    return r


def parametrix_verify(res: ParametrixResult, p: PolySymbol) -> Report:
    rep = Report(f"parametrix-verify[tau={res.tau},N={res.order}]")
    if res.base != p:
        rep.check("same_base", False, "result was built for a different symbol")
        return rep
    N = res.order
    r = graded_terms(res, p, N)
    rep.check("r_0 == 1", r[0] == 1, f"r_0 numerator {r[0].numerator} over p^{r[0].power}")
    bad = []
    for j in range(1, N + 1):
        if not r[j].is_zero() and r[j] != 0:
            bad.append(j)
            rep.check(f"r_{j} == 0", False, f"r_{j} = ({r[j].numerator}) / p^{r[j].power}")
    if N >= 1 and not bad:
        rep.check(f"r_1..r_{N} == 0", True)
    powers = [q.power for q in res.terms]
    rep.set("powers", powers)
    rep.check("power_bound", all(pw <= 2 * j + 1 for j, pw in enumerate(powers)),
              f"denominator powers {powers} exceed 2j+1")
    rep.set("certificate", res.certificate)
    return rep


# ---------------------------------------------------------------------------
# assembly

def assemble_parametrix(res: ParametrixResult, c: CutoffFamily, conj: YoungConjugate,
                        inner: tuple[float, float] | None = None) -> AssembledSymbol:
    """q = excision(<z>; R, 2R) * sum_j phi_j q_j."""
    fs = FormalSum(list(res.terms), R=c.R, weight=conj.owner)
    asm = AssembledSymbol(fs, c, conj, inner=inner or (c.R, 2.0 * c.R))
    res.assembled = asm
    return asm


# ---------------------------------------------------------------------------
# residual decay

def _pythagorean_pairs():
    return [(Fraction(a, c), Fraction(b, c)) for a, b, c in
            [(1, 0, 1), (0, 1, 1), (3, 4, 5), (4, 3, 5), (-3, 4, 5), (-4, 3, 5),
             (5, 12, 13), (12, 5, 13), (-12, 5, 13), (8, 15, 17), (-15, 8, 17)]]


def rational_directions(dim2: int) -> list[tuple[Fraction, ...]]:
    """Exact unit vectors in Q^{dim2} (dim2 = 2 or 4)."""
    pairs = _pythagorean_pairs()
    if dim2 == 2:
        return [tuple(v) for v in pairs]
    if dim2 == 4:
        out = []
        for (c, s), u, v in zip(pairs[2:], pairs, pairs[3:] + pairs[:3]):
            out.append((c * u[0], c * u[1], s * v[0], s * v[1]))
        out += [(1, 0, 0, 0), (0, 0, 1, 0), (Fraction(1, 2),) * 4]
        return [tuple(Fraction(t) for t in v) for v in out]
    raise DomainError(f"rational directions exist here for 2d in (2, 4), got {dim2}")


def remainder_symbol(res: ParametrixResult, p: PolySymbol):
    """Exact symbol of Op(sum_{j<=N} q_j) Op(p) - I: all composition terms of total grade > N."""
    coef = _grade_coefficient(res.tau)
    N = res.order
    acc = RationalSymbol(PolySymbol.zero(p.dim), p)
    leading = RationalSymbol(PolySymbol.zero(p.dim), p)
    for k, q in enumerate(res.terms):
        if q.is_zero():
            continue
        for s, term in composition_terms(q, p, coef):
            if k + s > N:
                acc = acc + term
                if k + s == N + 1:
                    leading = leading + term
    return acc, leading


def _shell_max(sym, d: int, radii: Sequence[Fraction], dirs) -> np.ndarray:
    out = np.zeros(len(radii))
    for i, r in enumerate(radii):
        best = 0.0
        for v in dirs:
            z = [r * c for c in v]
            val = abs(complex(sym.evaluate_exact(z[:d], z[d:])))
            best = max(best, val)
        out[i] = best
    return out


def residual_decay(res: ParametrixResult, p: PolySymbol, tau=None, annuli: Sequence[float] = (16, 512),
                   rho: float = 1.0, per_octave: int = 2, slack: float = 0.2) -> Report:
    """Slope of log max|remainder| against log <z> on shells |z| = r between the annuli bounds.

    The remainder is formed exactly and evaluated exactly at rational
    points r v, v running over rational unit vectors.
    """
    if tau is not None and parse_tau(tau) != res.tau:
        raise DomainError(f"result was built at tau={res.tau}, not {tau}")
    d = p.dim
    N = res.order
    lo, hi = annuli
    k0, k1 = math.log2(lo), math.log2(hi)
    n = int(round((k1 - k0) * per_octave))
    radii = sorted({_dyadic(lo, i, per_octave) for i in range(n + 1)})
    dirs = rational_directions(2 * d)
    rem, lead = remainder_symbol(res, p)
    rep = Report(f"residual-decay[tau={res.tau},N={N}]")
    jb = np.array([math.sqrt(1 + float(r) ** 2) for r in radii])
    rep.set("radii", [float(r) for r in radii])
    bound = -rho * (N + 1) + slack
    rep.set("bound", bound)
    if rem.is_zero():
        rep.set("slope", -math.inf)
        rep.note("remainder vanishes identically")
        rep.check("slope", True)
        return rep
    full = _shell_max(rem, d, radii, dirs)
    first = _shell_max(lead, d, radii, dirs) if not lead.is_zero() else np.zeros_like(full)
    slope = float(np.polyfit(np.log(jb), np.log(full), 1)[0])
    rep.set("slope", slope)
    rep.set("shell_max", full.tolist())
    if np.all(first > 0):
        rep.set("leading_slope", float(np.polyfit(np.log(jb), np.log(first), 1)[0]))
    rep.check("slope", slope <= bound, f"fitted slope {slope:.4f} above {bound:.2f}")
    return rep


def _dyadic(lo: float, i: int, per_octave: int) -> Fraction:
    # radii lo * 2^{i/per_octave}, rounded to a short rational
    return Fraction(lo * 2 ** (i / per_octave)).limit_denominator(8)


def decay_sweep(p: PolySymbol, tau, orders: Sequence[int] = range(5), **kw) -> Report:
    """residual_decay for several N plus the monotonicity of the slopes."""
    rep = Report(f"residual-decay-sweep[tau={parse_tau(tau)}]")
    slopes = []
    res = parametrix_terms(p, tau, max(orders))
    for N in orders:
        sub = ParametrixResult(res.terms[:N + 1], res.tau, p, res.certificate)
        r = residual_decay(sub, p, **kw)
        rep.merge(r, prefix=f"N={N}")
        slopes.append(r.values.get("slope"))
    rep.set("slopes", slopes)
    finite = [s for s in slopes if s is not None and math.isfinite(s)]
    rep.set("strictly_decreasing", all(b < a for a, b in zip(finite, finite[1:])))
    # at tau = 1/2 the odd terms vanish, so consecutive slopes can tie exactly
    rep.check("monotone", all(b <= a for a, b in zip(finite, finite[1:])), f"slopes {slopes} increase")
    return rep


# ---------------------------------------------------------------------------
# operator-level check

def parametrix_operator_defect(p: PolySymbol, orders: Sequence[int] = range(4), tau=0,
                               u: HermiteExpansion | None = None, n: int = 1024, xmax: float = 12.0,
                               kproj: int = 80) -> Report:
    """Hermite-coefficient norm of Op(Q_N) Op(p) u - u, with Q_N = sum_{j<=N} q_j.

    Op(p) u is applied exactly by ladders; Op(Q_N) by grid quadrature; the
    defect is projected onto h_0..h_kproj.
    """
    if p.dim != 1:
        raise DomainError("operator-level check runs in d = 1")
    if u is None:
        u = HermiteExpansion.from_dict({(0,): 1.0, (3,): 1.0}, 1)
    x = make_grid(n, xmax)
    pu = apply_operator(quantize_to_operator(p, tau), u)
    v = GridFunction(x, pu.to_grid(x))
    target = u.to_grid(x)
    H = hermite_functions(kproj, x)
    h = float(x[1] - x[0])
    res = parametrix_terms(p, tau, max(orders))
    rep = Report(f"parametrix-operator-defect[tau={res.tau}]")
    norms = []
    for N in orders:
        Q = res.terms[0]
        for q in res.terms[1:N + 1]:
            Q = Q + q
        w = grid_apply_op_tau(Q, res.tau, v)
        coeffs = H @ (w.values - target) * h
        norms.append(float(np.linalg.norm(coeffs)))
    rep.set("orders", list(orders))
    rep.set("defect_norms", norms)
    rep.check("monotone", all(b < a for a, b in zip(norms, norms[1:])), f"defect norms {norms} not decreasing")
    return rep


# ---------------------------------------------------------------------------
# hypoellipticity

def _sphere_min(f, r: float, z0: np.ndarray) -> tuple[float, np.ndarray]:
    """Local minimum of f on the sphere |z| = r, started from z0 (f smooth and nonnegative)."""
    def obj(v):
        nv = np.linalg.norm(v)
        return f(r * v / nv) if nv > 0 else np.inf

    out = minimize(obj, z0 / np.linalg.norm(z0), method="BFGS", options={"gtol": 1e-14, "maxiter": 400})
    v = out.x / np.linalg.norm(out.x)
    return float(out.fun), r * v


def _abs_on(a, d: int):
    def f(z):
        z = np.asarray(z, dtype=float)
        return float(np.abs(np.asarray(a.evaluate(z[None, :d], z[None, d:]))).ravel()[0])
    return f


def check_hypoelliptic(p, hp: HypoParams, region: Region | None = None, K: int = 4, R_max: float = 100.0,
                       growth_tol: float = 0.5, zero_tol: float = 1e-9, starts: int = 4) -> Report:
    """Fit the constants of conditions (i) and (ii) on <z> in [R, R_max].

    A fit counts as bounded when it is finite and the per-shell extreme does
    not drift on the outer half of the region (log-log slope within
    ``growth_tol``).  Failures carry a witness point.
    """
    d = p.dim
    region = region or region_for_japanese(hp.R, R_max, n_radii=16, n_dirs=48)
    pts, radii = region.points(2 * d)
    nr = len(radii)
    flat = pts.reshape(-1, 2 * d)
    with np.errstate(over="ignore", invalid="ignore"):
        table = symbol_partials(p, flat[:, :d], flat[:, d:], K)
    key0 = ((0,) * d, (0,) * d)
    absa = np.abs(table[key0])
    jb = japanese(flat)
    om = np.asarray(hp.weight(np.linalg.norm(flat, axis=-1)))
    rep = Report(f"hypoelliptic[m={hp.m:g},m0={hp.m0:g},rho={hp.rho:g},{hp.weight.spec}]")
    logr = np.log(np.sqrt(1 + radii ** 2))

    # (i) lower bound
    lower = (absa * np.exp(-hp.m0 * om)).reshape(nr, -1)
    shell_min = lower.min(axis=1)
    f = _abs_on(p, d)

    def f2(z):
        return f(z) ** 2

    wit_vals = []
    wit_pts = []
    for i, r in enumerate(radii):
        order = np.argsort(lower[i])[:starts]
        best = (np.inf, None)
        for k in order:
            val, z = _sphere_min(f2, float(r), pts[i, k])
            if val < best[0]:
                best = (val, z)
        wit_vals.append(math.sqrt(best[0]) * math.exp(-hp.m0 * float(hp.weight(r))))
        wit_pts.append(best[1])
    shell_min = np.minimum(shell_min, np.array(wit_vals))
    shell_max_abs = np.abs(table[key0]).reshape(nr, -1).max(axis=1)
    rel = shell_min / np.maximum(shell_max_abs, 1e-300)
    C1 = float(shell_min.min())
    zero_hits = rel <= zero_tol
    slope1 = _outer_slope(logr, np.log(np.maximum(shell_min, 1e-300)))
    lower_ok = C1 > 0 and not np.any(zero_hits) and slope1 >= -growth_tol
    rep.set("C1", C1)
    rep.set("lower_slope", slope1)

    # (i) upper bound
    upper = (absa * np.exp(-hp.m * om)).reshape(nr, -1).max(axis=1)
    C2 = float(upper.max())
    slope2 = _outer_slope(logr, np.log(np.maximum(upper, 1e-300)))
    upper_ok = math.isfinite(C2) and slope2 <= growth_tol
    rep.set("C2", C2)
    rep.set("upper_slope", slope2)

    rep.check("(i) lower", lower_ok, f"|p| e^(-m0 omega) degenerates (C1={C1:.3g}, slope {slope1:.3g})")
    rep.check("(i) upper", upper_ok, f"|p| e^(-m omega) grows (C2={C2:.3g}, slope {slope2:.3g})")

    if not lower_ok:
        i = int(np.argmax(zero_hits)) if np.any(zero_hits) else nr - 1
        z = wit_pts[-1]
        rep.set("witness", {"point": z.tolist(), "direction": (z / np.linalg.norm(z)).tolist(),
                            "abs_p": float(f(z)), "radius": float(radii[-1])})
        unbounded = bool(np.all(zero_hits[nr // 2:]))
        rep.set("unbounded_zero_set", unbounded)
        if unbounded:
            rep.note(f"|p| vanishes to {zero_tol:g} relative on every outer shell, up to |z|={radii[-1]:.4g}")
        else:
            rep.note(f"lower bound first degrades on the shell |z|={radii[i]:.4g}")

    # (ii) derivative gains
    conj = hp.sigma.conjugate()
    fits = {}
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for n in range(1, hp.n + 1):
            worst = np.zeros(flat.shape[0])
            for (al, be), vals in table.items():
                k = mi.norm(al) + mi.norm(be)
                if k == 0:
                    continue
                logw = -hp.rho * k * np.log(jb) + (float(conj(n * mi.norm(al))) + float(conj(n * mi.norm(be)))) / n
                ratio = (np.abs(vals) / absa * np.exp(-logw)) ** (1.0 / k)
                ratio = np.where(np.abs(vals) == 0, 0.0, ratio)
                ratio = np.where(np.isnan(ratio), np.inf, ratio)
                worst = np.maximum(worst, ratio)
            shell = worst.reshape(nr, -1).max(axis=1)
            C = float(shell.max())
            finite = bool(np.all(np.isfinite(shell)))
            slope = _outer_slope(logr, np.log(np.maximum(shell, 1e-300))) if finite else math.inf
            fits[n] = {"C": C, "outer_slope": slope, "bounded": finite and slope <= growth_tol,
                       "argmax": flat[int(np.argmax(worst))].tolist()}
    good = {n: v for n, v in fits.items() if v["bounded"]}
    rep.set("fits_ii", fits)
    if good:
        n_best = min(good, key=lambda n: good[n]["C"])
        rep.set("n", n_best)
        rep.set("C", good[n_best]["C"])
        ok_ii = hp.C is None or good[n_best]["C"] <= hp.C
        rep.check("(ii)", ok_ii, f"fitted C={good[n_best]['C']:.4g} exceeds {hp.C}")
    else:
        n_worst = max(fits, key=lambda n: fits[n]["C"])
        rep.check("(ii)", False, "derivative ratios unbounded for every n tried")
        rep.set("witness_ii", fits[n_worst]["argmax"])
    rep.set("passes", rep.passed)
    return rep


def hypo_invariance_check(a: PolySymbol, tau1, tau2, hp: HypoParams, region: Region | None = None,
                          K: int = 4, R_max: float = 100.0, rel_tol: float = 0.1) -> Report:
    """Refit the hypoellipticity constants after changing the quantization tau1 -> tau2."""
    b = change_quantization(a, tau1, tau2)
    r1 = check_hypoelliptic(a, hp, region, K=K, R_max=R_max)
    r2 = check_hypoelliptic(b, hp, region, K=K, R_max=R_max)
    rep = Report(f"hypo-invariance[{parse_tau(tau1)}->{parse_tau(tau2)}]")
    rep.set("symbol_changed", str(b))
    rep.set("unchanged", b == a)
    rep.merge(r1, prefix="tau1")
    rep.merge(r2, prefix="tau2")
    D1, D2 = r1.values["C1"], r2.values["C1"]
    rep.set("D1", D1)
    rep.set("D2", D2)
    if hp.m0 == hp.m:
        ok = D1 > 0 and D2 > 0 and abs(D2 - D1) <= rel_tol * D1
        rep.check("lower bound refit", ok, f"D2={D2:.4g} vs D1={D1:.4g}")
    else:
        rep.note("m0 < m: the invariance statement is not covered; refits are reported only")
    rep.set("passes", rep.passed)
    return rep
