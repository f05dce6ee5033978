"""Per-carrier pulse optimization against a suppression band.

Each optimized carrier gets a pulse of the form

    h_k = p_k + (CC columns) @ cc_weights + (transition basis) @ t_weights

where the cancellation-carrier (CC) columns are ordinary carrier pulses
on reserved carriers and the transition basis only touches the first and
last ``rolloff_len`` samples of the symbol.  Both leave the receiver DFT
window untouched, so any weights preserve receiver transparency.  The
weights minimize the pulse energy inside the band, optionally under a
per-part box constraint or a squared-norm ball.

The quadratic data (basis Gram matrix and cross terms) depend only on
the carrier's CC/harmonic selection, so carriers sharing a selection
share one Hermitian eigendecomposition.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .band import BandMatrix, phi_matrix
from .core import OfdmConfig, ShapingWindow, basic_pulse, build_shaping_window
from .errors import SolverError, ValidationError
from .plan import CarrierPlan

TRANSITION_KINDS = ("none", "general", "windowed", "harmonic")


# ---------------------------------------------------------------------------
# Constraint and transition parameter containers


@dataclass(frozen=True)
class ConstraintSpec:
    """Constraint on the optimized weights.

    box      -- |Re| and |Im| of every entry bounded by eps_cc (CC part)
                and eps_t (transition part)
    l2_ball  -- squared Euclidean norm of the whole weight vector bounded
                by eps_norm
    """

    kind: str = "unconstrained"
    eps_cc: float = 2.0
    eps_t: float = 2.0
    eps_norm: float = 1.0

    def __post_init__(self):
        if self.kind not in ("unconstrained", "box", "l2_ball"):
            raise ValidationError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "box" and (self.eps_cc <= 0 or self.eps_t <= 0):
            raise ValidationError("box bounds must be strictly positive")
        if self.kind == "l2_ball" and self.eps_norm <= 0:
            raise ValidationError("eps_norm must be strictly positive")


@dataclass(frozen=True)
class TransitionParams:
    """Which transition-pulse family to use and its knobs.

    q_carriers  -- carrier set behind the windowed family (None: the CC set)
    edge_window -- edge shape of the windowed family ("hamming" or samples)
    n_harmonics -- harmonic terms per symbol boundary, chosen nearest (in
                   wrapped frequency) to the band edges relevant to each
                   carrier
    fixed       -- "smooth_ramp" skips optimization and re-shapes the
                   optimized carriers with a smoother roll-off instead
    """

    kind: str = "none"
    q_carriers: tuple = None
    edge_window: object = "hamming"
    n_harmonics: int = 3
    fixed: str = None

    def __post_init__(self):
        if self.kind not in TRANSITION_KINDS:
            raise ValidationError(f"unknown transition kind {self.kind!r}")
        if self.n_harmonics < 1:
            raise ValidationError("n_harmonics must be >= 1")
        if self.fixed not in (None, "smooth_ramp"):
            raise ValidationError(f"unknown fixed transition {self.fixed!r}")
        if self.fixed is not None and self.kind != "general":
            raise ValidationError("fixed transitions require the general kind")


@dataclass(frozen=True)
class TransitionBasis:
    """Materialized transition basis: L x M matrix plus its metadata."""

    kind: str
    matrix: np.ndarray
    edge_window: np.ndarray = None
    q_carriers: tuple = ()
    harmonic_indices: tuple = ()

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]


def _edge_indices(config: OfdmConfig) -> np.ndarray:
    beta, length = config.rolloff_len, config.pulse_len
    return np.concatenate([np.arange(beta), np.arange(length - beta, length)])


def _edge_window_samples(config: OfdmConfig, edge_window) -> np.ndarray:
    beta, length = config.rolloff_len, config.pulse_len
    if isinstance(edge_window, str):
        if edge_window != "hamming":
            raise ValidationError(f"unknown edge window {edge_window!r}")
        ramp = np.hamming(beta)
        u = np.zeros(length)
        u[:beta] = ramp
        u[length - beta:] = ramp
        return u
    u = np.asarray(edge_window, dtype=float)
    if u.shape != (length,):
        raise ValidationError("edge window must have pulse_len samples")
    interior = u[beta:length - beta]
    if np.any(interior != 0.0):
        raise ValidationError("edge window must vanish outside the two roll-offs")
    return u


def _harmonic_columns(beta: int, indices) -> np.ndarray:
    n = np.arange(beta)[:, None]
    q = np.asarray(indices, dtype=int)[None, :]
    return np.exp(2j * np.pi * q * n / beta)


def build_cancellation_basis(config: OfdmConfig, window: ShapingWindow,
                             cc_set, data_carriers=None) -> np.ndarray:
    """Stack the pulses of the cancellation carriers as columns."""
    cc = [int(c) for c in cc_set]
    if data_carriers is not None and set(cc) & set(data_carriers):
        raise ValidationError("cancellation carriers intersect the data set")
    out = np.zeros((config.pulse_len, len(cc)), dtype=complex)
    for j, c in enumerate(cc):
        out[:, j] = basic_pulse(config, window, c)
    return out


def build_transition_basis(config: OfdmConfig, kind: str, *,
                           q_carriers=None, edge_window="hamming",
                           harmonic_indices=None) -> TransitionBasis:
    """Materialize one transition-pulse basis.

    general  -- free samples on the two roll-off regions (selector columns)
    windowed -- edge-windowed carrier pulses on ``q_carriers``
    harmonic -- per-boundary IDFT vectors on ``harmonic_indices`` (the same
                index set serves the starting and ending boundary; starting
                columns come first)
    """
    length, beta = config.pulse_len, config.rolloff_len
    if kind == "none":
        return TransitionBasis(kind, np.zeros((length, 0), dtype=complex))
    if kind not in TRANSITION_KINDS:
        raise ValidationError(f"unknown transition kind {kind!r}")
    if beta == 0:
        raise ValidationError("transition pulses require rolloff_len > 0")

    if kind == "general":
        mat = np.zeros((length, 2 * beta), dtype=complex)
        mat[np.arange(beta), np.arange(beta)] = 1.0
        mat[np.arange(length - beta, length), np.arange(beta, 2 * beta)] = 1.0
        return TransitionBasis(kind, mat)

    if kind == "windowed":
        if q_carriers is None:
            raise ValidationError("windowed transition needs q_carriers")
        q = [int(c) for c in q_carriers]
        for c in q:
            if not 0 <= c < config.n_carriers:
                raise ValidationError(f"q carrier {c} outside [0, {config.n_carriers})")
        u = _edge_window_samples(config, edge_window)
        n = np.arange(length)
        mat = np.zeros((length, len(q)), dtype=complex)
        for j, c in enumerate(q):
            mat[:, j] = u * np.exp(
                2j * np.pi * c * (n - config.guard_len) / config.n_carriers)
        return TransitionBasis(kind, mat, edge_window=u, q_carriers=tuple(q))

    # harmonic
    if harmonic_indices is None:
        raise ValidationError("harmonic transition needs harmonic_indices")
    idx = tuple(int(q) for q in harmonic_indices)
    for q in idx:
        if not 0 <= q < beta:
            raise ValidationError(f"harmonic index {q} outside [0, {beta})")
    block = _harmonic_columns(beta, idx)
    mat = np.zeros((length, 2 * len(idx)), dtype=complex)
    mat[:beta, :len(idx)] = block
    mat[length - beta:, len(idx):] = block
    return TransitionBasis(kind, mat, harmonic_indices=idx)


def select_harmonics(beta: int, edge_freqs, count: int) -> tuple:
    """Indices of the ``count`` roll-off harmonics nearest the given
    frequencies (wrapped distance on the unit circle)."""
    if not edge_freqs:
        return tuple(range(min(count, beta)))
    q = np.arange(beta)
    fq = q / beta
    fq = fq - np.floor(fq + 0.5)
    dist = np.full(beta, np.inf)
    for f in edge_freqs:
        d = np.abs(fq - f)
        dist = np.minimum(dist, np.minimum(d, 1.0 - d))
    order = np.argsort(dist, kind="stable")
    return tuple(sorted(int(i) for i in order[:min(count, beta)]))


# ---------------------------------------------------------------------------
# Quadratic solvers: E(g) = e0 + 2 Re(b^H g) + g^H A g


class _QuadModel:
    """Eigendecomposed Hermitian quadratic term, shared across carriers."""

    def __init__(self, gram: np.ndarray):
        gram = np.asarray(gram, dtype=complex)
        gram = 0.5 * (gram + gram.conj().T)
        self.gram = gram
        m = gram.shape[0]
        if m:
            evals, evecs = np.linalg.eigh(gram)
            self.evals = np.maximum(evals, 0.0)
            self.evecs = evecs
        else:
            self.evals = np.zeros(0)
            self.evecs = np.zeros((0, 0), dtype=complex)
        self.trace = float(np.sum(self.evals))
        self.ridge = 1e-12 * self.trace / max(m, 1)
        self.step_scale = float(self.evals[-1]) + self.ridge if m else 0.0

    def solve_shifted(self, b: np.ndarray, mu: float) -> np.ndarray:
        """Minimizer of the quadratic with an extra mu * ||g||^2 term."""
        if b.size == 0:
            return b.copy()
        u = self.evecs.conj().T @ b
        denom = self.evals + mu
        coeff = np.zeros_like(u)
        ok = denom > 0
        coeff[ok] = u[ok] / denom[ok]
        return -(self.evecs @ coeff)

    def norm_sq_at(self, b: np.ndarray, mu: float) -> float:
        u = np.abs(self.evecs.conj().T @ b) ** 2
        denom = (self.evals + mu) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            terms = np.where(u > 0, u / denom, 0.0)
        return float(np.sum(terms))

    def energy_delta(self, b: np.ndarray, g: np.ndarray) -> float:
        """E(g) - E(0) = 2 Re(b^H g) + g^H A g."""
        return float(2.0 * np.vdot(b, g).real + np.vdot(g, self.gram @ g).real)


def _clip_box(g: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return (np.clip(g.real, -bounds, bounds)
            + 1j * np.clip(g.imag, -bounds, bounds))


def _solve_box_kernel(model: _QuadModel, b: np.ndarray, bounds: np.ndarray,
                      max_iters: int = 100_000, tol: float = 1e-10):
    g_free = model.solve_shifted(b, model.ridge)
    if np.all(np.abs(g_free.real) <= bounds) and np.all(np.abs(g_free.imag) <= bounds):
        return g_free
    lip = model.step_scale
    if lip <= 0:
        return np.zeros_like(b)
    scale = 1.0 + float(np.linalg.norm(b))
    g = _clip_box(g_free, bounds)
    for _ in range(max_iters):
        grad = model.gram @ g + model.ridge * g + b
        g_next = _clip_box(g - grad / lip, bounds)
        pg = lip * np.linalg.norm(g - g_next)
        g = g_next
        if pg <= tol * scale:
            return g
    raise SolverError(
        f"box-constrained solve did not converge in {max_iters} iterations "
        f"(projected gradient {pg:.3e})",
        last_iterate=g, residual=float(pg))


def _solve_ball_kernel(model: _QuadModel, b: np.ndarray, eps_norm_sq: float,
                       max_iters: int = 400):
    g_free = model.solve_shifted(b, model.ridge)
    if np.vdot(g_free, g_free).real <= eps_norm_sq:
        return g_free
    lo = 0.0
    hi = max(model.ridge, 1e-16)
    grow = 0
    while model.norm_sq_at(b, hi) > eps_norm_sq:
        lo, hi = hi, hi * 4.0
        grow += 1
        if grow > 400:
            raise SolverError("could not bracket the ball multiplier",
                              residual=model.norm_sq_at(b, hi))
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        if model.norm_sq_at(b, mid) > eps_norm_sq:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(hi, 1.0):
            break
    return model.solve_shifted(b, hi)


def _basis_products(pi: np.ndarray, phi: BandMatrix, p: np.ndarray):
    phi_pi = phi.matmul(pi) if pi.shape[1] else np.zeros_like(pi)
    gram = pi.conj().T @ phi_pi
    b = phi_pi.conj().T @ p
    return gram, b


def solve_unconstrained(pi: np.ndarray, phi: BandMatrix, p_k: np.ndarray) -> np.ndarray:
    """Closed-form minimum-energy weights, with a tiny ridge for rank
    deficiency (1e-12 * trace / M)."""
    gram, b = _basis_products(pi, phi, p_k)
    model = _QuadModel(gram)
    return model.solve_shifted(b, model.ridge)


def solve_box_constrained(pi: np.ndarray, phi: BandMatrix, p_k: np.ndarray,
                          spec: ConstraintSpec, n_cc_cols: int = None,
                          max_iters: int = 100_000, tol: float = 1e-10) -> np.ndarray:
    """Minimize the in-band energy under per-entry Re/Im box bounds.

    The first ``n_cc_cols`` columns of ``pi`` take the eps_cc bound, the
    rest eps_t (all columns default to eps_cc).  Projected gradient with
    step 1/lambda_max, started from the clipped unconstrained solution;
    interior solutions return immediately.
    """
    if spec.kind != "box":
        raise ValidationError("spec.kind must be 'box'")
    m = pi.shape[1]
    n_cc = m if n_cc_cols is None else int(n_cc_cols)
    bounds = np.concatenate([np.full(n_cc, spec.eps_cc),
                             np.full(m - n_cc, spec.eps_t)])
    gram, b = _basis_products(pi, phi, p_k)
    return _solve_box_kernel(_QuadModel(gram), b, bounds, max_iters, tol)


def solve_norm_constrained(pi: np.ndarray, phi: BandMatrix, p_k: np.ndarray,
                           spec: ConstraintSpec) -> np.ndarray:
    """Minimize the in-band energy subject to ||g||^2 <= eps_norm, by
    bisection on the multiplier of the shifted normal equations."""
    if spec.kind != "l2_ball":
        raise ValidationError("spec.kind must be 'l2_ball'")
    gram, b = _basis_products(pi, phi, p_k)
    return _solve_ball_kernel(_QuadModel(gram), b, spec.eps_norm)


# ---------------------------------------------------------------------------
# Pulse design


@dataclass
class PulseDesign:
    """Optimized pulse set: per-carrier weights plus shared metadata.

    Weights exist only for ``plan.reduced_data``; every other data
    carrier keeps its plain pulse.  The design depends on the carrier
    layout and the band, never on transmitted data.
    """

    config: OfdmConfig
    plan: CarrierPlan
    window: ShapingWindow
    band_intervals: tuple
    transition: TransitionParams
    constraints: ConstraintSpec
    cc_weights: dict = field(default_factory=dict)
    transition_weights: dict = field(default_factory=dict)
    per_carrier_harmonics: dict = field(default_factory=dict)
    energies: dict = field(default_factory=dict)

    @classmethod
    def conventional(cls, config, window, plan) -> "PulseDesign":
        """Degenerate design: every data carrier uses its plain pulse."""
        return cls(config=config, plan=plan, window=window, band_intervals=(),
                   transition=TransitionParams(), constraints=ConstraintSpec(),
                   cc_weights={}, transition_weights={},
                   per_carrier_harmonics={}, energies={})

    @property
    def shaped_carriers(self) -> tuple:
        return tuple(sorted(self.cc_weights.keys()))

    def h_column(self, k: int) -> np.ndarray:
        """Time-domain pulse actually transmitted on data carrier ``k``."""
        cfg = self.config
        p = basic_pulse(cfg, self.window, k)
        if k not in self.cc_weights:
            return p
        for c, w in zip(self.plan.per_carrier_cc[k], self.cc_weights[k]):
            p = p + w * basic_pulse(cfg, self.window, c)
        tw = self.transition_weights.get(k)
        if tw is None or tw.size == 0:
            return p
        beta, length = cfg.rolloff_len, cfg.pulse_len
        kind = self.transition.kind
        if kind == "general":
            p[:beta] += tw[:beta]
            p[length - beta:] += tw[beta:]
        elif kind == "windowed":
            u = _edge_window_samples(cfg, self.transition.edge_window)
            n = np.arange(length)
            for q, w in zip(self._q_carriers(), tw):
                p = p + w * u * np.exp(
                    2j * np.pi * q * (n - cfg.guard_len) / cfg.n_carriers)
        elif kind == "harmonic":
            sel = self.per_carrier_harmonics[k]
            block = _harmonic_columns(beta, sel)
            half = len(sel)
            p[:beta] += block @ tw[:half]
            p[length - beta:] += block @ tw[half:]
        return p

    def _q_carriers(self) -> tuple:
        if self.transition.q_carriers is not None:
            return tuple(self.transition.q_carriers)
        return self.plan.cc

    def cc_matrix(self) -> np.ndarray:
        """Weights as a (|CC| x |reduced|) matrix, columns ordered by carrier."""
        cc = self.plan.cc
        pos = {c: i for i, c in enumerate(cc)}
        shaped = self.shaped_carriers
        out = np.zeros((len(cc), len(shaped)), dtype=complex)
        for j, k in enumerate(shaped):
            for c, w in zip(self.plan.per_carrier_cc[k], self.cc_weights[k]):
                out[pos[c], j] = w
        return out

    def transition_matrix(self):
        """Transition weights stacked per carrier.

        general  -- (2 beta x |reduced|)
        windowed -- (|Q| x |reduced|)
        harmonic -- pair of (beta x |reduced|) matrices for the starting and
                    ending boundaries (zero rows off the selected harmonics)
        """
        shaped = self.shaped_carriers
        beta = self.config.rolloff_len
        kind = self.transition.kind
        if kind == "none":
            return np.zeros((0, len(shaped)), dtype=complex)
        if kind == "general":
            out = np.zeros((2 * beta, len(shaped)), dtype=complex)
            for j, k in enumerate(shaped):
                out[:, j] = self.transition_weights[k]
            return out
        if kind == "windowed":
            q = self._q_carriers()
            out = np.zeros((len(q), len(shaped)), dtype=complex)
            for j, k in enumerate(shaped):
                out[:, j] = self.transition_weights[k]
            return out
        start = np.zeros((beta, len(shaped)), dtype=complex)
        end = np.zeros((beta, len(shaped)), dtype=complex)
        for j, k in enumerate(shaped):
            sel = self.per_carrier_harmonics[k]
            w = self.transition_weights[k]
            half = len(sel)
            start[list(sel), j] = w[:half]
            end[list(sel), j] = w[half:]
        return start, end

    # -- serialization ------------------------------------------------

    def to_dict(self) -> dict:
        def c2l(arr):
            return [[float(v.real), float(v.imag)] for v in np.asarray(arr)]

        ew = self.transition.edge_window
        return {
            "config": {
                "n_carriers": self.config.n_carriers,
                "guard_len": self.config.guard_len,
                "rolloff_len": self.config.rolloff_len,
                "sample_rate_hz": self.config.sample_rate_hz,
            },
            "window": self.window.kind,
            "plan": self.plan.to_dict(),
            "band_intervals": [list(iv) for iv in self.band_intervals],
            "transition": {
                "kind": self.transition.kind,
                "q_carriers": None if self.transition.q_carriers is None
                else list(self.transition.q_carriers),
                "edge_window": ew if isinstance(ew, str) else list(np.asarray(ew)),
                "n_harmonics": self.transition.n_harmonics,
                "fixed": self.transition.fixed,
            },
            "constraints": {
                "kind": self.constraints.kind,
                "eps_cc": self.constraints.eps_cc,
                "eps_t": self.constraints.eps_t,
                "eps_norm": self.constraints.eps_norm,
            },
            "cc_weights": {str(k): c2l(v) for k, v in self.cc_weights.items()},
            "transition_weights": {
                str(k): c2l(v) for k, v in self.transition_weights.items()},
            "per_carrier_harmonics": {
                str(k): list(v) for k, v in self.per_carrier_harmonics.items()},
            "energies": {str(k): [float(a), float(b)]
                         for k, (a, b) in self.energies.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PulseDesign":
        def l2c(pairs):
            return np.array([complex(re, im) for re, im in pairs], dtype=complex)

        config = OfdmConfig(**d["config"])
        window = build_shaping_window(config, d["window"])
        tr = d["transition"]
        ew = tr["edge_window"]
        transition = TransitionParams(
            kind=tr["kind"],
            q_carriers=None if tr["q_carriers"] is None else tuple(tr["q_carriers"]),
            edge_window=ew if isinstance(ew, str) else np.asarray(ew, dtype=float),
            n_harmonics=tr["n_harmonics"],
            fixed=tr["fixed"],
        )
        return cls(
            config=config,
            plan=CarrierPlan.from_dict(d["plan"]),
            window=window,
            band_intervals=tuple(tuple(iv) for iv in d["band_intervals"]),
            transition=transition,
            constraints=ConstraintSpec(**d["constraints"]),
            cc_weights={int(k): l2c(v) for k, v in d["cc_weights"].items()},
            transition_weights={int(k): l2c(v)
                                for k, v in d["transition_weights"].items()},
            per_carrier_harmonics={int(k): tuple(v)
                                   for k, v in d["per_carrier_harmonics"].items()},
            energies={int(k): (v[0], v[1]) for k, v in d["energies"].items()},
        )


def _fixed_smooth_ramp_weights(config, window, carriers):
    """Re-shape the given carriers with a squared roll-off ramp: the fixed
    transition waveform is the edge difference between the smoother window
    and the configured one, modulated onto each carrier."""
    beta, length = config.rolloff_len, config.pulse_len
    g = window.samples
    g2 = g.copy()
    g2[:beta] = g[:beta] ** 2
    g2[length - beta:] = g[length - beta:] ** 2
    diff = g2 - g
    n = np.arange(length)
    out = {}
    for k in carriers:
        t = diff * np.exp(2j * np.pi * k * (n - config.guard_len) / config.n_carriers)
        out[k] = np.concatenate([t[:beta], t[length - beta:]])
    return out


def design_pulse_set(config: OfdmConfig, plan: CarrierPlan, window: ShapingWindow,
                     band, transition: TransitionParams = None,
                     constraints: ConstraintSpec = None,
                     n_threads: int = None,
                     max_iters: int = 100_000) -> PulseDesign:
    """Solve the per-carrier energy minimization for every reduced-set
    carrier and assemble the result.

    Carriers sharing a CC/harmonic selection share one factorization.
    Solves for distinct selections may run on ``n_threads`` workers
    (default: the OFDM_SHAPER_THREADS environment variable, else 1).
    """
    transition = transition or TransitionParams()
    constraints = constraints or ConstraintSpec()
    band_intervals = tuple(band.intervals)
    design = PulseDesign(config=config, plan=plan, window=window,
                         band_intervals=band_intervals, transition=transition,
                         constraints=constraints)
    reduced = plan.reduced_data
    if not reduced:
        return design

    length, beta = config.pulse_len, config.rolloff_len
    phi = phi_matrix(band, length)
    cc_all = plan.cc
    cc_pos = {c: i for i, c in enumerate(cc_all)}
    p_cc = build_cancellation_basis(config, window, cc_all, plan.data)
    phi_p_cc = phi.matmul(p_cc) if len(cc_all) else p_cc
    gram_cc = p_cc.conj().T @ phi_p_cc

    # Shared transition blocks (global column space per kind).
    kind = transition.kind
    if kind != "none" and beta == 0:
        raise ValidationError("transition pulses require rolloff_len > 0")
    harm_union = ()
    per_sel = {}
    if kind == "general":
        edge_idx = _edge_indices(config)
        phi_cols_edge = phi.submatrix(np.arange(length), edge_idx)
        gram_tt = phi.submatrix(edge_idx, edge_idx)
        cross_ct = phi_p_cc[edge_idx, :].conj().T if len(cc_all) else \
            np.zeros((0, 2 * beta), dtype=complex)
        t_cols_total = 2 * beta
    elif kind == "windowed":
        q = transition.q_carriers if transition.q_carriers is not None else cc_all
        tb = build_transition_basis(config, "windowed", q_carriers=q,
                                    edge_window=transition.edge_window)
        t_w = tb.matrix
        phi_t = phi.matmul(t_w) if t_w.shape[1] else t_w
        gram_tt = t_w.conj().T @ phi_t
        cross_ct = p_cc.conj().T @ phi_t
        t_cols_total = t_w.shape[1]
    elif kind == "harmonic":
        for k in reduced:
            per_sel[k] = select_harmonics(
                beta, plan.per_carrier_edge_freqs.get(k, ()), transition.n_harmonics)
        harm_union = tuple(sorted({q for sel in per_sel.values() for q in sel}))
        tb = build_transition_basis(config, "harmonic", harmonic_indices=harm_union)
        t_h = tb.matrix
        phi_t = phi.matmul(t_h) if t_h.shape[1] else t_h
        gram_tt = t_h.conj().T @ phi_t
        cross_ct = p_cc.conj().T @ phi_t
        t_cols_total = t_h.shape[1]
    else:
        gram_tt = np.zeros((0, 0), dtype=complex)
        cross_ct = np.zeros((len(cc_all), 0), dtype=complex)
        t_cols_total = 0

    union_pos = {q: i for i, q in enumerate(harm_union)}

    def t_col_ids(k):
        if kind in ("general", "windowed"):
            return np.arange(t_cols_total)
        if kind == "harmonic":
            sel = per_sel[k]
            half = len(harm_union)
            ids = [union_pos[q] for q in sel]
            return np.array(ids + [half + i for i in ids], dtype=int)
        return np.arange(0)

    base_pulses = {k: basic_pulse(config, window, k) for k in reduced}
    e_before = {k: phi.quad(p) for k, p in base_pulses.items()}

    fixed_weights = None
    if transition.fixed == "smooth_ramp":
        fixed_weights = _fixed_smooth_ramp_weights(config, window, reduced)

    # Group carriers by (CC subset, transition column subset).
    groups = {}
    for k in reduced:
        key = (plan.per_carrier_cc[k], tuple(t_col_ids(k)))
        groups.setdefault(key, []).append(k)

    def run_group(key):
        cc_sub, tcols = key
        ci = np.array([cc_pos[c] for c in cc_sub], dtype=int)
        tc = np.array(tcols, dtype=int)
        m_cc, m_t = len(ci), len(tc)
        m = m_cc + m_t
        gram = np.zeros((m, m), dtype=complex)
        gram[:m_cc, :m_cc] = gram_cc[np.ix_(ci, ci)]
        if m_t:
            gram[m_cc:, m_cc:] = gram_tt[np.ix_(tc, tc)]
            if m_cc:
                gram[:m_cc, m_cc:] = cross_ct[np.ix_(ci, tc)]
                gram[m_cc:, :m_cc] = gram[:m_cc, m_cc:].conj().T
        model = _QuadModel(gram)
        results = []
        for k in groups[key]:
            p = base_pulses[k]
            b_cc = (phi_p_cc.conj().T @ p)[ci] if m_cc else np.zeros(0, dtype=complex)
            if m_t == 0:
                b_t = np.zeros(0, dtype=complex)
            elif kind == "general":
                b_t = (phi_cols_edge.conj().T @ p)[tc]
            else:
                b_t = (phi_t.conj().T @ p)[tc]
            b = np.concatenate([b_cc, b_t])
            try:
                if fixed_weights is not None:
                    g = np.concatenate(
                        [np.zeros(m_cc, dtype=complex), fixed_weights[k]])
                elif constraints.kind == "unconstrained":
                    g = model.solve_shifted(b, model.ridge)
                elif constraints.kind == "box":
                    bounds = np.concatenate([np.full(m_cc, constraints.eps_cc),
                                             np.full(m_t, constraints.eps_t)])
                    g = _solve_box_kernel(model, b, bounds, max_iters=max_iters)
                else:
                    g = _solve_ball_kernel(model, b, constraints.eps_norm)
            except SolverError as err:
                raise SolverError(f"carrier {k}: {err}",
                                  last_iterate=err.last_iterate,
                                  residual=err.residual) from err
            e_after = e_before[k] + model.energy_delta(b, g)
            results.append((k, g[:m_cc], g[m_cc:], max(e_after, 0.0)))
        return results

    keys = sorted(groups.keys())
    if n_threads is None:
        n_threads = int(os.environ.get("OFDM_SHAPER_THREADS", "1"))
    if n_threads > 1 and len(keys) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            all_results = list(pool.map(run_group, keys))
    else:
        all_results = [run_group(key) for key in keys]

    for results in all_results:
        for k, w_cc, w_t, e_after in results:
            design.cc_weights[k] = w_cc
            design.transition_weights[k] = w_t
            if kind == "harmonic":
                design.per_carrier_harmonics[k] = per_sel[k]
            design.energies[k] = (e_before[k], e_after)
    return design


def preset(name: str) -> dict:
    """Scenario fragments reproducing earlier shaping strategies.

    yamaguchi           -- one outband CC per band edge, unconstrained,
                           no transition pulses
    brandes             -- two inband CC per band edge, squared-norm ball
                           on the CC weights, no transition pulses
    sahin_fixed_windows -- no CC; fixed (not optimized) smoother roll-off
                           on the carriers nearest the band edges
    mahmoud_ast         -- no CC; optimized general transition under a
                           squared-norm ball
    """
    fragments = {
        "yamaguchi": {
            "plan": {"n_cc_data": 0, "n_cc_band": 1, "per_carrier_cc": "nearest"},
            "transition": {"kind": "none"},
            "constraints": {"kind": "unconstrained"},
        },
        "brandes": {
            "plan": {"n_cc_data": 2, "n_cc_band": 0, "per_carrier_cc": "nearest"},
            "transition": {"kind": "none"},
            "constraints": {"kind": "l2_ball", "eps_norm": 1.0},
        },
        "sahin_fixed_windows": {
            "plan": {"n_cc_data": 0, "n_cc_band": 0},
            "transition": {"kind": "general", "fixed": "smooth_ramp"},
            "constraints": {"kind": "unconstrained"},
        },
        "mahmoud_ast": {
            "plan": {"n_cc_data": 0, "n_cc_band": 0},
            "transition": {"kind": "general"},
            "constraints": {"kind": "l2_ball", "eps_norm": 1.0},
        },
    }
    if name not in fragments:
        raise ValidationError(f"unknown preset {name!r}")
    return fragments[name]
