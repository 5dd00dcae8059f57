"""Complexity-bound evaluation from weight matrices.

Every variant shares the prefactor B * ||g|| / sqrt(n) and differs in the
per-layer factor:

  invertible:  max{1, ||W||^s} * ||K_sigma||            / |det W|^(1/2)
  injective:   max{1, ||W||^s} * G * ||K_sigma||        / det(W^T W)^(1/4)
  graph:       (1 + ||W||^2)^(s/2) * G * ||K_sigma||    / det(W^T W + I)^(1/4)
  weighted:    max{1, ||W||^s} * G * ||K_sigma||        / |det W_r|^(1/2)

with s the smoothness of the layer's *input* space, G the isotropy factor
of the downstream function, and W_r the restriction of W to the
orthogonal complement of its kernel.  The combined bound splices a
Koopman prefix of length l with a Frobenius-product peeling tail
2^(L-l) * prod ||W_j||_F.  Table-style competitor bounds are implemented
verbatim for comparison.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .kernels import gaussian_head_norm, kernel_trace_bound
from .matcore import (
    InvalidParameterError,
    RankDeficientError,
    gram_logdet,
    operator_norm,
    pq_norm,
    restricted_det,
    singular_values,
)
from .network import (
    CustomActivation,
    GaussianHead,
    Identity,
    LayerSpec,
    NetworkSpec,
    SmoothLeakyRelu,
)

KOOPMAN_VARIANTS = ("invertible", "injective", "graph", "weighted", "combined")
COMPETITOR_VARIANTS = ("neyshabur15", "neyshabur18", "golowich18", "bartlett17")
ALL_VARIANTS = KOOPMAN_VARIANTS + COMPETITOR_VARIANTS


class VariantInapplicable(Exception):
    """A bound variant's precondition fails for this network."""

    def __init__(self, reason: str, largest_feasible_l: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.largest_feasible_l = largest_feasible_l


class NotBiLipschitzError(Exception):
    pass


@dataclass(frozen=True)
class BoundConstants:
    """User-facing constants entering every Koopman-variant total."""

    n: int
    B: float
    g_norm: float
    sigma_norms: tuple[float, ...]
    g_factors: tuple[float, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError(f"sample count n must be >= 1, got {self.n}")
        vals = [self.B, self.g_norm, *self.sigma_norms, *self.g_factors]
        if any(not (0 < v < math.inf) for v in vals):
            raise InvalidParameterError(
                "all bound constants must be positive and finite"
            )

    @property
    def prefactor(self) -> float:
        return self.B * self.g_norm / math.sqrt(self.n)


# ---------------------------------------------------------------------------
# per-layer ingredients


def density_ratio_bound(w, s_prev: float) -> float:
    """Closed-form bound on sup p(omega) / p(W^T omega): max{1, ||W||^(2s)}."""
    if s_prev <= 0:
        raise InvalidParameterError(f"s_prev must be positive, got {s_prev}")
    return max(1.0, operator_norm(w) ** (2.0 * s_prev))


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for the density-ratio supremum over the range of W.

    Directions always include every left singular vector of the matrix;
    extra unit directions may be supplied and are projected onto the
    range.  Radii are log-spaced up to max_radius, with 0 included.
    """

    num_radii: int = 200
    min_radius: float = 1e-3
    max_radius: float = 1e6
    extra_directions: tuple[tuple[float, ...], ...] = ()

    def radii(self) -> np.ndarray:
        if self.num_radii < 1:
            raise InvalidParameterError("grid must contain at least one radius")
        r = np.geomspace(self.min_radius, self.max_radius, self.num_radii)
        return np.concatenate(([0.0], r))


def density_ratio_grid_sup(
    w, s_prev: float, s_cur: float, grid: GridSpec | None = None
) -> float:
    """Sampled sup over omega in R(W) of (1+||W^T omega||^2)^s_prev / (1+||omega||^2)^s_cur.

    Serves as the independent verification oracle showing the closed form
    of density_ratio_bound really is an upper bound.
    """
    if s_prev <= 0:
        raise InvalidParameterError(f"s_prev must be positive, got {s_prev}")
    if s_cur < s_prev:
        raise InvalidParameterError(
            f"grid supremum needs s_cur >= s_prev, got {s_cur} < {s_prev}"
        )
    if grid is None:
        grid = GridSpec()
    a = matcore.as_matrix(w)
    dec = matcore.svd(a)
    tol = matcore.rank_tolerance(
        float(dec.singular_values[0]) if dec.singular_values.size else 0.0, *a.shape
    )
    dirs = [
        dec.u[:, i]
        for i in range(len(dec.singular_values))
        if dec.singular_values[i] > tol
    ]
    if dirs:
        basis = np.stack(dirs, axis=1)
        for extra in grid.extra_directions:
            v = basis @ (basis.T @ np.asarray(extra, dtype=float))
            norm = np.linalg.norm(v)
            if norm > 0:
                dirs.append(v / norm)
    best = 1.0  # omega = 0 is always in the grid and gives ratio 1
    radii = grid.radii()
    for u in dirs:
        omegas = radii[:, None] * u[None, :]
        pulled = omegas @ a  # row i is W^T omega_i
        num = (1.0 + np.sum(pulled ** 2, axis=1)) ** s_prev
        den = (1.0 + radii ** 2) ** s_cur
        best = max(best, float(np.max(num / den)))
    return best


def koopman_layer_factor(w, s_prev: float) -> float:
    """max{1, ||W||^s_prev} / det(W^T W)^(1/4); equals 1 for orthogonal W."""
    logdet = gram_logdet(w)  # raises RankDeficientError / ShapeError
    return math.sqrt(density_ratio_bound(w, s_prev)) / math.exp(logdet / 4.0)


def g_factor_gaussian(w, c_gauss: float) -> float:
    """Isotropy factor (2c/pi)^(k/4) of a Gaussian exp(-c||x||^2) head.

    k is the codimension of the range of w, found via the relative rank
    tolerance.
    """
    if c_gauss <= 0:
        raise InvalidParameterError(f"c_gauss must be positive, got {c_gauss}")
    a = matcore.as_matrix(w)
    k = a.shape[0] - matcore.numeric_rank(a)
    return (2.0 * c_gauss / math.pi) ** (k / 4.0)


def _slrelu_derivative_grid(alpha: float, mu: float, num: int = 400_001):
    from scipy.special import erf

    beta = mu * (1.0 - alpha)
    x = np.linspace(-100.0, 100.0, num)
    deriv = 0.5 * (
        (1.0 + alpha)
        + (1.0 - alpha)
        * (erf(beta * x) + x * beta * (2.0 / math.sqrt(math.pi)) * np.exp(-((beta * x) ** 2)))
    )
    return deriv


def activation_opnorm_bound(activation, d: int) -> float:
    """Bound on the composition-operator norm of an elementwise activation.

    For s = 1 and elementwise sigma this is
    (sup 1/sigma')^d * max{1, sup sigma'}; the derivative extremes are
    estimated on a dense grid over [-100, 100] together with the exact
    asymptotic slopes.  Custom activations carry their sups pre-aggregated.
    """
    if isinstance(activation, Identity):
        return 1.0
    if isinstance(activation, CustomActivation):
        return activation.inverse_jacobian_sup * max(1.0, activation.derivative_sup)
    if isinstance(activation, SmoothLeakyRelu):
        deriv = _slrelu_derivative_grid(activation.alpha, activation.mu)
        # asymptotic slopes: 1 as x -> +inf, alpha as x -> -inf
        inf_deriv = min(float(np.min(deriv)), activation.alpha, 1.0)
        sup_deriv = max(float(np.max(deriv)), activation.alpha, 1.0)
        if inf_deriv <= 0:
            raise NotBiLipschitzError(
                "activation derivative is not bounded away from zero; "
                "the composition operator is unbounded"
            )
        return (1.0 / inf_deriv) ** d * max(1.0, sup_deriv)
    raise TypeError(f"unknown activation {activation!r}")


@dataclass(frozen=True)
class VariantChoice:
    tag: str
    reason: str
    alternate: str | None = None


def choose_variant(layer: LayerSpec, prev_dim: int) -> VariantChoice:
    """Route a layer to the tightest applicable bound variant."""
    w = layer.weight
    rows, cols = w.shape
    s = singular_values(w)
    tol = matcore.rank_tolerance(float(s[0]) if s.size else 0.0, rows, cols)
    full_col_rank = float(s[-1]) > tol
    if rows == cols and full_col_rank:
        return VariantChoice("invertible", "square with sigma_min above tolerance")
    if rows > cols and full_col_rank:
        return VariantChoice("injective", "tall with full column rank")
    if rows < cols:
        return VariantChoice(
            "graph",
            f"wide layer ({rows}x{cols}) cannot be injective",
            alternate="weighted",
        )
    return VariantChoice(
        "graph",
        f"rank deficient (sigma_min={float(s[-1]):.3e} <= tolerance {tol:.3e})",
        alternate="weighted",
    )


# ---------------------------------------------------------------------------
# whole-network bound variants


def _check_constants(net: NetworkSpec, c: BoundConstants) -> None:
    if len(c.sigma_norms) != net.depth or len(c.g_factors) != net.depth:
        raise InvalidParameterError(
            "sigma_norms and g_factors must have one entry per layer"
        )


def bound_invertible(net: NetworkSpec, c: BoundConstants) -> float:
    """Theorem-style bound for square invertible layers."""
    _check_constants(net, c)
    s_chain = net.smoothness_chain()
    log_total = math.log(c.prefactor)
    for j, layer in enumerate(net.layers):
        w = layer.weight
        if w.shape[0] != w.shape[1]:
            raise VariantInapplicable(
                f"layer {j + 1} is {w.shape[0]}x{w.shape[1]}, not square"
            )
        try:
            logdet = gram_logdet(w)
        except RankDeficientError as exc:
            raise VariantInapplicable(
                f"layer {j + 1} is numerically singular "
                f"(sigma_min={exc.sigma_min:.3e})"
            ) from exc
        log_total += (
            0.5 * math.log(density_ratio_bound(w, s_chain[j]))
            + math.log(c.sigma_norms[j])
            - logdet / 4.0
        )
    return math.exp(log_total)


def bound_injective(net: NetworkSpec, c: BoundConstants) -> float:
    """Bound for tall full-column-rank layers, with isotropy factors G_j."""
    _check_constants(net, c)
    s_chain = net.smoothness_chain()
    log_total = math.log(c.prefactor)
    for j, layer in enumerate(net.layers):
        w = layer.weight
        if w.shape[0] < w.shape[1]:
            raise VariantInapplicable(
                f"layer {j + 1} is {w.shape[0]}x{w.shape[1]} (wide), not injective"
            )
        try:
            logdet = gram_logdet(w)
        except RankDeficientError as exc:
            raise VariantInapplicable(
                f"layer {j + 1} lacks full column rank "
                f"(sigma_min={exc.sigma_min:.3e})"
            ) from exc
        log_total += (
            0.5 * math.log(density_ratio_bound(w, s_chain[j]))
            + math.log(c.g_factors[j])
            + math.log(c.sigma_norms[j])
            - logdet / 4.0
        )
    return math.exp(log_total)


def _graph_layer_factor(w, s_prev: float) -> float:
    s = singular_values(w)
    op2 = float(s[0]) ** 2
    logdet_lifted = float(np.sum(np.log1p(s ** 2)))  # det(W^T W + I)
    return max(1.0, (1.0 + op2) ** (s_prev / 2.0)) / math.exp(logdet_lifted / 4.0)


def bound_graph(net: NetworkSpec, c: BoundConstants) -> float:
    """Graph-lift bound, finite for any W (rank-deficient included).

    The norm of the lifted head is not computable from the weights; the
    caller's g_norm is used and the total is flagged "modulo psi-norm"
    in reports.
    """
    _check_constants(net, c)
    s_chain = net.smoothness_chain()
    log_total = math.log(c.prefactor)
    for j, layer in enumerate(net.layers):
        log_total += (
            math.log(_graph_layer_factor(layer.weight, s_chain[j]))
            + math.log(c.g_factors[j])
            + math.log(c.sigma_norms[j])
        )
    return math.exp(log_total)


def bound_weighted(
    net: NetworkSpec, c: BoundConstants, tol: float = 1e-8
) -> float:
    """Weighted-composition bound using determinants restricted to ker(W)^perp."""
    _check_constants(net, c)
    if tol <= 0:
        raise InvalidParameterError(f"weighted bound needs tol > 0, got {tol}")
    s_chain = net.smoothness_chain()
    log_total = math.log(c.prefactor)
    for j, layer in enumerate(net.layers):
        rdet, _rank = restricted_det(layer.weight, tol)
        log_total += (
            math.log(max(1.0, operator_norm(layer.weight) ** s_chain[j]))
            + math.log(c.g_factors[j])
            + math.log(c.sigma_norms[j])
            - 0.5 * math.log(rdet)
        )
    return math.exp(log_total)


def _feasible_prefix_length(net: NetworkSpec) -> int:
    """Longest l such that layers 1..l all satisfy the injective preconditions."""
    l = 0
    for layer in net.layers:
        w = layer.weight
        if w.shape[0] < w.shape[1]:
            break
        try:
            gram_logdet(w)
        except RankDeficientError:
            break
        l += 1
    return l


def bound_combined(net: NetworkSpec, c: BoundConstants, l: int) -> float:
    """Koopman prefix of length l spliced with a Frobenius peeling tail.

    value = 2^(L-l) * prod_{j>l} ||W_j||_F * B * ||g|| / sqrt(n)
            * prod_{j<=l} G_j ||K_sigma_j|| max{1, ||W_j||^s} / det(W^T W)^(1/4).

    l = L recovers bound_injective exactly; l = 0 recovers the pure
    Frobenius-product endpoint.
    """
    _check_constants(net, c)
    L = net.depth
    if not (0 <= l <= L):
        raise InvalidParameterError(f"l must be in [0, {L}], got {l}")
    feasible = _feasible_prefix_length(net)
    if l > feasible:
        raise VariantInapplicable(
            f"Koopman prefix of length {l} infeasible; "
            f"largest feasible prefix is {feasible}",
            largest_feasible_l=feasible,
        )
    s_chain = net.smoothness_chain()
    log_total = math.log(c.prefactor) + (L - l) * math.log(2.0)
    for j in range(l, L):
        fro = pq_norm(net.layers[j].weight, 2, 2)
        if fro == 0.0:
            return 0.0  # a zero layer collapses the Frobenius tail
        log_total += math.log(fro)
    for j in range(l):
        w = net.layers[j].weight
        log_total += (
            math.log(max(1.0, operator_norm(w) ** s_chain[j]))
            + math.log(c.g_factors[j])
            + math.log(c.sigma_norms[j])
            - gram_logdet(w) / 4.0
        )
    return math.exp(log_total)


def bound_combined_best(
    net: NetworkSpec, c: BoundConstants
) -> tuple[int, float, list[tuple[int, float | None]]]:
    """Minimize the combined bound over the split point l; ties go to smaller l."""
    L = net.depth
    feasible = _feasible_prefix_length(net)
    per_l: list[tuple[int, float | None]] = []
    best_l, best_val = 0, math.inf
    for l in range(L + 1):
        if l > feasible:
            per_l.append((l, None))
            continue
        val = bound_combined(net, c, l)
        per_l.append((l, val))
        if val < best_val:
            best_l, best_val = l, val
    return best_l, best_val, per_l


# ---------------------------------------------------------------------------
# competitor bounds (norm-based rates, implemented verbatim)


def bound_neyshabur15(net: NetworkSpec, n: int) -> float:
    L = net.depth
    prod = 1.0
    for layer in net.layers:
        prod *= pq_norm(layer.weight, 2, 2)
    return 2.0 ** L * prod / math.sqrt(n)


def bound_neyshabur18(net: NetworkSpec, n: int) -> float:
    L = net.depth
    max_width = max(l.out_dim for l in net.layers)
    prod = 1.0
    ratio_sum = 0.0
    for layer in net.layers:
        op = operator_norm(layer.weight)
        if op == 0.0:
            raise VariantInapplicable(
                "zero operator norm makes the stable-rank sum undefined"
            )
        prod *= op
        ratio_sum += (pq_norm(layer.weight, 2, 2) / op) ** 2
    return L * max_width * prod * math.sqrt(ratio_sum) / math.sqrt(n)


def bound_golowich18(net: NetworkSpec, n: int) -> float:
    L = net.depth
    prod = 1.0
    for layer in net.layers:
        prod *= pq_norm(layer.weight, 2, 2)
    return prod * min(n ** -0.25, math.sqrt(L / n))


def bound_bartlett17(
    net: NetworkSpec, n: int, refs: list[np.ndarray] | None = None
) -> float:
    """Spectral product times the (2,1)-discrepancy sum from reference matrices."""
    if refs is None:
        refs = [np.zeros_like(l.weight) for l in net.layers]
    if len(refs) != net.depth:
        raise InvalidParameterError("need one reference matrix per layer")
    prod = 1.0
    disc_sum = 0.0
    for layer, a in zip(net.layers, refs):
        op = operator_norm(layer.weight)
        if op == 0.0:
            raise VariantInapplicable(
                "zero operator norm makes the discrepancy ratio undefined"
            )
        prod *= op
        disc = pq_norm(layer.weight.T - np.asarray(a, dtype=float).T, 2, 1)
        disc_sum += disc ** (2.0 / 3.0) / op ** (2.0 / 3.0)
    return prod / math.sqrt(n) * disc_sum ** 1.5


# ---------------------------------------------------------------------------
# constants defaults and the full report


def default_constants(
    net: NetworkSpec,
    n: int,
    B: float | None = None,
    g_norm: float | None = None,
    sigma_norms: list[float] | None = None,
    g_factors: list[float] | None = None,
) -> BoundConstants:
    """Fill unspecified constants from the network description.

    B comes from the kernel diagonal of the input space; g_norm from the
    Gaussian-head quadrature when the head is Gaussian (otherwise the
    head's user-supplied norm); activation norms from the elementwise
    s=1 formula.  G_j defaults to 1 for full-rank square layers and to
    the Gaussian-head value for the last layer of a Gaussian-head net;
    other layers get 1 with a "G unnormalized" note.
    """
    notes: list[str] = []
    if B is None:
        B = kernel_trace_bound(net.input_dim, net.s_in)
    if g_norm is None:
        if isinstance(net.head, GaussianHead):
            g_norm = gaussian_head_norm(
                net.layers[-1].out_dim, net.layers[-1].s_out, net.head.c
            )
        else:
            g_norm = net.head.h_norm
            notes.append("g_norm taken from user-supplied head norm")
    if sigma_norms is None:
        sigma_norms = [
            activation_opnorm_bound(layer.activation, layer.out_dim)
            for layer in net.layers
        ]
    if g_factors is None:
        g_factors = []
        for j, layer in enumerate(net.layers):
            w = layer.weight
            square_full_rank = (
                w.shape[0] == w.shape[1]
                and matcore.numeric_rank(w) == w.shape[1]
            )
            if square_full_rank:
                g_factors.append(1.0)
            elif j == net.depth - 1 and isinstance(net.head, GaussianHead):
                g_factors.append(g_factor_gaussian(w, net.head.c))
            else:
                g_factors.append(1.0)
                notes.append(f"layer {j + 1}: G unnormalized")
    return BoundConstants(
        n=n,
        B=float(B),
        g_norm=float(g_norm),
        sigma_norms=tuple(float(v) for v in sigma_norms),
        g_factors=tuple(float(v) for v in g_factors),
        notes=tuple(notes),
    )


@dataclass
class LayerRecord:
    index: int
    rows: int
    cols: int
    singular_values: list[float]
    condition_number: float
    density_ratio_bound: float
    det_factor: float | None  # det(W^T W)^(1/4), None if rank deficient
    numeric_rank: int
    variant_choice: str
    factors: dict[str, float | None]  # per-variant layer factor


@dataclass
class BoundReport:
    """Per-layer factor breakdown plus totals for every variant."""

    layers: list[LayerRecord]
    totals: dict[str, float]
    inapplicable: dict[str, str]
    combined_l_star: int | None
    combined_per_l: list[tuple[int, float | None]]
    matrix_factor: float  # constants-free product of Koopman layer factors
    metadata: dict

    def to_json_dict(self) -> dict:
        return {
            "version": 1,
            "layers": [
                {
                    "index": r.index,
                    "rows": r.rows,
                    "cols": r.cols,
                    "singular_values": r.singular_values,
                    "condition_number": (
                        "inf" if math.isinf(r.condition_number) else r.condition_number
                    ),
                    "density_ratio_bound": r.density_ratio_bound,
                    "det_factor": r.det_factor,
                    "numeric_rank": r.numeric_rank,
                    "variant_choice": r.variant_choice,
                    "factors": r.factors,
                }
                for r in self.layers
            ],
            "totals": self.totals,
            "inapplicable": self.inapplicable,
            "combined_l_star": self.combined_l_star,
            "combined_per_l": [[l, v] for l, v in self.combined_per_l],
            "matrix_factor": self.matrix_factor,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "BoundReport":
        layers = [
            LayerRecord(
                index=r["index"],
                rows=r["rows"],
                cols=r["cols"],
                singular_values=r["singular_values"],
                condition_number=(
                    math.inf
                    if r["condition_number"] == "inf"
                    else r["condition_number"]
                ),
                density_ratio_bound=r["density_ratio_bound"],
                det_factor=r["det_factor"],
                numeric_rank=r["numeric_rank"],
                variant_choice=r["variant_choice"],
                factors=r["factors"],
            )
            for r in doc["layers"]
        ]
        return cls(
            layers=layers,
            totals=doc["totals"],
            inapplicable=doc["inapplicable"],
            combined_l_star=doc["combined_l_star"],
            combined_per_l=[tuple(x) for x in doc["combined_per_l"]],
            matrix_factor=doc["matrix_factor"],
            metadata=doc["metadata"],
        )

    @classmethod
    def from_json(cls, text: str) -> "BoundReport":
        return cls.from_json_dict(json.loads(text))

    def to_csv(self) -> str:
        """Flat CSV, one row per (layer, variant) factor plus total rows."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["layer", "variant", "factor", "sigma_max", "sigma_min", "cond",
             "numeric_rank"]
        )
        for r in self.layers:
            for variant, factor in sorted(r.factors.items()):
                writer.writerow(
                    [
                        r.index,
                        variant,
                        "" if factor is None else repr(factor),
                        repr(r.singular_values[0]),
                        repr(r.singular_values[-1]),
                        "inf" if math.isinf(r.condition_number)
                        else repr(r.condition_number),
                        r.numeric_rank,
                    ]
                )
        for variant in sorted(self.totals):
            writer.writerow(["total", variant, repr(self.totals[variant]), "", "", "", ""])
        for variant in sorted(self.inapplicable):
            writer.writerow(
                ["total", variant, f"inapplicable: {self.inapplicable[variant]}",
                 "", "", "", ""]
            )
        return buf.getvalue()


def matrix_factor_product(net: NetworkSpec, use_layer_s: bool = True) -> float:
    """Constants-free spectral product prod_j ||W_j||^s / det(W^T W)^(1/4).

    This is the quantity tracked against the generalization error in the
    training experiments; s is the layer's own smoothness exponent when
    use_layer_s is set, otherwise the input-side exponent.  Returns +inf
    when a layer is rank deficient.
    """
    s_chain = net.smoothness_chain()
    log_total = 0.0
    for j, layer in enumerate(net.layers):
        s = s_chain[j + 1] if use_layer_s else s_chain[j]
        sv = singular_values(layer.weight)
        if float(sv[-1]) == 0.0:
            return math.inf
        log_total += s * math.log(float(sv[0])) - 0.5 * float(np.sum(np.log(sv)))
    return math.exp(log_total)


def full_report(
    net: NetworkSpec,
    c: BoundConstants,
    weighted_tol: float = 1e-8,
    bartlett_refs: list[np.ndarray] | None = None,
) -> BoundReport:
    """Evaluate every variant and competitor; inapplicable ones become markers."""
    net.validate()
    _check_constants(net, c)
    s_chain = net.smoothness_chain()
    layers: list[LayerRecord] = []
    widths = net.widths
    for j, layer in enumerate(net.layers):
        w = layer.weight
        sv = singular_values(w)
        s_prev = s_chain[j]
        factors: dict[str, float | None] = {}
        try:
            det_factor = math.exp(gram_logdet(w) / 4.0)
        except (RankDeficientError, matcore.ShapeError):
            det_factor = None
        drb = density_ratio_bound(w, s_prev)
        if det_factor is not None and w.shape[0] == w.shape[1]:
            factors["invertible"] = math.sqrt(drb) * c.sigma_norms[j] / det_factor
        else:
            factors["invertible"] = None
        if det_factor is not None and w.shape[0] >= w.shape[1]:
            factors["injective"] = (
                math.sqrt(drb) * c.g_factors[j] * c.sigma_norms[j] / det_factor
            )
        else:
            factors["injective"] = None
        factors["graph"] = (
            _graph_layer_factor(w, s_prev) * c.g_factors[j] * c.sigma_norms[j]
        )
        rdet, rank = restricted_det(w, weighted_tol)
        factors["weighted"] = (
            max(1.0, operator_norm(w) ** s_prev)
            * c.g_factors[j]
            * c.sigma_norms[j]
            / math.sqrt(rdet)
        )
        layers.append(
            LayerRecord(
                index=j + 1,
                rows=w.shape[0],
                cols=w.shape[1],
                singular_values=[float(x) for x in sv],
                condition_number=matcore.condition_number(w),
                density_ratio_bound=drb,
                det_factor=det_factor,
                numeric_rank=rank,
                variant_choice=choose_variant(layer, widths[j]).tag,
                factors=factors,
            )
        )

    totals: dict[str, float] = {}
    inapplicable: dict[str, str] = {}

    def attempt(name, fn, *args, **kwargs):
        try:
            totals[name] = fn(*args, **kwargs)
        except VariantInapplicable as exc:
            inapplicable[name] = exc.reason

    attempt("invertible", bound_invertible, net, c)
    attempt("injective", bound_injective, net, c)
    attempt("graph", bound_graph, net, c)
    attempt("weighted", bound_weighted, net, c, weighted_tol)
    l_star, combined_val, per_l = bound_combined_best(net, c)
    totals["combined"] = combined_val
    attempt("neyshabur15", bound_neyshabur15, net, c.n)
    attempt("neyshabur18", bound_neyshabur18, net, c.n)
    attempt("golowich18", bound_golowich18, net, c.n)
    attempt("bartlett17", bound_bartlett17, net, c.n, bartlett_refs)

    flags = list(c.notes)
    flags.append("graph total is modulo the lifted-head psi-norm")
    return BoundReport(
        layers=layers,
        totals=totals,
        inapplicable=inapplicable,
        combined_l_star=l_star,
        combined_per_l=per_l,
        matrix_factor=matrix_factor_product(net),
        metadata={
            "n": c.n,
            "B": c.B,
            "g_norm": c.g_norm,
            "sigma_norms": list(c.sigma_norms),
            "g_factors": list(c.g_factors),
            "smoothness_chain": s_chain,
            "flags": flags,
        },
    )
