"""Semi-simplicial network layers, readouts and routing with exact gradients.

Features live in one global matrix ``X`` whose rows follow the global simplex
indexing of the host (dimension-major). A relation ``R`` with source
dimension ``s`` and target dimension ``t`` sends the message of ``sigma`` to
``tau`` for every ``(sigma, tau) in R``:

    omega_R(X_s)[tau] = agg_{sigma : (sigma, tau) in R} (X_s[sigma] W_R + b_R)

Messages are combined in two steps: an inner aggregator over the relations
sharing a ``(target, source)`` dimension pair (or a routing gate that weights
them), then an outer aggregator across source dimensions. The update is
``act(X_t W_self[t] + b_self[t] + M_t)``.

Everything is float64 and the backward pass is written out by hand.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, ndtr

from ssx.complex import SemiSimplicialSet
from ssx.errors import ValidationError
from ssx.relations import Relation, derive, relation_dims
from ssx.rng import make_rng

__all__ = [
    "LayerConfig",
    "ModelConfig",
    "RoutingGate",
    "SSNModel",
    "Sample",
    "Structure",
    "construct_invariant_ssn",
    "forward_layer",
    "kth_excluding",
    "load_estimate",
    "load_loss",
    "loss_and_grad",
    "readout",
    "routing_gate",
    "run_invariant_ssn",
    "selection_probability",
]

ACTIVATIONS = ("identity", "relu")
INNER = ("sum", "mean", "max")
OUTER = ("sum", "mean")
MSG = ("sum", "mean")
READOUTS = ("mean", "sum", "dim-mean-concat", "flatten")


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


# -- host structures --------------------------------------------------------------


class Structure:
    """A semi-simplicial set plus the relations a model may reference by name.

    Names in ``relations`` take precedence; any other name is parsed as a
    catalogue spec and derived lazily from the face maps.
    """

    def __init__(self, sset: SemiSimplicialSet, relations: Mapping[str, Relation] | None = None):
        self.sset = sset
        self._given = dict(relations or {})
        for name, rel in self._given.items():
            if rel.host != tuple(sset.sizes):
                raise ValidationError(f"relation {name!r} belongs to a different host")
        self._rel: dict[str, Relation] = {}
        self._ops: dict[tuple[str, str], sp.csr_matrix] = {}

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(self.sset.sizes)

    @property
    def num_simplices(self) -> int:
        return self.sset.num_simplices

    def offsets(self, num_dims: int) -> np.ndarray:
        sizes = list(self.sizes[:num_dims]) + [0] * max(0, num_dims - len(self.sizes))
        if any(self.sizes[num_dims:]):
            raise ValidationError(f"structure has simplices above dimension {num_dims - 1}")
        return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)

    def relation(self, name: str) -> Relation:
        if name in self._given:
            return self._given[name]
        if name not in self._rel:
            try:
                self._rel[name] = derive(self.sset, name)
            except ValidationError as exc:
                raise ValidationError(f"unknown relation {name!r}: {exc}") from None
        return self._rel[name]

    def operator(self, name: str, src: int, dst: int, agg: str) -> sp.csr_matrix:
        """Sparse ``(|S_dst|, |S_src|)`` matrix with ``omega = op @ messages``."""
        key = (name, agg)
        if key not in self._ops:
            rel = self.relation(name)
            off = self.sset.offsets
            p = rel.pairs
            n_src = self.sizes[src] if src < len(self.sizes) else 0
            n_dst = self.sizes[dst] if dst < len(self.sizes) else 0
            if len(p):
                if rel.domain_dim != src or rel.codomain_dim != dst:
                    raise ValidationError(f"relation {name!r} does not map dimension {src} to {dst}")
                rows, cols = p[:, 1] - off[dst], p[:, 0] - off[src]
            else:
                rows = cols = np.zeros(0, np.int64)
            op = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_dst, n_src))
            if agg == "mean":
                deg = np.asarray(op.sum(axis=1)).ravel()
                op = sp.diags(np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)) @ op
                op = op.tocsr()
            self._ops[key] = op
        return self._ops[key]


# -- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class LayerConfig:
    relations: tuple[str, ...]
    d_in: int
    d_out: int
    num_dims: int = 3
    inner: str = "sum"
    outer: str = "sum"
    msg_agg: str = "sum"
    activation: str = "relu"
    routing_k: int | None = None  # top-k per group, capped at the group's relation count
    custom_dims: tuple[tuple[str, int, int], ...] = ()  # (name, source dim, target dim)

    def __post_init__(self) -> None:
        object.__setattr__(self, "relations", tuple(self.relations))
        for value, allowed, what in (
            (self.inner, INNER, "inner aggregator"),
            (self.outer, OUTER, "outer aggregator"),
            (self.msg_agg, MSG, "message aggregator"),
            (self.activation, ACTIVATIONS, "activation"),
        ):
            if value not in allowed:
                raise ValidationError(f"{what} must be one of {allowed}, got {value!r}")
        if len(set(self.relations)) != len(self.relations):
            raise ValidationError("duplicate relation in layer")
        if self.d_in < 0 or self.d_out < 0 or self.num_dims < 1:
            raise ValidationError("layer widths must be non-negative and num_dims >= 1")
        for name in self.relations:
            s, t = self.dims_of(name)
            if not (0 <= s < self.num_dims and 0 <= t < self.num_dims):
                raise ValidationError(f"relation {name!r} touches a dimension outside 0..{self.num_dims - 1}")
        if self.routing_k is not None and self.routing_k < 1:
            raise ValidationError("routing k must be >= 1")

    def dims_of(self, name: str) -> tuple[int, int]:
        for n, s, t in self.custom_dims:
            if n == name:
                return s, t
        try:
            return relation_dims(name)
        except ValidationError:
            raise ValidationError(f"unknown relation {name!r}") from None

    def groups(self) -> dict[tuple[int, int], list[str]]:
        """Relations keyed by ``(target dim, source dim)``, in sorted key order."""
        out: dict[tuple[int, int], list[str]] = {}
        for name in self.relations:
            s, t = self.dims_of(name)
            out.setdefault((t, s), []).append(name)
        return dict(sorted(out.items()))

    def param_shapes(self, prefix: str) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for name in self.relations:
            shapes[f"{prefix}rel[{name}].W"] = (self.d_in, self.d_out)
            shapes[f"{prefix}rel[{name}].b"] = (self.d_out,)
        for t in range(self.num_dims):
            shapes[f"{prefix}self{t}.W"] = (self.d_in, self.d_out)
            shapes[f"{prefix}self{t}.b"] = (self.d_out,)
        if self.routing_k is not None:
            for (t, s), members in self.groups().items():
                shapes[f"{prefix}gate{t}<{s}.Wg"] = (self.d_in, len(members))
                shapes[f"{prefix}gate{t}<{s}.Wn"] = (self.d_in, len(members))
        return shapes


@dataclass(frozen=True)
class ModelConfig:
    layers: tuple[LayerConfig, ...]
    readout: str = "mean"
    readout_dims: tuple[int, ...] | None = None
    num_classes: int = 0
    load_weight: float = 0.0
    flatten_rows: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.readout not in READOUTS:
            raise ValidationError(f"readout must be one of {READOUTS}")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.d_out != b.d_in or a.num_dims != b.num_dims:
                raise ValidationError("layer widths and dimension counts must chain")
        if self.readout == "flatten" and self.num_classes and self.flatten_rows <= 0:
            raise ValidationError("flatten readout with a head needs flatten_rows")

    @property
    def width(self) -> int:
        return self.layers[-1].d_out if self.layers else 0

    @property
    def num_dims(self) -> int:
        return self.layers[-1].num_dims if self.layers else 1

    def readout_width(self) -> int:
        if self.readout == "dim-mean-concat":
            dims = self.readout_dims if self.readout_dims is not None else range(self.num_dims)
            return self.width * len(tuple(dims))
        if self.readout == "flatten":
            return self.width * self.flatten_rows
        return self.width

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        for l, layer in enumerate(self.layers):
            shapes.update(layer.param_shapes(f"L{l}."))
        if self.num_classes:
            shapes["head.W"] = (self.readout_width(), self.num_classes)
            shapes["head.b"] = (self.num_classes,)
        return shapes


# -- routing gate -------------------------------------------------------------------


def _topk(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores; ties go to the lowest index."""
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:k]


@dataclass
class RoutingGate:
    W_g: np.ndarray  # (d, M)
    W_n: np.ndarray  # (d, M)
    k: int

    def __post_init__(self) -> None:
        self.W_g = np.asarray(self.W_g, dtype=np.float64)
        self.W_n = np.asarray(self.W_n, dtype=np.float64)
        if self.W_g.shape != self.W_n.shape or self.W_g.ndim != 2:
            raise ValidationError("gate and noise weights must share a (d, M) shape")
        if not 1 <= self.k <= self.W_g.shape[1]:
            raise ValidationError(f"k={self.k} exceeds the {self.W_g.shape[1]} experts")

    @property
    def num_experts(self) -> int:
        return self.W_g.shape[1]


def _gate_forward(x, Wg, Wn, k, eps):
    a = x @ Wg
    c = x @ Wn
    logits = a + eps * softplus(c) if eps is not None else a
    sel = np.sort(_topk(logits, k))  # index order, so k = M sums exactly like a plain softmax
    z = logits[sel] - logits[sel].max()
    g_sel = np.exp(z) / np.exp(z).sum()
    g = np.zeros(len(a))
    g[sel] = g_sel
    return g, (x, c, sel, g_sel, eps)


def _gate_backward(dg, cache, Wg, Wn):
    x, c, sel, g_sel, eps = cache
    dl = np.zeros(Wg.shape[1])
    dl[sel] = g_sel * (dg[sel] - g_sel @ dg[sel])
    dc = dl * eps * expit(c) if eps is not None else np.zeros_like(dl)
    return Wg @ dl + Wn @ dc, np.outer(x, dl), np.outer(x, dc)


def routing_gate(x: np.ndarray, gate: RoutingGate, noise: np.ndarray | None = None) -> np.ndarray:
    """Softmax over the top-``k`` of ``x W_g + noise * softplus(x W_n)``; zeros elsewhere."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (gate.W_g.shape[0],):
        raise ValidationError("pooled vector does not match the gate width")
    return _gate_forward(x, gate.W_g, gate.W_n, gate.k, None if noise is None else np.asarray(noise, float))[0]


def kth_excluding(scores: np.ndarray, k: int, i: int) -> tuple[float, int]:
    """``k``-th largest entry of ``scores`` with entry ``i`` removed, and its index."""
    order = [j for j in np.lexsort((np.arange(len(scores)), -scores)) if j != i]
    if k > len(order):
        raise ValidationError("not enough competitors for the requested k")
    j = int(order[k - 1])
    return float(scores[j]), j


def _load_forward(xs, Wg, Wn, k, eps):
    """Selection probabilities ``P[b, i]`` and the cache for their gradient."""
    B, M = xs.shape[0], Wg.shape[1]
    a = xs @ Wg
    c = xs @ Wn
    s = softplus(c)
    gates = a + eps * s if eps is not None else a
    if k >= M:
        return np.ones((B, M)), None
    kth_idx = np.empty((B, M), dtype=np.int64)
    for b in range(B):
        order = np.lexsort((np.arange(M), -gates[b]))
        rank = np.empty(M, dtype=np.int64)
        rank[order] = np.arange(M)
        kth_idx[b] = np.where(rank < k, order[k], order[k - 1])
    kth = np.take_along_axis(gates, kth_idx, axis=1)
    z = (a - kth) / s
    return ndtr(z), (xs, c, s, z, kth_idx, eps)


def _load_backward(dP, cache, Wg, Wn):
    xs, c, s, z, kth_idx, eps = cache
    B, M = dP.shape
    dz = dP * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    da = dz / s
    dc = -dz * z / s * expit(c)
    dkth = -dz / s
    rows = np.repeat(np.arange(B), M)
    np.add.at(da, (rows, kth_idx.ravel()), dkth.ravel())
    if eps is not None:
        np.add.at(dc, (rows, kth_idx.ravel()), (dkth * np.take_along_axis(eps * expit(c), kth_idx, axis=1)).ravel())
    return da @ Wg.T + dc @ Wn.T, xs.T @ da, xs.T @ dc


def selection_probability(xs: np.ndarray, gate: RoutingGate, noise: np.ndarray | None = None) -> np.ndarray:
    """``P[b, i] = Phi((x W_g)_i - kth_excluding(gates(x), k, i)) / softplus(x W_n)_i)``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    eps = None if noise is None else np.atleast_2d(np.asarray(noise, float))
    return _load_forward(xs, gate.W_g, gate.W_n, gate.k, eps)[0]


def load_estimate(batch: np.ndarray, gate: RoutingGate, noise: np.ndarray | None = None) -> np.ndarray:
    """Smooth per-expert load ``sum_x P(x, i)``."""
    if len(np.atleast_2d(batch)) == 0:
        raise ValidationError("load estimate needs a non-empty batch")
    return selection_probability(batch, gate, noise).sum(axis=0)


def load_loss(load: np.ndarray, weight: float) -> float:
    """``weight * CV(load)^2`` with the population standard deviation."""
    load = np.asarray(load, dtype=np.float64)
    mean = load.mean()
    if mean == 0:
        warnings.warn("zero mean load; load loss set to 0", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(weight * load.var() / mean**2)


def _load_loss_grad(load: np.ndarray, weight: float) -> np.ndarray:
    mean = load.mean()
    if mean == 0:
        return np.zeros_like(load)
    M = len(load)
    var = load.var()
    return weight * (2 * (load - mean) / M / mean**2 - 2 * var / mean**3 / M)


# -- layer forward / backward ----------------------------------------------------------


def _act(h: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(h, 0.0) if kind == "relu" else h


@dataclass
class _LayerCache:
    X: np.ndarray
    H: np.ndarray
    off: np.ndarray
    omegas: dict[str, np.ndarray] = field(default_factory=dict)
    argmax: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    gates: dict[tuple[int, int], tuple[np.ndarray, tuple]] = field(default_factory=dict)
    pooled: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)


def _layer_forward(cfg: LayerConfig, P: Mapping[str, np.ndarray], prefix: str, struct: Structure, X: np.ndarray, noise=None):
    off = struct.offsets(cfg.num_dims)
    if X.shape != (off[-1], cfg.d_in):
        raise ValidationError(f"feature matrix has shape {X.shape}, expected ({off[-1]}, {cfg.d_in})")
    H = np.empty((off[-1], cfg.d_out))
    for t in range(cfg.num_dims):
        H[off[t] : off[t + 1]] = X[off[t] : off[t + 1]] @ P[f"{prefix}self{t}.W"] + P[f"{prefix}self{t}.b"]
    cache = _LayerCache(X, H, off)
    by_target: dict[int, list[np.ndarray]] = {}
    for (t, s), members in cfg.groups().items():
        Xs = X[off[s] : off[s + 1]]
        omegas = []
        for name in members:
            op = struct.operator(name, s, t, cfg.msg_agg)
            om = op @ (Xs @ P[f"{prefix}rel[{name}].W"] + P[f"{prefix}rel[{name}].b"])
            cache.omegas[name] = om
            omegas.append(om)
        stack = np.stack(omegas)
        if cfg.routing_k is not None:
            x = Xs.mean(axis=0) if len(Xs) else np.zeros(cfg.d_in)
            eps = None if noise is None else noise.get((t, s))
            k = min(cfg.routing_k, len(members))
            g, gc = _gate_forward(x, P[f"{prefix}gate{t}<{s}.Wg"], P[f"{prefix}gate{t}<{s}.Wn"], k, eps)
            cache.gates[(t, s)] = (g, gc)
            cache.pooled[(t, s)] = x
            G = np.tensordot(g, stack, axes=1)
        elif cfg.inner == "sum":
            G = stack.sum(axis=0)
        elif cfg.inner == "mean":
            G = stack.mean(axis=0)
        else:
            am = stack.argmax(axis=0)  # first maximum wins
            cache.argmax[(t, s)] = am
            G = np.take_along_axis(stack, am[None], axis=0)[0]
        by_target.setdefault(t, []).append(G)
    for t, gs in by_target.items():
        M_t = gs[0] if len(gs) == 1 else np.sum(gs, axis=0)
        if cfg.outer == "mean":
            M_t = M_t / len(gs)
        H[off[t] : off[t + 1]] += M_t
    return _act(H, cfg.activation), cache


def _layer_backward(cfg, P, prefix, struct, cache: _LayerCache, dY, grads, extra_dx=None):
    off = cache.off
    X = cache.X
    dH = dY * (cache.H > 0) if cfg.activation == "relu" else dY
    dX = np.zeros_like(X)
    for t in range(cfg.num_dims):
        sl = slice(off[t], off[t + 1])
        grads[f"{prefix}self{t}.W"] += X[sl].T @ dH[sl]
        grads[f"{prefix}self{t}.b"] += dH[sl].sum(axis=0)
        dX[sl] += dH[sl] @ P[f"{prefix}self{t}.W"].T
    groups = cfg.groups()
    n_src = {t: sum(1 for (tt, _) in groups if tt == t) for t in range(cfg.num_dims)}
    for (t, s), members in groups.items():
        dG = dH[off[t] : off[t + 1]]
        if cfg.outer == "mean":
            dG = dG / n_src[t]
        Xs = X[off[s] : off[s + 1]]
        dXs = np.zeros_like(Xs)
        if cfg.routing_k is not None:
            g, gc = cache.gates[(t, s)]
            dg = np.array([np.sum(dG * cache.omegas[name]) for name in members])
            key = f"{prefix}gate{t}<{s}"
            dx, dWg, dWn = _gate_backward(dg, gc, P[f"{key}.Wg"], P[f"{key}.Wn"])
            if extra_dx is not None and (t, s) in extra_dx:
                dx = dx + extra_dx[(t, s)]
            grads[f"{key}.Wg"] += dWg
            grads[f"{key}.Wn"] += dWn
            if len(Xs):
                dXs += dx[None, :] / len(Xs)
            weights = g
        elif cfg.inner == "sum":
            weights = np.ones(len(members))
        elif cfg.inner == "mean":
            weights = np.full(len(members), 1.0 / len(members))
        else:
            weights = None
            am = cache.argmax[(t, s)]
        for r, name in enumerate(members):
            if weights is not None:
                if weights[r] == 0:
                    continue
                dOm = weights[r] * dG
            else:
                dOm = dG * (am == r)
            op = struct.operator(name, s, t, cfg.msg_agg)
            dZ = op.T @ dOm
            W = P[f"{prefix}rel[{name}].W"]
            grads[f"{prefix}rel[{name}].W"] += Xs.T @ dZ
            grads[f"{prefix}rel[{name}].b"] += dZ.sum(axis=0)
            dXs += dZ @ W.T
        dX[off[s] : off[s + 1]] += dXs
    return dX


def forward_layer(struct: Structure, X: np.ndarray, config: LayerConfig, params: Mapping[str, np.ndarray], prefix: str = "", noise=None) -> np.ndarray:
    """One message-passing layer; ``params`` keys follow :meth:`LayerConfig.param_shapes`."""
    return _layer_forward(config, params, prefix, struct, np.asarray(X, dtype=np.float64), noise)[0]


# -- readout -------------------------------------------------------------------------


def _readout_rows(struct: Structure, num_dims: int, dims) -> list[slice]:
    off = struct.offsets(num_dims)
    dims = range(num_dims) if dims is None else dims
    return [slice(off[d], off[d + 1]) if d < num_dims else slice(0, 0) for d in dims]


def readout(X: np.ndarray, kind: str, *, struct: Structure | None = None, num_dims: int = 1, dims=None) -> np.ndarray:
    """Graph-level vector from row features.

    ``mean``/``sum`` pool the selected rows (all rows without ``struct``);
    ``dim-mean-concat`` concatenates per-dimension means; ``flatten`` keeps
    the row order and is therefore not permutation invariant.
    """
    X = np.asarray(X, dtype=np.float64)
    if kind not in READOUTS:
        raise ValidationError(f"readout must be one of {READOUTS}")
    if struct is None:
        slices = [slice(0, len(X))]
    else:
        slices = _readout_rows(struct, num_dims, dims)
    rows = np.concatenate([X[s] for s in slices]) if slices else X[:0]
    if kind == "sum":
        return rows.sum(axis=0)
    if kind == "mean":
        return rows.mean(axis=0) if len(rows) else np.zeros(X.shape[1])
    if kind == "flatten":
        return rows.ravel()
    return np.concatenate([X[s].mean(axis=0) if s.stop > s.start else np.zeros(X.shape[1]) for s in slices])


def _readout_backward(dr, X_shape, kind, slices):
    dX = np.zeros(X_shape)
    d = X_shape[1]
    if kind == "dim-mean-concat":
        for k, s in enumerate(slices):
            n = s.stop - s.start
            if n:
                dX[s] += dr[k * d : (k + 1) * d] / n
        return dX
    total = sum(s.stop - s.start for s in slices)
    pos = 0
    for s in slices:
        n = s.stop - s.start
        if kind == "sum":
            dX[s] += dr
        elif kind == "mean":
            dX[s] += dr / total
        else:
            dX[s] += dr[pos * d : (pos + n) * d].reshape(n, d)
        pos += n
    return dX


# -- model ---------------------------------------------------------------------------


@dataclass
class Sample:
    structure: Structure
    X: np.ndarray
    label: int = 0


class SSNModel:
    def __init__(self, config: ModelConfig, params: Mapping[str, np.ndarray]):
        shapes = config.param_shapes()
        if set(params) != set(shapes):
            raise ValidationError("parameter names do not match the configuration")
        for k, shape in shapes.items():
            if np.shape(params[k]) != shape:
                raise ValidationError(f"parameter {k} has shape {np.shape(params[k])}, expected {shape}")
        self.config = config
        self.params = {k: np.array(params[k], dtype=np.float64) for k in shapes}

    @classmethod
    def init(cls, config: ModelConfig, seed: int) -> SSNModel:
        """Glorot-uniform weights, zero biases."""
        rng = make_rng(seed)
        params = {}
        for k, shape in config.param_shapes().items():
            if len(shape) == 2:
                lim = np.sqrt(6.0 / max(sum(shape), 1))
                params[k] = rng.uniform(-lim, lim, size=shape)
            else:
                params[k] = np.zeros(shape)
        return cls(config, params)

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self) -> SSNModel:
        return SSNModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def _forward(self, struct: Structure, X, noise=None):
        H = np.asarray(X, dtype=np.float64)
        caches = []
        for l, layer in enumerate(self.config.layers):
            H, cache = _layer_forward(layer, self.params, f"L{l}.", struct, H, None if noise is None else noise.get(l))
            caches.append(cache)
        return H, caches

    def embed(self, struct: Structure, X, noise=None) -> np.ndarray:
        """Row features after the last layer."""
        return self._forward(struct, X, noise)[0]

    def readout(self, struct: Structure, X, noise=None) -> np.ndarray:
        cfg = self.config
        return readout(self.embed(struct, X, noise), cfg.readout, struct=struct, num_dims=cfg.num_dims, dims=cfg.readout_dims)

    def logits(self, struct: Structure, X, noise=None) -> np.ndarray:
        if not self.config.num_classes:
            raise ValidationError("model has no classifier head")
        return self.readout(struct, X, noise) @ self.params["head.W"] + self.params["head.b"]

    def predict(self, struct: Structure, X) -> int:
        return int(np.argmax(self.logits(struct, X)))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


def loss_and_grad(model: SSNModel, batch: Sequence[Sample], noise: Sequence | None = None, *, need_grad: bool = True):
    """Mean softmax cross-entropy plus the weighted load loss, with exact gradients.

    ``noise[b]`` maps layer index to ``{(t, s): eps}`` draws for sample ``b``
    (``None`` switches gate noise off). Returns ``(loss, grads, logits)``.
    """
    cfg = model.config
    P = model.params
    B = len(batch)
    if B == 0:
        raise ValidationError("empty batch")
    traces = []
    logits = np.zeros((B, cfg.num_classes))
    loss = 0.0
    for b, sample in enumerate(batch):
        nz = None if noise is None else noise[b]
        H, caches = model._forward(sample.structure, sample.X, nz)
        slices = _readout_rows(sample.structure, cfg.num_dims, cfg.readout_dims)
        r = readout(H, cfg.readout, struct=sample.structure, num_dims=cfg.num_dims, dims=cfg.readout_dims)
        traces.append((H, caches, slices, r))
        if cfg.num_classes:
            logits[b] = r @ P["head.W"] + P["head.b"]
            loss -= _log_softmax(logits[b])[sample.label] / B
    grads = {k: np.zeros_like(v) for k, v in P.items()}
    extra = [dict() for _ in range(B)]
    for l, layer in enumerate(cfg.layers):
        if layer.routing_k is None or not cfg.load_weight:
            continue
        for (t, s), members in layer.groups().items():
            key = f"L{l}.gate{t}<{s}"
            xs = np.stack([traces[b][1][l].pooled[(t, s)] for b in range(B)])
            eps = None
            if noise is not None and all(noise[b] is not None and noise[b].get(l, {}).get((t, s)) is not None for b in range(B)):
                eps = np.stack([noise[b][l][(t, s)] for b in range(B)])
            probs, lc = _load_forward(xs, P[f"{key}.Wg"], P[f"{key}.Wn"], min(layer.routing_k, len(members)), eps)
            load = probs.sum(axis=0)
            loss += load_loss(load, cfg.load_weight)
            if need_grad and lc is not None:
                dP = np.broadcast_to(_load_loss_grad(load, cfg.load_weight), probs.shape)
                dxs, dWg, dWn = _load_backward(dP, lc, P[f"{key}.Wg"], P[f"{key}.Wn"])
                grads[f"{key}.Wg"] += dWg
                grads[f"{key}.Wn"] += dWn
                for b in range(B):
                    extra[b].setdefault(l, {})[(t, s)] = dxs[b]
    if not need_grad:
        return loss, None, logits
    for b, sample in enumerate(batch):
        H, caches, slices, r = traces[b]
        if cfg.num_classes:
            p = np.exp(_log_softmax(logits[b]))
            p[sample.label] -= 1.0
            dlog = p / B
            grads["head.W"] += np.outer(r, dlog)
            grads["head.b"] += dlog
            dr = P["head.W"] @ dlog
        else:
            dr = np.zeros_like(r)
        dY = _readout_backward(dr, H.shape, cfg.readout, slices)
        for l in range(len(cfg.layers) - 1, -1, -1):
            dY = _layer_backward(cfg.layers[l], P, f"L{l}.", sample.structure, caches[l], dY, grads, extra[b].get(l))
    return loss, grads, logits


# -- fixed-weight models that compute the invariants ------------------------------------


def _invariant_relations(spec) -> list[tuple[str, float]]:
    """Relations (aggregating at the first component) and signs for one invariant."""

    def hop(name: str) -> str:
        return f"converse(power({name},{spec.k}))" if spec.k > 1 else f"converse({name})"

    kind = spec.kind
    if kind == "size":
        return [(hop("r_sym"), 1.0)]
    if kind == "rc":
        return [(hop("rc"), 1.0)]
    if kind == "indeg":
        return [(hop("r_in"), 1.0)]
    if kind == "outdeg":
        return [(hop("r_out"), 1.0)]
    if kind == "dir":
        return [(hop("r_in"), 1.0), (hop("r_out"), -1.0)]
    if kind == "hodir":
        return [(hop(f"lower({spec.n},{spec.i},{spec.j})"), 1.0), (hop(f"lower({spec.n},{spec.j},{spec.i})"), -1.0)]
    if kind == "td":
        return [("converse(coboundary(0,2))", 1.0)]
    raise ValidationError(f"no relation construction for {kind!r}")


def construct_invariant_ssn(spec, T: int, top_dim: int = 2) -> SSNModel:
    """One linear layer with ``+-I`` message weights whose output is the invariant.

    Run it on the activation matrix of an activity complex: carrier rows of
    :meth:`SSNModel.embed` hold the local invariant, and for ``ec`` the
    ``sum`` readout holds the Euler series.
    """
    num_dims = top_dim + 1
    if spec.kind == "ec":
        rels = [(f"id({s})", (-1.0) ** s) for s in range(num_dims)]
        readout_kind = "sum"
    else:
        rels = _invariant_relations(spec)
        readout_kind = "mean"
    layer = LayerConfig(tuple(r for r, _ in rels), T, T, num_dims=num_dims, activation="identity")
    params = {k: np.zeros(shape) for k, shape in layer.param_shapes("L0.").items()}
    for name, sign in rels:
        params[f"L0.rel[{name}].W"] = sign * np.eye(T)
    return SSNModel(ModelConfig((layer,), readout=readout_kind), params)


def run_invariant_ssn(model: SSNModel, dac, spec) -> np.ndarray:
    """Carrier matrix ``(carriers, T)`` (or ``(1, T)`` for ec), rounded to integers."""
    struct = Structure(dac.complex)
    X = dac.matrix.astype(np.float64)
    if spec.kind == "ec":
        out = model.readout(struct, X)[None, :]
    else:
        num_dims = model.config.num_dims
        off = struct.offsets(num_dims)
        d = spec.carrier_dim
        out = model.embed(struct, X)[off[d] : off[d + 1]]
    rounded = np.rint(out)
    if not np.array_equal(rounded, out):
        raise ValidationError("invariant network produced a non-integer count")
    return rounded.astype(np.int64)
