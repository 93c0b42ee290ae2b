"""Discrete Bayesian networks over discretized features.

Covers the independent-marginals baseline, Chow-Liu trees, PrivBayes and
edge-level debiasing. Continuous and wide integer features are quantile
binned; generated bins are dequantized uniformly within the bin.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .. import _kernels
from ..data import Dataset, Metadata, Schema
from ..data.transforms import DiscretizationMap, discretize
from ..errors import ConfigError, ParameterError, UnknownFeatureError
from ..numeric.divergences import entropy_bits, mutual_information_codes
from ..numeric.dp import exponential_mechanism, laplace_sample
from .base import GeneratorModel, Plugin, PluginDescriptor, register

FTU = "ftu"
DEMOGRAPHIC_PARITY = "demographic_parity"


@dataclass
class BayesNet:
    """Discrete network; ``cpts[v]`` has one row per parent configuration (mixed radix, last parent fastest)."""

    names: list
    cards: list
    parents: list
    order: list
    cpts: list
    marginals: list

    # -- structure
    def is_tree(self) -> bool:
        return all(len(p) <= 1 for p in self.parents)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v in range(len(self.names)) for p in self.parents[v]]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownFeatureError(f"{name!r} is not a node of the network") from None

    def children(self, v: int) -> list[int]:
        return [c for c in range(len(self.names)) if v in self.parents[c]]

    def config_index(self, v: int, codes: np.ndarray) -> np.ndarray:
        idx = np.zeros(codes.shape[0], dtype=np.int64)
        for p in self.parents[v]:
            idx = idx * self.cards[p] + codes[:, p]
        return idx

    def check(self, tol: float = 1e-9) -> None:
        seen = set()
        for v in self.order:
            if any(p not in seen for p in self.parents[v]):
                raise ValueError("order is not topological (or graph is cyclic)")
            seen.add(v)
        if seen != set(range(len(self.names))) or len(self.order) != len(self.names):
            raise ValueError("every feature must appear exactly once")
        for v, cpt in enumerate(self.cpts):
            rows = math.prod(self.cards[p] for p in self.parents[v])
            if cpt.shape != (rows, self.cards[v]):
                raise ValueError(f"CPT of {self.names[v]!r} has shape {cpt.shape}")
            if np.any(cpt < 0) or not np.allclose(cpt.sum(axis=1), 1.0, atol=tol):
                raise ValueError(f"CPT rows of {self.names[v]!r} do not sum to 1")

    # -- sampling
    def sample(self, n: int, rng: np.random.Generator, evidence: dict | None = None) -> np.ndarray:
        """Ancestral sampling; evidence maps node index -> code.

        On trees evidence is propagated upward first, so draws follow the
        exact conditional distribution. On general DAGs evidence nodes are
        clamped, which satisfies the constraint but ignores its effect on
        ancestors.
        """
        evidence = evidence or {}
        d = len(self.names)
        codes = np.zeros((n, d), dtype=np.int64)
        if n == 0:
            return codes
        lam = self._upward(evidence) if evidence and self.is_tree() else None
        for v in self.order:
            if v in evidence and lam is None:
                codes[:, v] = evidence[v]
                continue
            table = self.cpts[v]
            if lam is not None:
                table = table * lam[v][None, :]
                sums = table.sum(axis=1, keepdims=True)
                table = np.divide(table, sums, out=np.full_like(table, 1.0 / table.shape[1]), where=sums > 0)
            cum = np.cumsum(table, axis=1)
            cum[:, -1] = 1.0
            rows = self.config_index(v, codes)
            codes[:, v] = _kernels.sample_categorical(np.ascontiguousarray(cum), rows, rng.random(n))
        return codes

    def _upward(self, evidence: dict) -> list[np.ndarray]:
        """Per-node likelihood of the evidence below and at the node (trees only)."""
        lam = [np.ones(c) for c in self.cards]
        for v, code in evidence.items():
            ind = np.zeros(self.cards[v])
            ind[code] = 1.0
            lam[v] = ind
        for v in reversed(self.order):
            if self.parents[v]:
                p = self.parents[v][0]
                msg = self.cpts[v] @ lam[v]
                lam[p] = lam[p] * (msg / msg.max() if msg.max() > 0 else msg)
        return lam

    def propagate_marginals(self) -> list[np.ndarray]:
        """Node marginals by forward propagation (exact on trees; parents treated as independent otherwise)."""
        marg: list = [None] * len(self.names)
        for v in self.order:
            ps = self.parents[v]
            if not ps:
                m = self.cpts[v][0].copy()
            else:
                w = np.ones(1)
                for p in ps:
                    w = np.outer(w, marg[p]).reshape(-1)
                m = w @ self.cpts[v]
            marg[v] = m / m.sum()
        return marg

    # -- state
    def to_state(self) -> dict:
        return {"names": list(self.names), "cards": [int(c) for c in self.cards],
                "parents": [[int(p) for p in ps] for ps in self.parents], "order": [int(v) for v in self.order],
                "cpts": list(self.cpts), "marginals": list(self.marginals)}

    @classmethod
    def from_state(cls, s: dict) -> BayesNet:
        return cls(list(s["names"]), [int(c) for c in s["cards"]], [list(map(int, p)) for p in s["parents"]],
                   [int(v) for v in s["order"]], [np.asarray(c, dtype=np.float64) for c in s["cpts"]],
                   [np.asarray(m, dtype=np.float64) for m in s["marginals"]])


# -- estimation

def encode_codes(ds: Dataset, bins: int) -> tuple[np.ndarray, list[int], DiscretizationMap]:
    _, dmap = discretize(ds, bins)
    cols = dmap.codes(ds)
    names = list(dmap.features)
    codes = np.column_stack([cols[n] for n in names]) if names else np.zeros((ds.n_rows, 0), dtype=np.int64)
    cards = [dmap.features[n].n_bins for n in names]
    return codes.astype(np.int64), cards, dmap


def joint_codes(codes: np.ndarray, cols, cards) -> tuple[np.ndarray, int]:
    idx = np.zeros(codes.shape[0], dtype=np.int64)
    k = 1
    for c in cols:
        idx = idx * cards[c] + codes[:, c]
        k *= cards[c]
    return idx, k


def count_table(codes, v, parents, cards) -> np.ndarray:
    cfg, k = joint_codes(codes, parents, cards)
    return _kernels.contingency(cfg, codes[:, v], k, cards[v]).astype(np.float64)


def normalize_rows(counts: np.ndarray, smoothing: float) -> np.ndarray:
    t = counts + smoothing
    sums = t.sum(axis=1, keepdims=True)
    return np.divide(t, sums, out=np.full_like(t, 1.0 / t.shape[1]), where=sums > 0)


def pairwise_mi(codes: np.ndarray, cards) -> np.ndarray:
    d = codes.shape[1]
    mi = np.zeros((d, d))
    for i, j in itertools.combinations(range(d), 2):
        mi[i, j] = mi[j, i] = mutual_information_codes(codes[:, i], codes[:, j], cards[i], cards[j])
    return mi


def maximum_spanning_tree(weights: np.ndarray) -> list[tuple[int, int]]:
    """Prim's algorithm on a dense symmetric weight matrix; ties go to the lowest index."""
    d = weights.shape[0]
    if d <= 1:
        return []
    in_tree = np.zeros(d, dtype=bool)
    in_tree[0] = True
    best = weights[0].astype(np.float64).copy()
    link = np.zeros(d, dtype=np.int64)
    edges = []
    for _ in range(d - 1):
        cand = np.where(in_tree, -np.inf, best)
        v = int(np.argmax(cand))
        edges.append((int(link[v]), v))
        in_tree[v] = True
        better = (~in_tree) & (weights[v] > best)
        best = np.where(better, weights[v], best)
        link = np.where(better, v, link)
    return edges


def orient_tree(d: int, edges, root: int) -> tuple[list[list[int]], list[int]]:
    adj = {v: [] for v in range(d)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parents = [[] for _ in range(d)]
    order, seen = [], set()
    # forests: each further component is rooted at its lowest index
    for start in [root] + list(range(d)):
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    parents[w] = [v]
                    queue.append(w)
    return parents, order


def chow_liu(codes: np.ndarray, cards, root: int | None = None) -> tuple[list[list[int]], list[int], np.ndarray]:
    """Maximum-MI spanning tree rooted at ``root`` (default: highest-entropy feature)."""
    d = codes.shape[1]
    mi = pairwise_mi(codes, cards)
    edges = maximum_spanning_tree(mi)
    if root is None:
        ent = [entropy_bits(codes[:, v], cards[v]) for v in range(d)]
        root = int(np.argmax(ent)) if d else 0
    parents, order = orient_tree(d, edges, root)
    return parents, order, mi


def fit_network(codes, cards, names, parents, order, smoothing: float) -> BayesNet:
    cpts = [normalize_rows(count_table(codes, v, parents[v], cards), smoothing) for v in range(len(names))]
    net = BayesNet(list(names), list(cards), parents, order, cpts, [])
    net.marginals = net.propagate_marginals()
    return net


# -- PrivBayes

def mi_sensitivity(n: int, binary: bool) -> float:
    """Sensitivity of plug-in mutual information (bits) to one changed row, from the PrivBayes analysis."""
    if n <= 1:
        return 1.0
    if binary:
        return math.log2(n) / n + (n - 1) / n * math.log2(n / (n - 1))
    return 2.0 / n * math.log2((n + 1) / 2) + (n - 1) / n * math.log2((n + 1) / (n - 1))


def greedy_candidates(codes, cards, placed, max_parents):
    k = min(max_parents, len(placed))
    cands, scores, binary = [], [], []
    for x in range(codes.shape[1]):
        if x in placed:
            continue
        for combo in itertools.combinations(sorted(placed), k):
            cfg, kc = joint_codes(codes, combo, cards)
            cands.append((x, combo))
            scores.append(mutual_information_codes(codes[:, x], cfg, cards[x], kc))
            binary.append(cards[x] <= 2 or kc <= 2)
    return cands, np.asarray(scores), binary


def greedy_structure(codes, cards, max_parents: int, first: int, choose=None):
    """Greedy network construction; ``choose(cands, scores, binary)`` picks a candidate (default argmax)."""
    d = codes.shape[1]
    parents = [[] for _ in range(d)]
    order, placed = [first], {first}
    while len(order) < d:
        cands, scores, binary = greedy_candidates(codes, cards, placed, max_parents)
        if choose is None:
            x, combo = cands[int(np.argmax(scores))]
        else:
            x, combo = choose(cands, scores, binary)
        parents[x] = list(combo)
        order.append(x)
        placed.add(x)
    return parents, order


def noisy_tables(codes, cards, parents, scale: float, smoothing: float, rng) -> list[np.ndarray]:
    """Laplace-perturbed normalized joint counts turned into CPTs (clamp, rescale, smooth)."""
    n = codes.shape[0]
    cpts = []
    for v in range(codes.shape[1]):
        joint = count_table(codes, v, parents[v], cards) / max(n, 1)
        noisy = joint + laplace_sample(scale, rng, joint.shape)
        pseudo = np.clip(noisy, 0.0, None) * n
        cpts.append(normalize_rows(pseudo, smoothing))
    return cpts


# -- debiasing

def _reroot(net: BayesNet, root: int) -> BayesNet:
    """Equivalent tree network oriented away from ``root``."""
    d = len(net.names)
    edges = net.edges()
    new_parents, new_order = orient_tree(d, edges, root)
    marg = net.propagate_marginals()
    cpts = list(net.cpts)
    for v in range(d):
        if new_parents[v] == net.parents[v]:
            continue
        if not new_parents[v]:
            cpts[v] = marg[v][None, :].copy()
            continue
        p = new_parents[v][0]
        # edge was v -> p originally: invert with Bayes' rule
        joint = marg[v][:, None] * net.cpts[p]
        cpts[v] = normalize_rows(joint.T, 0.0)
    out = BayesNet(list(net.names), list(net.cards), new_parents, new_order, cpts, marg)
    return out


def _cut(net: BayesNet, parent: int, child: int) -> None:
    """Remove parent -> child, marginalizing the parent out of the child's CPT by its marginal."""
    ps = net.parents[child]
    pos = ps.index(parent)
    shape = [net.cards[p] for p in ps] + [net.cards[child]]
    table = net.cpts[child].reshape(shape)
    table = np.tensordot(net.marginals[parent], table, axes=([0], [pos]))
    rest = [p for p in ps if p != parent]
    net.parents[child] = rest
    net.cpts[child] = table.reshape(-1, net.cards[child])


def _descendants(net: BayesNet, v: int) -> set[int]:
    out, stack = set(), [v]
    while stack:
        for c in net.children(stack.pop()):
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def debias_network(net: BayesNet, protected: str, outcome: str, criterion: str) -> tuple[BayesNet, list]:
    """Return a debiased copy and the removed (parent, child) name pairs.

    ``ftu`` removes a direct protected-outcome edge; ``demographic_parity``
    cuts every directed path from protected to outcome at the edge nearest
    the outcome. Tree networks are first re-rooted at the protected feature
    (an equivalent model) so every dependence path is directed.
    """
    if criterion not in (FTU, DEMOGRAPHIC_PARITY):
        raise ConfigError(f"unknown fairness criterion {criterion!r}")
    a, o = net.index(protected), net.index(outcome)
    net = BayesNet(list(net.names), list(net.cards), [list(p) for p in net.parents], list(net.order),
                   [c.copy() for c in net.cpts], [m.copy() for m in net.propagate_marginals()])
    adjacent = a in net.parents[o] or o in net.parents[a]
    if net.is_tree() and (criterion == DEMOGRAPHIC_PARITY or adjacent):
        if not (criterion == FTU and a in net.parents[o]):
            net = _reroot(net, a)
    removed = []
    if criterion == FTU:
        if a in net.parents[o]:
            _cut(net, a, o)
            removed.append((protected, outcome))
    else:
        upstream = _descendants(net, a) | {a}
        for p in list(net.parents[o]):
            if p in upstream:
                _cut(net, p, o)
                removed.append((net.names[p], outcome))
    net.check()
    return net, removed


# -- plugins

class _DiscretePlugin(Plugin):
    """Shared generation for plugins whose state is a discretized network."""

    def network(self, state) -> BayesNet:
        return BayesNet.from_state(state["net"])

    def generate_data(self, state, count, evidence, rng):
        schema = Schema.from_dict(state["schema"])
        dmap = DiscretizationMap.from_dict(state["disc"])
        net = self.network(state)
        ev_codes = {}
        for name, value in evidence.items():
            ev_codes[net.index(name)] = int(dmap.features[name].codes(np.asarray([value]))[0])
        codes = net.sample(count, rng, ev_codes)
        values = dmap.inverse({n: codes[:, i] for i, n in enumerate(net.names)}, rng)
        for name, value in evidence.items():  # integer evidence inside a wide bin
            values[name] = np.full(count, value, dtype=object if isinstance(value, str) else None)
        return Dataset(schema, values)

    def _check_common(self, config):
        if int(config["bins"]) < 1:
            raise ConfigError("bins must be a positive integer")
        if float(config.get("smoothing", 0.0)) < 0:
            raise ConfigError("smoothing must be non-negative")


@register
class MarginalPlugin(_DiscretePlugin):
    """Independent per-feature marginals (empirical frequencies / quantile histograms)."""

    descriptor = PluginDescriptor("marginal", frozenset({"static", "survival"}), conditional=True)
    defaults = {"bins": 20}

    def validate_config(self, config):
        self._check_common(config)

    def fit_state(self, data, metadata, config, rng):
        codes, cards, dmap = encode_codes(data, int(config["bins"]))
        names = list(dmap.features)
        d = len(names)
        net = fit_network(codes, cards, names, [[] for _ in range(d)], list(range(d)), 0.0)
        return {"schema": data.schema.to_dict(), "disc": dmap.to_dict(), "net": net.to_state()}


@register
class BayesNetPlugin(_DiscretePlugin):
    """Chow-Liu tree over discretized features with additive smoothing."""

    descriptor = PluginDescriptor("bayes_net", frozenset({"static", "survival"}), conditional=True, debias=True)
    defaults = {"bins": 10, "smoothing": 1.0, "root": None}

    def validate_config(self, config):
        self._check_common(config)

    def fit_state(self, data, metadata, config, rng):
        codes, cards, dmap = encode_codes(data, int(config["bins"]))
        names = list(dmap.features)
        root = None
        if config["root"] is not None:
            if config["root"] not in names:
                raise UnknownFeatureError(f"root {config['root']!r} is not a feature")
            root = names.index(config["root"])
        parents, order, _ = chow_liu(codes, cards, root)
        net = fit_network(codes, cards, names, parents, order, float(config["smoothing"]))
        return {"schema": data.schema.to_dict(), "disc": dmap.to_dict(), "net": net.to_state()}


@register
class PrivBayesPlugin(_DiscretePlugin):
    """Differentially private greedy network (exponential mechanism + Laplace-noised tables)."""

    descriptor = PluginDescriptor("privbayes", frozenset({"static", "survival"}), conditional=True, dp=True,
                                  debias=True)
    defaults = {"epsilon": 1.0, "bins": 10, "max_parents": 2, "smoothing": 1.0, "structure_share": 0.5}

    def validate_config(self, config):
        self._check_common(config)
        try:
            eps = float(config["epsilon"])
        except (TypeError, ValueError):
            raise ConfigError("epsilon must be a number") from None
        if not eps > 0 or not math.isfinite(eps):
            raise ParameterError(f"epsilon must be positive, got {config['epsilon']}")
        if not 0 < float(config["structure_share"]) < 1:
            raise ConfigError("structure_share must lie in (0, 1)")
        if int(config["max_parents"]) < 1:
            raise ConfigError("max_parents must be at least 1")

    def dp_budget(self, config):
        return budget_split(float(config["epsilon"]), float(config["structure_share"]))

    def fit_state(self, data, metadata, config, rng):
        codes, cards, dmap = encode_codes(data, int(config["bins"]))
        names = list(dmap.features)
        d, n = len(names), codes.shape[0]
        budget = budget_split(float(config["epsilon"]), float(config["structure_share"]))
        first = int(rng.integers(d)) if d else 0
        step_eps = budget["epsilon_structure"] / max(d - 1, 1)

        def choose(cands, scores, binary):
            sens = max(mi_sensitivity(n, b) for b in binary)
            return exponential_mechanism(cands, scores, step_eps, sens, rng)

        parents, order = greedy_structure(codes, cards, int(config["max_parents"]), first, choose) if d else ([], [])
        scale = 2.0 * d / (max(n, 1) * budget["epsilon_parameters"])
        cpts = noisy_tables(codes, cards, parents, scale, float(config["smoothing"]), rng)
        net = BayesNet(names, cards, parents, order, cpts, [])
        net.marginals = net.propagate_marginals()
        return {"schema": data.schema.to_dict(), "disc": dmap.to_dict(), "net": net.to_state(),
                "noise_scale": scale}


def budget_split(epsilon: float, structure_share: float = 0.5) -> dict:
    eps_s = epsilon * structure_share
    return {"epsilon_total": epsilon, "epsilon_structure": eps_s, "epsilon_parameters": epsilon - eps_s}


def debias_edges(model: GeneratorModel, protected: str, outcome: str, criterion: str = DEMOGRAPHIC_PARITY
                 ) -> GeneratorModel:
    """Debiased copy of a fitted ``bayes_net`` or ``privbayes`` model (post-processing; DP budget unchanged)."""
    if model.plugin not in ("bayes_net", "privbayes"):
        raise ConfigError(f"debiasing needs a Bayesian-network model, got {model.plugin!r}")
    net, removed = debias_network(BayesNet.from_state(model.state["net"]), protected, outcome, criterion)
    state = dict(model.state)
    state["net"] = net.to_state()
    state["debiased"] = list(model.state.get("debiased", [])) + [
        {"protected": protected, "outcome": outcome, "criterion": criterion,
         "removed": [list(e) for e in removed]}]
    return replace(model, state=state)


def network_of(model: GeneratorModel) -> BayesNet:
    return BayesNet.from_state(model.state["net"])
