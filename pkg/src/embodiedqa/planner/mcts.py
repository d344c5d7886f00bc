"""Monte-Carlo tree search over viewport sequences.

Each tree level picks the next viewport for one agent, agents taking turns.
Rollouts finish the route greedily (nearest viewport that still adds
coverage) and report the route length, the longest agent's action count.
Node values are normalized by the best and worst lengths seen so far, so the
search is unaffected by the scale of the lengths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class MctsNode:
    candidate: int | None  # viewport index chosen at this node (None at the root)
    agent: int | None
    children: list = field(default_factory=list)
    visits: int = 0
    total_length: float = 0.0
    untried: list | None = None

    @property
    def avg_length(self) -> float:
        return self.total_length / self.visits if self.visits else math.inf


def node_value(length: float, l_min: float, l_max: float) -> float:
    """1 at the best length seen, 0 at the worst."""
    if l_max <= l_min:
        return 1.0
    return 1.0 - (length - l_min) / (l_max - l_min)


@dataclass
class Route:
    sequences: list  # per agent: list of candidate indices
    lengths: list  # per agent: action count
    covered: int  # region cells covered
    uncoverable: int  # region cells no candidate sees

    @property
    def length(self) -> float:
        return max(self.lengths) if self.lengths else 0.0


class _Problem:
    """Coverage instance: candidates x region cells plus travel costs."""

    def __init__(self, vis: np.ndarray, cc: np.ndarray, start_costs: np.ndarray):
        self.vis = vis  # (C, R) bool
        # cells x candidates, so that the cells newly covered are a row gather
        self.vis_t = np.ascontiguousarray(vis.T, dtype=np.int32)
        self.cc = cc  # (C, C)
        self.start = start_costs  # (A, C)
        self.gains0 = vis.sum(axis=1).astype(np.int64)
        self.n_agents = start_costs.shape[0]

    def apply(self, gains: np.ndarray, covered: np.ndarray, c: int) -> None:
        new = self.vis[c] & ~covered
        if new.any():
            covered |= new
            gains -= self.vis_t[new].sum(axis=0)

    def cost(self, pos, agent: int) -> np.ndarray:
        return self.start[agent] if pos[agent] is None else self.cc[pos[agent]]


def _greedy_finish(p: _Problem, gains, covered, pos, lengths, seqs) -> None:
    """Complete a route: the least-loaded agent goes to its nearest useful viewport."""
    stuck: set[int] = set()
    while len(stuck) < len(lengths):
        useful = gains > 0
        if not useful.any():
            return
        a = min((i for i in range(len(lengths)) if i not in stuck), key=lambda i: (lengths[i], i))
        cost = np.where(useful, p.cost(pos, a), np.inf)
        best = float(cost.min())
        if not math.isfinite(best):
            # this agent cannot reach anything useful; the others finish
            stuck.add(a)
            continue
        ties = np.nonzero(cost == best)[0]
        c = int(ties[np.argmax(gains[ties])])
        lengths[a] += best
        pos[a] = c
        seqs[a].append(c)
        p.apply(gains, covered, c)


def plan_route_mcts(vis: np.ndarray, cc: np.ndarray, start_costs: np.ndarray, rollouts: int = 200,
                    exploration: float = 1.0, children: int = 8, horizon: int = 3) -> Route:
    """Per-agent viewport sequences covering every coverable region cell.

    ``vis`` is candidates x region cells, ``cc`` the candidate-to-candidate
    action counts and ``start_costs`` the counts from each agent's pose.
    The returned route is the shortest complete rollout the search found.
    """
    p = _Problem(vis, cc, np.atleast_2d(start_costs))
    n_agents = p.n_agents
    coverable = vis.any(axis=0)
    uncoverable = int((~coverable).sum())
    if not coverable.any():
        return Route([[] for _ in range(n_agents)], [0.0] * n_agents, 0, uncoverable)
    depth_limit = max(horizon, n_agents)
    root = MctsNode(None, None)
    best: tuple | None = None
    l_min, l_max = math.inf, -math.inf
    for _ in range(max(1, rollouts)):
        gains = p.gains0.copy()
        covered = np.zeros(vis.shape[1], dtype=bool)
        pos = [None] * n_agents
        lengths = [0.0] * n_agents
        seqs = [[] for _ in range(n_agents)]
        node, path, depth = root, [root], 0

        def take(nd: MctsNode) -> None:
            a, c = nd.agent, nd.candidate
            lengths[a] += float(p.cost(pos, a)[c])
            pos[a] = c
            seqs[a].append(c)
            p.apply(gains, covered, c)

        while True:
            if depth >= depth_limit or not (gains > 0).any():
                break
            agent = depth % n_agents
            if node.untried is None:
                useful = np.nonzero(gains > 0)[0]
                cost = p.cost(pos, agent)[useful]
                ok = np.isfinite(cost)
                useful, cost = useful[ok], cost[ok]
                score = gains[useful] / (cost + 1.0)
                order = useful[np.lexsort((cost, -score))][:children]
                node.untried = [int(c) for c in order]
            if node.untried:
                c = node.untried.pop(0)
                child = MctsNode(c, agent)
                node.children.append(child)
                take(child)
                path.append(child)
                node = child
                depth += 1
                break
            if not node.children:
                break
            log_n = math.log(max(node.visits, 1))

            def uct(ch: MctsNode) -> float:
                return (node_value(ch.avg_length, l_min, l_max)
                        + exploration * math.sqrt(log_n / max(ch.visits, 1)))

            node = max(node.children, key=uct)
            take(node)
            path.append(node)
            depth += 1
        _greedy_finish(p, gains, covered, pos, lengths, seqs)
        length = max(lengths)
        l_min, l_max = min(l_min, length), max(l_max, length)
        for nd in path:
            nd.visits += 1
            nd.total_length += length
        if best is None or length < best[0]:
            best = (length, [list(s) for s in seqs], list(lengths), int(covered.sum()))
    length, seqs, lengths, n_cov = best
    return Route(seqs, lengths, n_cov, uncoverable)
