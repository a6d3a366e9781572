"""
Error metrics and the decomposition of the disagreement between two matchings.

The union of two mappings, with shared pairs removed, has maximum degree 2, so
its connected components are cycles and paths. Paths with as many edges of
each mapping are "even paths"; the remaining "odd paths" carry one extra edge
of one mapping and are paired up (+1 with -1) into elementary blocks.
"""
import functools
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import networkx as nx
import numpy as np

from src.errors import DomainError, ShapeError, SizeMismatch, TooLarge
from src.estimators.alignment_estimator import THRESHOLD
from src.synth import PartialMapping

logger = logging.getLogger(__name__)

CYCLE = 'cycle'
EVEN_PATH = 'even-path'
ODD_PATH_PAIR = 'odd-path-pair'

ENUMERATION_LIMIT = 8


@dataclass(frozen=True)
class ElementaryMisalignment:
    kind: str
    u_vertices: tuple
    v_vertices: tuple
    size: int
    m1_pairs: tuple = ()
    m2_pairs: tuple = ()


@dataclass(frozen=True)
class MisalignmentReport:
    errors: int
    false_positives: int = 0
    false_negatives: int = 0
    components: tuple = field(default_factory=tuple)

    def fraction(self, n):
        return self.errors / n if n else 0.0


def count_errors(est, truth):
    """
    Counts the errors of an estimate against the ground truth.

    ml / max-row: number of users u whose estimated partner differs from truth.
    threshold: false negatives plus false positives of the returned relation.
    """
    for u, v in est.pairs:
        if not (0 <= u < truth.n_u and 0 <= v < truth.n_v):
            logger.error(f"Estimated pair {(u, v)} outside the {truth.n_u}x{truth.n_v} instance.")
            raise ShapeError(f"Pair {(u, v)} is out of range for {truth.n_u}x{truth.n_v}.")

    if est.kind == THRESHOLD:
        relation = est.as_set()
        truth_pairs = set(truth.pairs)
        fn = len(truth_pairs - relation)
        fp = len(relation - truth_pairs)
        return MisalignmentReport(errors=fp + fn, false_positives=fp, false_negatives=fn)

    guess = est.as_dict()
    expected = truth.as_dict()
    errors = sum(1 for u in range(truth.n_u) if guess.get(u) != expected.get(u))

    components = ()
    us = [u for u, _ in est.pairs]
    vs = [v for _, v in est.pairs]
    injective = len(set(us)) == len(us) and len(set(vs)) == len(vs)
    if injective and len(est.pairs) == truth.size:
        components = tuple(decompose(truth, PartialMapping(est.pairs, truth.n_u, truth.n_v)))
    return MisalignmentReport(errors=errors, components=components)


def misaligned_users(est, truth):
    """
    Number of users u whose estimated partners are not exactly {truth(u)}.

    Agrees with count_errors for ml / max-row. For a threshold relation it
    counts users rather than pairs, so it never exceeds n_u.
    """
    partners = {}
    for u, v in est.pairs:
        partners.setdefault(u, set()).add(v)
    expected = truth.as_dict()
    wanted = {u: {v} for u, v in expected.items()}
    return sum(1 for u in range(truth.n_u) if partners.get(u, set()) != wanted.get(u, set()))


def _union_graph(m1, m2):
    shared = set(m1.pairs) & set(m2.pairs)
    graph = nx.Graph()
    for label, mapping in (('m1', m1), ('m2', m2)):
        for u, v in mapping.pairs:
            if (u, v) not in shared:
                graph.add_edge(('u', u), ('v', v), source=label)
    return graph


def _describe(graph, nodes):
    sub = graph.subgraph(nodes)
    u_vertices = tuple(sorted(i for side, i in nodes if side == 'u'))
    v_vertices = tuple(sorted(i for side, i in nodes if side == 'v'))
    m1_pairs, m2_pairs = [], []
    for a, b, data in sub.edges(data=True):
        (u, v) = (a[1], b[1]) if a[0] == 'u' else (b[1], a[1])
        (m1_pairs if data['source'] == 'm1' else m2_pairs).append((u, v))
    is_cycle = sub.number_of_edges() == sub.number_of_nodes()
    return u_vertices, v_vertices, tuple(sorted(m1_pairs)), tuple(sorted(m2_pairs)), is_cycle


def decompose(m1, m2):
    """
    Splits the disagreement between two equal-size mappings into elementary misalignments.

    Components are ordered by their smallest u vertex. Odd paths are paired +1
    with -1 in ascending order of their smallest u vertex.
    """
    if m1.size != m2.size:
        logger.error(f"decompose needs equal-size mappings, got {m1.size} and {m2.size}.")
        raise SizeMismatch(f"Mappings have sizes {m1.size} and {m2.size}.")

    graph = _union_graph(m1, m2)
    components, plus_paths, minus_paths = [], [], []
    for nodes in nx.connected_components(graph):
        u_vertices, v_vertices, m1_pairs, m2_pairs, is_cycle = _describe(graph, nodes)
        if is_cycle:
            components.append(ElementaryMisalignment(CYCLE, u_vertices, v_vertices, len(m1_pairs), m1_pairs, m2_pairs))
        elif len(m1_pairs) == len(m2_pairs):
            components.append(ElementaryMisalignment(EVEN_PATH, u_vertices, v_vertices, len(m1_pairs), m1_pairs, m2_pairs))
        elif len(m1_pairs) > len(m2_pairs):
            plus_paths.append((u_vertices, v_vertices, m1_pairs, m2_pairs))
        else:
            minus_paths.append((u_vertices, v_vertices, m1_pairs, m2_pairs))

    plus_paths.sort(key=lambda p: p[0][0])
    minus_paths.sort(key=lambda p: p[0][0])
    if len(plus_paths) != len(minus_paths):
        # equal mapping sizes always balance the odd paths
        raise SizeMismatch("Unbalanced odd paths; the mappings are not of equal size.")
    for plus, minus in zip(plus_paths, minus_paths):
        m1_pairs = tuple(sorted(plus[2] + minus[2]))
        components.append(ElementaryMisalignment(
            ODD_PATH_PAIR,
            tuple(sorted(plus[0] + minus[0])),
            tuple(sorted(plus[1] + minus[1])),
            len(m1_pairs),
            m1_pairs,
            tuple(sorted(plus[3] + minus[3])),
        ))

    components.sort(key=lambda c: c.u_vertices[0])
    return components


def component_theta(component, n_u, n_v, nu, theta=0.5):
    """Θ = ν(θ·m1 + (1-θ)·m2) restricted to the edges of one component."""
    matrix = np.zeros((n_u, n_v))
    for u, v in component.m1_pairs:
        matrix[u, v] += nu * theta
    for u, v in component.m2_pairs:
        matrix[u, v] += nu * (1.0 - theta)
    return matrix


class ElementaryCountBounds(NamedTuple):
    type_i: float
    type_ii: float


def elementary_count_bounds(n, s, delta):
    """Upper bounds on the number of elementary cycles (type I) and even paths (type II) of size delta."""
    if delta < 1:
        logger.error(f"Misalignment size must be >= 1, got {delta}.")
        raise DomainError(f"delta must be >= 1, got {delta}.")
    type_i = 0.0 if delta == 1 else float(n) ** delta / delta
    return ElementaryCountBounds(type_i, float(s) * float(n) ** delta)


def log_misalignment_count_bound(n, s, delta, c):
    if c <= 0 or delta < 1:
        logger.error(f"misalignment_count_bound needs c > 0 and delta >= 1, got c={c}, delta={delta}.")
        raise DomainError(f"Need c > 0 and delta >= 1, got c={c}, delta={delta}.")
    if delta >= c * s:
        return delta * (1.0 + math.log(n) + math.log(1.0 + 1.0 / c))
    return delta * (1.0 + math.log(n * s / delta) + math.log(1.0 + c))


def misalignment_count_bound(n, s, delta, c):
    """Bound on the number of mappings at misalignment size delta from a fixed truth."""
    log_bound = log_misalignment_count_bound(n, s, delta, c)
    try:
        return math.exp(log_bound)
    except OverflowError:
        return math.inf


class MisalignmentCount(NamedTuple):
    total: int
    type_i: int
    type_ii: int
    type_iii: int


@functools.lru_cache(maxsize=None)
def _misalignment_tallies(n, s):
    truth = PartialMapping.identity(n, n + s)
    tallies = {}
    for image in itertools.permutations(range(n + s), n):
        delta = sum(1 for u, v in enumerate(image) if u != v)
        if not delta:
            continue
        total, type_i, type_ii, type_iii = tallies.get(delta, (0, 0, 0, 0))
        total += 1
        components = decompose(truth, PartialMapping(tuple(enumerate(image)), n, n + s))
        if len(components) == 1:
            kind = components[0].kind
            type_i += kind == CYCLE
            type_ii += kind == EVEN_PATH
            type_iii += kind == ODD_PATH_PAIR
        tallies[delta] = (total, type_i, type_ii, type_iii)
    return tallies


def enumerate_misalignments(n, s, delta):
    """
    Exact number of full mappings at misalignment size delta from the identity truth,
    with the number of those forming a single elementary misalignment of each type.
    """
    if n + s > ENUMERATION_LIMIT:
        logger.error(f"Enumeration refused for n+s={n + s} (limit {ENUMERATION_LIMIT}).")
        raise TooLarge(f"Enumeration limited to n+s <= {ENUMERATION_LIMIT}.")
    if delta < 1:
        raise DomainError(f"delta must be >= 1, got {delta}.")
    return MisalignmentCount(*_misalignment_tallies(int(n), int(s)).get(int(delta), (0, 0, 0, 0)))
