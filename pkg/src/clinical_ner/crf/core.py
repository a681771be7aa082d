from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from clinical_ner.corpus.models import NUM_TAGS, Position, split_positional_code
from clinical_ner.nn.autodiff import ShapeError


def start_state(num_tags: int) -> int:
    return num_tags


def end_state(num_tags: int) -> int:
    return num_tags + 1


def new_transition_matrix(num_tags: int = NUM_TAGS) -> np.ndarray:
    """Zero (K+2) x (K+2) transition scores; row/column K is START and K+1 is END."""
    return np.zeros((num_tags + 2, num_tags + 2))


@dataclass(frozen=True, slots=True)
class TagPath:
    tags: tuple[int, ...]
    score: float

    def __len__(self) -> int:
        return len(self.tags)


@dataclass(frozen=True, slots=True)
class CrfMarginals:
    """Posterior unary marginals (T x K), expected tag-to-tag counts (K x K) and log Z."""

    unary: np.ndarray
    pairwise: np.ndarray
    log_z: float


def _check(em: np.ndarray, transitions: np.ndarray) -> int:
    if em.ndim != 2:
        raise ShapeError(f"Emission scores must be a (T, K) matrix, got shape {em.shape}")
    num_tags = em.shape[1]
    if transitions.shape != (num_tags + 2, num_tags + 2):
        raise ShapeError(
            f"Transition matrix has shape {transitions.shape}, expected {(num_tags + 2, num_tags + 2)}"
        )
    return num_tags


def _check_path(path: Sequence[int], length: int, num_tags: int) -> None:
    if len(path) != length:
        raise ShapeError(f"Tag path has length {len(path)}, expected {length}")
    for code in path:
        if not 0 <= code < num_tags:
            raise ValueError(f"Tag code out of range: {code}")


def sequence_score(em: np.ndarray, transitions: np.ndarray, path: Sequence[int]) -> float:
    num_tags = _check(em, transitions)
    _check_path(path, em.shape[0], num_tags)
    if not path:
        return float(transitions[start_state(num_tags), end_state(num_tags)])
    # Accumulated in the same order as the forward recursion.
    score = transitions[start_state(num_tags), path[0]] + em[0, path[0]]
    for t in range(1, len(path)):
        score = score + transitions[path[t - 1], path[t]]
        score = score + em[t, path[t]]
    return float(score + transitions[path[-1], end_state(num_tags)])


def _forward_table(em: np.ndarray, transitions: np.ndarray) -> np.ndarray:
    num_tags = em.shape[1]
    inner = transitions[:num_tags, :num_tags]
    alpha = np.empty_like(em)
    alpha[0] = transitions[start_state(num_tags), :num_tags] + em[0]
    for t in range(1, em.shape[0]):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + inner, axis=0) + em[t]
    return alpha


def _backward_table(em: np.ndarray, transitions: np.ndarray) -> np.ndarray:
    num_tags = em.shape[1]
    inner = transitions[:num_tags, :num_tags]
    beta = np.empty_like(em)
    beta[-1] = transitions[:num_tags, end_state(num_tags)]
    for t in range(em.shape[0] - 2, -1, -1):
        beta[t] = logsumexp(inner + (em[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def forward_logZ(em: np.ndarray, transitions: np.ndarray) -> float:
    num_tags = _check(em, transitions)
    if em.shape[0] == 0:
        raise ValueError("forward_logZ needs at least one position")
    alpha = _forward_table(em, transitions)
    return float(logsumexp(alpha[-1] + transitions[:num_tags, end_state(num_tags)]))


def crf_marginals(em: np.ndarray, transitions: np.ndarray) -> CrfMarginals:
    num_tags = _check(em, transitions)
    if em.shape[0] == 0:
        raise ValueError("crf_marginals needs at least one position")
    alpha = _forward_table(em, transitions)
    beta = _backward_table(em, transitions)
    log_z = float(logsumexp(alpha[-1] + transitions[:num_tags, end_state(num_tags)]))
    unary = np.exp(alpha + beta - log_z)
    inner = transitions[:num_tags, :num_tags]
    pairwise = np.zeros((num_tags, num_tags))
    for t in range(1, em.shape[0]):
        pairwise += np.exp(alpha[t - 1][:, None] + inner + (em[t] + beta[t])[None, :] - log_z)
    return CrfMarginals(unary=unary, pairwise=pairwise, log_z=log_z)


def crf_nll(em: np.ndarray, transitions: np.ndarray, gold: Sequence[int]) -> float:
    """Negative log-likelihood of the gold path: log Z minus the gold path score."""
    return forward_logZ(em, transitions) - sequence_score(em, transitions, gold)


def crf_nll_and_grad(
    em: np.ndarray, transitions: np.ndarray, gold: Sequence[int]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss plus gradients wrt emissions (marginals minus gold indicators) and transitions."""
    num_tags = _check(em, transitions)
    _check_path(gold, em.shape[0], num_tags)
    marginals = crf_marginals(em, transitions)
    loss = marginals.log_z - sequence_score(em, transitions, gold)

    gold_arr = np.asarray(gold, dtype=np.int64)
    steps = np.arange(len(gold_arr))
    d_em = marginals.unary.copy()
    d_em[steps, gold_arr] -= 1.0

    start, end = start_state(num_tags), end_state(num_tags)
    d_transitions = np.zeros_like(transitions)
    d_transitions[:num_tags, :num_tags] = marginals.pairwise
    np.add.at(d_transitions, (gold_arr[:-1], gold_arr[1:]), -1.0)
    d_transitions[start, :num_tags] = marginals.unary[0]
    d_transitions[start, gold_arr[0]] -= 1.0
    d_transitions[:num_tags, end] = marginals.unary[-1]
    d_transitions[gold_arr[-1], end] -= 1.0
    return loss, d_em, d_transitions


def viterbi_decode(
    em: np.ndarray, transitions: np.ndarray, allowed: Optional[np.ndarray] = None
) -> TagPath:
    """
    Exact argmax path including START/END transitions; ties go to the lower tag code.

    When an allowed-transition mask is given, disallowed transitions score -inf.
    """
    num_tags = _check(em, transitions)
    if allowed is not None:
        if allowed.shape != transitions.shape:
            raise ShapeError(f"Transition mask has shape {allowed.shape}, expected {transitions.shape}")
        transitions = np.where(allowed, transitions, -np.inf)
    steps = em.shape[0]
    if steps == 0:
        return TagPath(tags=(), score=0.0)

    inner = transitions[:num_tags, :num_tags]
    delta = transitions[start_state(num_tags), :num_tags] + em[0]
    backpointers = np.zeros((steps, num_tags), dtype=np.int64)
    for t in range(1, steps):
        candidates = delta[:, None] + inner
        backpointers[t] = np.argmax(candidates, axis=0)
        delta = candidates[backpointers[t], np.arange(num_tags)] + em[t]

    last = int(np.argmax(delta + transitions[:num_tags, end_state(num_tags)]))
    path = [last]
    for t in range(steps - 1, 0, -1):
        path.append(int(backpointers[t, path[-1]]))
    path.reverse()
    return TagPath(tags=tuple(path), score=sequence_score(em, transitions, path))


def bieos_transition_mask(num_tags: int = NUM_TAGS) -> np.ndarray:
    """Allowed BIEOS transitions over the 21-code tag layout, including START and END."""
    if num_tags != NUM_TAGS:
        raise ValueError(f"BIEOS mask is defined for {NUM_TAGS} tags, got {num_tags}")
    start, end = start_state(num_tags), end_state(num_tags)
    allowed = np.zeros((num_tags + 2, num_tags + 2), dtype=bool)
    decoded = [split_positional_code(code) for code in range(num_tags)]

    def may_open(code: int) -> bool:
        position = decoded[code][0]
        return position in (None, Position.BEGIN, Position.SINGLE)

    def closes(code: int) -> bool:
        position = decoded[code][0]
        return position in (None, Position.END, Position.SINGLE)

    for to_code in range(num_tags):
        allowed[start, to_code] = may_open(to_code)
    for from_code in range(num_tags):
        allowed[from_code, end] = closes(from_code)
        from_type = decoded[from_code][1]
        for to_code in range(num_tags):
            to_position, to_type = decoded[to_code]
            if closes(from_code):
                allowed[from_code, to_code] = may_open(to_code)
            else:
                allowed[from_code, to_code] = (
                    to_position in (Position.INSIDE, Position.END) and to_type is from_type
                )
    return allowed
