import itertools
import unittest

import numpy as np
from scipy.special import logsumexp

from clinical_ner.corpus import Tag, is_valid_sequence
from clinical_ner.crf import (
    bieos_transition_mask,
    crf_loss,
    crf_marginals,
    crf_nll,
    crf_nll_and_grad,
    forward_logZ,
    new_transition_matrix,
    sequence_score,
    viterbi_decode,
)
from clinical_ner.crf.core import end_state, start_state
from clinical_ner.nn import Parameter, ShapeError, Tape, Variable

STEP = 1e-5


def random_problem(rng: np.random.Generator, steps: int, num_tags: int) -> tuple[np.ndarray, np.ndarray]:
    return rng.normal(size=(steps, num_tags)), rng.normal(size=(num_tags + 2, num_tags + 2))


def all_paths(steps: int, num_tags: int):
    return itertools.product(range(num_tags), repeat=steps)


class ScoreTests(unittest.TestCase):
    def test_sequence_score_by_hand(self) -> None:
        em = np.array([[1.0, 2.0], [3.0, 4.0]])
        transitions = np.arange(16.0).reshape(4, 4)
        # START(2)->1, 1->0, 0->END(3)
        expected = transitions[2, 1] + em[0, 1] + transitions[1, 0] + em[1, 0] + transitions[0, 3]
        self.assertAlmostEqual(sequence_score(em, transitions, [1, 0]), expected)

    def test_empty_path_is_start_to_end(self) -> None:
        transitions = new_transition_matrix(3)
        transitions[start_state(3), end_state(3)] = 1.5
        self.assertEqual(sequence_score(np.zeros((0, 3)), transitions, []), 1.5)

    def test_shape_checks(self) -> None:
        with self.assertRaises(ShapeError):
            sequence_score(np.zeros((2, 3)), np.zeros((4, 4)), [0, 0])
        with self.assertRaises(ShapeError):
            sequence_score(np.zeros((2, 3)), np.zeros((5, 5)), [0])
        with self.assertRaises(ValueError):
            sequence_score(np.zeros((2, 3)), np.zeros((5, 5)), [0, 3])

    def test_new_transition_matrix_shape(self) -> None:
        self.assertEqual(new_transition_matrix().shape, (23, 23))


class PartitionTests(unittest.TestCase):
    def test_log_z_matches_brute_force(self) -> None:
        rng = np.random.default_rng(0)
        for steps, num_tags in ((1, 3), (3, 3), (4, 2), (2, 4)):
            em, transitions = random_problem(rng, steps, num_tags)
            scores = [sequence_score(em, transitions, path) for path in all_paths(steps, num_tags)]
            self.assertAlmostEqual(forward_logZ(em, transitions), float(logsumexp(scores)), places=10)

    def test_single_tag_loss_is_zero(self) -> None:
        rng = np.random.default_rng(1)
        em, transitions = random_problem(rng, 6, 1)
        self.assertAlmostEqual(crf_nll(em, transitions, [0] * 6), 0.0, places=12)

    def test_loss_is_non_negative(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(20):
            em, transitions = random_problem(rng, 4, 3)
            gold = rng.integers(3, size=4).tolist()
            self.assertGreaterEqual(crf_nll(em, transitions, gold), -1e-12)

    def test_uniform_scores_give_log_k_per_position(self) -> None:
        em = np.zeros((5, 21))
        self.assertAlmostEqual(crf_nll(em, new_transition_matrix(), [0] * 5), 5 * np.log(21), places=10)

    def test_empty_sentence_is_rejected(self) -> None:
        with self.assertRaises(ValueError):
            forward_logZ(np.zeros((0, 3)), new_transition_matrix(3))

    def test_marginals_are_distributions(self) -> None:
        rng = np.random.default_rng(3)
        em, transitions = random_problem(rng, 5, 4)
        marginals = crf_marginals(em, transitions)
        np.testing.assert_allclose(marginals.unary.sum(axis=1), np.ones(5))
        self.assertAlmostEqual(marginals.pairwise.sum(), 4.0)
        self.assertAlmostEqual(marginals.log_z, forward_logZ(em, transitions))

    def test_marginals_match_brute_force(self) -> None:
        rng = np.random.default_rng(4)
        em, transitions = random_problem(rng, 3, 3)
        log_z = forward_logZ(em, transitions)
        expected = np.zeros((3, 3))
        for path in all_paths(3, 3):
            weight = np.exp(sequence_score(em, transitions, path) - log_z)
            for t, code in enumerate(path):
                expected[t, code] += weight
        np.testing.assert_allclose(crf_marginals(em, transitions).unary, expected, atol=1e-10)


class GradientTests(unittest.TestCase):
    def test_gradients_match_finite_differences(self) -> None:
        rng = np.random.default_rng(5)
        em, transitions = random_problem(rng, 4, 3)
        gold = [2, 0, 0, 1]
        loss, d_em, d_transitions = crf_nll_and_grad(em, transitions, gold)
        self.assertAlmostEqual(loss, crf_nll(em, transitions, gold))

        for array, analytic in ((em, d_em), (transitions, d_transitions)):
            numeric = np.zeros_like(array)
            for index in np.ndindex(array.shape):
                original = array[index]
                array[index] = original + STEP
                plus = crf_nll(em, transitions, gold)
                array[index] = original - STEP
                minus = crf_nll(em, transitions, gold)
                array[index] = original
                numeric[index] = (plus - minus) / (2 * STEP)
            np.testing.assert_allclose(analytic, numeric, atol=1e-6)

    def test_emission_gradient_rows_sum_to_zero(self) -> None:
        rng = np.random.default_rng(6)
        em, transitions = random_problem(rng, 5, 4)
        _, d_em, _ = crf_nll_and_grad(em, transitions, [0, 1, 2, 3, 0])
        np.testing.assert_allclose(d_em.sum(axis=1), np.zeros(5), atol=1e-12)

    def test_tape_op_scales_upstream_gradient(self) -> None:
        rng = np.random.default_rng(7)
        em, transitions = random_problem(rng, 3, 3)
        gold = [0, 1, 2]
        _, d_em, d_transitions = crf_nll_and_grad(em, transitions, gold)

        tape = Tape()
        emissions = Variable(em)
        transition_param = Parameter("transitions", transitions.copy())
        loss = crf_loss(tape, emissions, transition_param, gold)
        tape.backward(loss)
        np.testing.assert_allclose(emissions.grad, d_em)
        np.testing.assert_allclose(transition_param.grad, d_transitions)


class ViterbiTests(unittest.TestCase):
    def test_matches_brute_force(self) -> None:
        rng = np.random.default_rng(8)
        for steps, num_tags in ((1, 4), (3, 3), (5, 2), (4, 4)):
            em, transitions = random_problem(rng, steps, num_tags)
            best = max(all_paths(steps, num_tags), key=lambda path: sequence_score(em, transitions, path))
            decoded = viterbi_decode(em, transitions)
            self.assertEqual(decoded.tags, tuple(best))
            self.assertAlmostEqual(decoded.score, sequence_score(em, transitions, best), places=12)

    def test_ties_go_to_lowest_code(self) -> None:
        decoded = viterbi_decode(np.zeros((3, 4)), new_transition_matrix(4))
        self.assertEqual(decoded.tags, (0, 0, 0))
        self.assertEqual(decoded.score, 0.0)

    def test_empty_sentence(self) -> None:
        decoded = viterbi_decode(np.zeros((0, 21)), new_transition_matrix())
        self.assertEqual(decoded.tags, ())
        self.assertEqual(len(decoded), 0)

    def test_emissions_dominate_with_zero_transitions(self) -> None:
        em = np.array([[0.0, 5.0, 0.0], [0.0, 0.0, 5.0]])
        self.assertEqual(viterbi_decode(em, new_transition_matrix(3)).tags, (1, 2))


class TransitionMaskTests(unittest.TestCase):
    def setUp(self) -> None:
        self.mask = bieos_transition_mask()
        self.start = start_state(21)
        self.end = end_state(21)

    def code(self, text: str) -> int:
        return Tag.parse(text).code

    def test_specific_transitions(self) -> None:
        mask, code = self.mask, self.code
        self.assertTrue(mask[self.start, code("O")])
        self.assertTrue(mask[self.start, code("B-d")])
        self.assertFalse(mask[self.start, code("I-d")])
        self.assertFalse(mask[self.start, code("E-b")])
        self.assertTrue(mask[code("B-d"), code("I-d")])
        self.assertTrue(mask[code("B-d"), code("E-d")])
        self.assertFalse(mask[code("B-d"), code("E-s")])
        self.assertFalse(mask[code("B-d"), code("O")])
        self.assertFalse(mask[code("I-t"), self.end])
        self.assertTrue(mask[code("E-t"), code("S-b")])
        self.assertTrue(mask[code("S-e"), self.end])
        self.assertFalse(mask[code("O"), code("I-s")])

    def test_masked_decoding_is_always_valid(self) -> None:
        rng = np.random.default_rng(9)
        for _ in range(25):
            em = rng.normal(scale=3.0, size=(8, 21))
            transitions = rng.normal(size=(23, 23))
            decoded = viterbi_decode(em, transitions, self.mask)
            self.assertTrue(is_valid_sequence([Tag.from_code(c) for c in decoded.tags]))
            self.assertTrue(np.isfinite(decoded.score))

    def test_mask_shape_is_checked(self) -> None:
        with self.assertRaises(ShapeError):
            viterbi_decode(np.zeros((2, 3)), new_transition_matrix(3), np.ones((4, 4), dtype=bool))
        with self.assertRaises(ValueError):
            bieos_transition_mask(5)


if __name__ == "__main__":
    unittest.main()
