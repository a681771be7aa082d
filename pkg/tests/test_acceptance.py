import itertools
import os
import unittest

import numpy as np
from scipy.special import logsumexp

from clinical_ner.config.models import TrainingSettings
from clinical_ner.corpus import EntityType, LabeledSentence, Tag, build_vocab
from clinical_ner.corpus.synthetic import generate_synthetic
from clinical_ner.crf import forward_logZ, sequence_score, viterbi_decode
from clinical_ner.dictionary import Dictionary
from clinical_ner.features import FeatureScheme, extract_features
from clinical_ner.features.extract import ngram_features
from clinical_ner.model import ArchKind, ModelConfig
from clinical_ner.model.inference import tag
from clinical_ner.model.serialization import format_model
from clinical_ner.model.sweep import SweepAxis, SweepJob, SweepPoint, run_point
from clinical_ner.model.tagger import build_model, loss_and_gradients
from clinical_ner.model.training import evaluate_model, train

SLOW = os.environ.get("CLINICAL_NER_SLOW") == "1"
STEP = 1e-5


class CrfOracleTests(unittest.TestCase):
    def test_random_instances_match_enumeration(self) -> None:
        rng = np.random.default_rng(2024)
        for _ in range(200):
            steps = int(rng.integers(1, 7))
            num_tags = int(rng.integers(1, 6))
            if num_tags ** steps > 4000:
                steps = 3
            em = rng.normal(size=(steps, num_tags))
            transitions = rng.normal(size=(num_tags + 2, num_tags + 2))
            scores = {path: sequence_score(em, transitions, path) for path in itertools.product(range(num_tags), repeat=steps)}
            self.assertAlmostEqual(forward_logZ(em, transitions), float(logsumexp(list(scores.values()))), delta=1e-9)

            best_score = max(scores.values())
            decoded = viterbi_decode(em, transitions)
            self.assertEqual(decoded.score, scores[decoded.tags])
            self.assertAlmostEqual(decoded.score, best_score, delta=1e-12)
            winners = [path for path, score in scores.items() if score == best_score]
            if len(winners) == 1:
                self.assertEqual(decoded.tags, winners[0])


class GradientFidelityTests(unittest.TestCase):
    def test_random_configurations(self) -> None:
        rng = np.random.default_rng(7)
        dictionary = Dictionary.from_pairs([("甲乙", EntityType.DISEASE), ("丙", EntityType.BODY), ("乙丙丁", EntityType.SYMPTOM)])
        schemes = list(FeatureScheme)
        for trial in range(20):
            arch = ArchKind.MODEL_I if trial % 2 == 0 else ArchKind.MODEL_II
            scheme = schemes[trial % len(schemes)]
            config = ModelConfig(
                arch=arch,
                scheme=scheme,
                d_e=int(rng.integers(2, 9)),
                d_d=int(rng.integers(2, 9)),
                d_h=int(rng.integers(2, 9)),
                d_hx=int(rng.integers(2, 9)),
                d_hd=int(rng.integers(2, 9)),
                dropout=0.0,
                seed=trial,
            )
            n = int(rng.integers(1, 6))
            chars = list(rng.choice(list("甲乙丙丁"), size=n))
            model = build_model(config, build_vocab([LabeledSentence(tuple(chars))]))
            for param in model.parameters().values():
                param.value += rng.normal(scale=0.1, size=param.value.shape)
            char_ids = model.vocab.encode(chars)
            features = extract_features(chars, dictionary, scheme)
            gold = rng.integers(21, size=n).tolist()

            _, grads = loss_and_gradients(model, char_ids, features, gold)
            for name, param in model.parameters().items():
                for _ in range(8):
                    index = tuple(int(rng.integers(dim)) for dim in param.value.shape)
                    original = param.value[index]
                    param.value[index] = original + STEP
                    plus, _ = loss_and_gradients(model, char_ids, features, gold)
                    param.value[index] = original - STEP
                    minus, _ = loss_and_gradients(model, char_ids, features, gold)
                    param.value[index] = original
                    numeric = (plus - minus) / (2 * STEP)
                    analytic = grads[name][index]
                    scale = max(abs(numeric), abs(analytic), 1e-4)
                    self.assertLess(abs(analytic - numeric) / scale, 1e-4, msg=f"trial={trial} {name}{index}")


class NgramLocalityTests(unittest.TestCase):
    def test_distant_perturbations_never_change_a_row(self) -> None:
        rng = np.random.default_rng(3)
        alphabet = list("甲乙丙丁戊")
        dictionary = Dictionary.from_pairs(
            ("".join(rng.choice(alphabet, size=int(rng.integers(2, 6)))), EntityType.from_code(int(rng.integers(5))))
            for _ in range(25)
        )
        for _ in range(1000):
            n = int(rng.integers(6, 16))
            chars = list(rng.choice(alphabet, size=n))
            i = int(rng.integers(n))
            far = [j for j in range(n) if abs(j - i) > 4]
            if not far:
                continue
            j = far[int(rng.integers(len(far)))]
            changed = list(chars)
            changed[j] = alphabet[(alphabet.index(chars[j]) + 1) % len(alphabet)]
            before = ngram_features(chars, dictionary)
            after = ngram_features(changed, dictionary)
            self.assertEqual(before.shape[1], 40)
            np.testing.assert_array_equal(before[i], after[i])


class DeterminismTests(unittest.TestCase):
    def test_identical_runs_write_identical_model_files(self) -> None:
        data = generate_synthetic(10, 0, seed=4)
        config = ModelConfig(d_e=6, d_d=4, d_h=6, epochs=2, batch_size=4, seed=9)
        first = train(data.train, data.dictionary, config)
        second = train(data.train, data.dictionary, config)
        self.assertEqual(format_model(first.model), format_model(second.model))


def _tiny(arch: ArchKind, seed: int, epochs: int) -> ModelConfig:
    scheme = None if arch is ArchKind.BASELINE else FeatureScheme.PDET_EMBED
    return ModelConfig(
        arch=arch, scheme=scheme, d_e=16, d_d=16, d_h=32, dropout=0.0, batch_size=10, epochs=epochs, seed=seed, learning_rate=0.01
    )


@unittest.skipUnless(SLOW, "set CLINICAL_NER_SLOW=1 to run training acceptance checks")
class TrainingAcceptanceTests(unittest.TestCase):
    def test_overfits_synthetic_corpus(self) -> None:
        data = generate_synthetic(50, 0, seed=0)
        result = train(data.train, data.dictionary, _tiny(ArchKind.MODEL_I, seed=0, epochs=150))
        report = evaluate_model(result.model, data.train, data.dictionary)
        self.assertGreaterEqual(report.f1, 0.99)

    def test_overfits_worked_example(self) -> None:
        text = "腹平坦，未见腹壁静脉曲张。"
        gold = [Tag.parse(t) for t in ("S-b", "O", "O", "O", "O", "O", "B-b", "E-b", "B-s", "I-s", "I-s", "E-s", "O")]
        dictionary = Dictionary.from_pairs([("腹", EntityType.BODY), ("腹壁", EntityType.BODY), ("静脉曲张", EntityType.SYMPTOM)])
        result = train([LabeledSentence.from_text(text, gold)], dictionary, _tiny(ArchKind.MODEL_I, seed=1, epochs=300))
        self.assertEqual(list(tag(result.model, text, dictionary).tags), gold)

    def test_dictionary_helps_on_unseen_entities(self) -> None:
        gaps = []
        for seed in range(3):
            data = generate_synthetic(60, 60, oov_rate=0.5, seed=seed)
            scores = {}
            for arch in (ArchKind.BASELINE, ArchKind.MODEL_I):
                dictionary = None if arch is ArchKind.BASELINE else data.dictionary
                model = train(data.train, dictionary, _tiny(arch, seed=seed, epochs=30)).model
                scores[arch] = evaluate_model(model, data.test, dictionary).f1
            gaps.append(scores[ArchKind.MODEL_I] - scores[ArchKind.BASELINE])
        self.assertGreaterEqual(float(np.mean(gaps)), 0.05)

    def test_larger_dictionaries_do_not_hurt(self) -> None:
        fractions = (0.25, 0.5, 0.75, 1.0)
        scores = np.zeros((3, len(fractions)))
        for seed in range(3):
            data = generate_synthetic(60, 60, oov_rate=0.5, seed=seed)
            for col, fraction in enumerate(fractions):
                job = SweepJob(
                    point=SweepPoint(SweepAxis.DICTIONARY, fraction),
                    train=data.train,
                    test=data.test,
                    dictionary=data.dictionary,
                    config=_tiny(ArchKind.MODEL_I, seed=seed, epochs=30),
                    training=TrainingSettings(),
                )
                scores[seed, col] = run_point(job).report.f1
        means = scores.mean(axis=0)
        for previous, current in zip(means, means[1:]):
            self.assertGreaterEqual(current, previous - 0.01)

    def test_full_fraction_equals_plain_training(self) -> None:
        data = generate_synthetic(20, 20, oov_rate=0.5, seed=5)
        config = _tiny(ArchKind.MODEL_I, seed=5, epochs=3)
        job = SweepJob(
            point=SweepPoint(SweepAxis.DICTIONARY, 1.0), train=data.train, test=data.test, dictionary=data.dictionary, config=config
        )
        plain = train(data.train, data.dictionary, config).model
        self.assertEqual(run_point(job).report, evaluate_model(plain, data.test, data.dictionary))


if __name__ == "__main__":
    unittest.main()
