import asyncio
import io
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np

from clinical_ner.config.models import CorpusSettings, TrainingSettings
from clinical_ner.corpus import EntityType, LabeledSentence, Tag, build_vocab, format_corpus, is_valid_sequence, parse_corpus
from clinical_ner.corpus.synthetic import generate_synthetic
from clinical_ner.dictionary import Dictionary, fingerprint
from clinical_ner.features import FeatureScheme, PietLabel, extract_features
from clinical_ner.model import ArchKind, ModelConfig
from clinical_ner.model.embeddings import (
    EmbeddingFileError,
    EmbeddingTarget,
    PretrainedEmbeddings,
    load_pretrained_embeddings,
)
from clinical_ner.model.inference import DecodeOptions, check_dictionary, tag, tag_sentences
from clinical_ner.model.serialization import ModelFileError, format_model, load_model, parse_model, save_model
from clinical_ner.model.sweep import (
    SweepAxis,
    SweepJob,
    SweepPoint,
    format_sweep,
    parse_sweep_values,
    point_config,
    run_sweep,
)
from clinical_ner.model.tagger import (
    build_model,
    forward_baseline,
    forward_model_i,
    forward_model_ii,
    loss_and_gradients,
    seed_streams,
)
from clinical_ner.model.training import train
from clinical_ner.nn import Mode, ShapeError, bilstm_forward
from clinical_ner.nn.lstm import GATES

SENTENCE = "腹平坦，未见腹壁静脉曲张。"
DICTIONARY = Dictionary.from_pairs(
    [("腹", EntityType.BODY), ("腹壁", EntityType.BODY), ("静脉曲张", EntityType.SYMPTOM)]
)
GOLD = [
    Tag.parse(t)
    for t in ("S-b", "O", "O", "O", "O", "O", "B-b", "E-b", "B-s", "I-s", "I-s", "E-s", "O")
]
STEP = 1e-5


def tiny_config(arch: ArchKind = ArchKind.MODEL_I, scheme: FeatureScheme | None = FeatureScheme.PDET_EMBED, **kw) -> ModelConfig:
    if arch is ArchKind.BASELINE:
        scheme = None
    values = dict(arch=arch, scheme=scheme, d_e=4, d_d=3, d_h=5, d_hx=3, d_hd=2, dropout=0.0, batch_size=4, epochs=2, seed=1)
    values.update(kw)
    return ModelConfig(**values)


def tiny_model(arch: ArchKind = ArchKind.MODEL_I, scheme: FeatureScheme | None = FeatureScheme.PDET_EMBED, **kw):
    vocab = build_vocab([LabeledSentence.from_text(SENTENCE)])
    return build_model(tiny_config(arch, scheme, **kw), vocab)


def clause_inputs(model):
    scheme = model.config.scheme
    features = None if scheme is None else extract_features(SENTENCE, DICTIONARY, scheme)
    return model.vocab.encode(SENTENCE), features, [t.code for t in GOLD]


class ArchitectureShapeTests(unittest.TestCase):
    def test_default_widths(self) -> None:
        vocab = build_vocab([LabeledSentence.from_text(SENTENCE)])
        model_i = build_model(ModelConfig(), vocab)
        self.assertEqual(model_i.encoder_input_widths(), (256,))
        self.assertEqual(model_i.crf_input_width, 512)
        baseline = build_model(ModelConfig(arch=ArchKind.BASELINE, scheme=None), vocab)
        self.assertEqual(baseline.encoder_input_widths(), (128,))
        self.assertEqual(baseline.crf_input_width, 512)
        model_ii = build_model(ModelConfig(arch=ArchKind.MODEL_II), vocab)
        self.assertEqual(model_ii.encoder_input_widths(), (128, 128))
        self.assertEqual(model_ii.crf_input_width, 512)
        ngram = build_model(ModelConfig(scheme=FeatureScheme.NGRAM), vocab)
        self.assertEqual(ngram.encoder_input_widths(), (168,))
        self.assertIsNone(ngram.feature_embedding)

    def test_parameter_names(self) -> None:
        names = set(tiny_model(ArchKind.MODEL_II).parameters())
        self.assertIn("char_embedding", names)
        self.assertIn("feature_embedding", names)
        self.assertIn("char_encoder.forward.W_i", names)
        self.assertIn("feature_encoder.backward.U_o", names)
        self.assertIn("projection.W", names)
        self.assertIn("transitions", names)
        self.assertEqual(tiny_model(ArchKind.MODEL_II).transitions.value.shape, (23, 23))
        baseline = set(tiny_model(ArchKind.BASELINE).parameters())
        self.assertNotIn("feature_embedding", baseline)
        self.assertIn("encoder.backward.b_f", baseline)

    def test_forward_shapes(self) -> None:
        for scheme in FeatureScheme:
            features = extract_features(SENTENCE, DICTIONARY, scheme)
            self.assertEqual(forward_model_i(tiny_model(ArchKind.MODEL_I, scheme), SENTENCE, features).shape, (13, 21))
            self.assertEqual(forward_model_ii(tiny_model(ArchKind.MODEL_II, scheme), SENTENCE, features).shape, (13, 21))
        self.assertEqual(forward_baseline(tiny_model(ArchKind.BASELINE), SENTENCE).shape, (13, 21))

    def test_forward_checks_arch_and_feature_shape(self) -> None:
        model = tiny_model(ArchKind.BASELINE)
        with self.assertRaises(ValueError):
            forward_model_i(model, SENTENCE, np.zeros(13, dtype=np.int64))
        model = tiny_model(ArchKind.MODEL_I, FeatureScheme.PIET_ONEHOT)
        with self.assertRaises(ShapeError):
            forward_model_i(model, SENTENCE, np.zeros((13, 21)))

    def test_seeded_initialization(self) -> None:
        first = tiny_model().parameters()
        second = tiny_model().parameters()
        for name in first:
            np.testing.assert_array_equal(first[name].value, second[name].value)
        self.assertEqual(len(seed_streams(3)), 4)

    def test_eval_mode_is_deterministic_and_train_mode_is_not(self) -> None:
        model = tiny_model(dropout=0.5)
        features = extract_features(SENTENCE, DICTIONARY, FeatureScheme.PDET_EMBED)
        a = forward_model_i(model, SENTENCE, features)
        b = forward_model_i(model, SENTENCE, features)
        np.testing.assert_array_equal(a, b)
        c = forward_model_i(model, SENTENCE, features, Mode.TRAIN, np.random.default_rng(0))
        self.assertFalse(np.allclose(a, c))

    def _baseline_copy_of(self, model_i):
        baseline = tiny_model(ArchKind.BASELINE)
        d_e = model_i.config.d_e
        baseline.char_embedding.value[...] = model_i.char_embedding.value
        for source, target in zip(
            (model_i.encoders[0].forward, model_i.encoders[0].backward),
            (baseline.encoders[0].forward, baseline.encoders[0].backward),
        ):
            for gate in GATES:
                getattr(target, f"W_{gate}").value[...] = getattr(source, f"W_{gate}").value[:, :d_e]
                getattr(target, f"U_{gate}").value[...] = getattr(source, f"U_{gate}").value
                getattr(target, f"b_{gate}").value[...] = getattr(source, f"b_{gate}").value
        baseline.projection_weight.value[...] = model_i.projection_weight.value
        baseline.projection_bias.value[...] = model_i.projection_bias.value
        return baseline

    def test_model_i_without_feature_signal_matches_baseline(self) -> None:
        model = tiny_model(ArchKind.MODEL_I, FeatureScheme.PIET_ONEHOT)
        baseline = self._baseline_copy_of(model)
        expected = forward_baseline(baseline, SENTENCE)
        np.testing.assert_allclose(forward_model_i(model, SENTENCE, np.zeros((13, FeatureScheme.PIET_ONEHOT.label_count))), expected, atol=1e-12)

        d_e = model.config.d_e
        for direction in (model.encoders[0].forward, model.encoders[0].backward):
            for gate in GATES:
                getattr(direction, f"W_{gate}").value[:, d_e:] = 0.0
        features = extract_features(SENTENCE, DICTIONARY, FeatureScheme.PIET_ONEHOT)
        self.assertGreater(features.sum(), 0)
        np.testing.assert_allclose(forward_model_i(model, SENTENCE, features), expected, atol=1e-12)

        embedded = tiny_model(ArchKind.MODEL_I, FeatureScheme.PDET_EMBED)
        embedded.feature_embedding.value[...] = 0.0
        indices = extract_features(SENTENCE, DICTIONARY, FeatureScheme.PDET_EMBED)
        np.testing.assert_allclose(
            forward_model_i(embedded, SENTENCE, indices),
            forward_baseline(self._baseline_copy_of(embedded), SENTENCE),
            atol=1e-12,
        )

    def test_model_ii_streams_are_independent_and_order_free(self) -> None:
        for scheme in (FeatureScheme.PDET_EMBED, FeatureScheme.PIET_ONEHOT):
            with self.subTest(scheme=scheme.value):
                model = tiny_model(ArchKind.MODEL_II, scheme)
                char_encoder, feature_encoder = model.encoders
                split = char_encoder.output_width
                weight = model.projection_weight.value
                bias = model.projection_bias.value
                chars = model.char_embedding.value[model.vocab.encode(SENTENCE)]

                def feature_rows(features):
                    if scheme.is_embedding:
                        return model.feature_embedding.value[features]
                    return features

                features = extract_features(SENTENCE, DICTIONARY, scheme)
                char_hidden = bilstm_forward(char_encoder.forward, char_encoder.backward, chars)
                feature_hidden = bilstm_forward(feature_encoder.forward, feature_encoder.backward, feature_rows(features))
                swapped_hidden = np.concatenate([feature_hidden, char_hidden], axis=1)
                swapped_weight = np.concatenate([weight[:, split:], weight[:, :split]], axis=1)
                scores = forward_model_ii(model, SENTENCE, features)
                np.testing.assert_allclose(scores, swapped_hidden @ swapped_weight.T + bias, atol=1e-12)

                other = extract_features(SENTENCE, Dictionary.from_pairs([("平坦", EntityType.SYMPTOM)]), scheme)
                other_hidden = bilstm_forward(feature_encoder.forward, feature_encoder.backward, feature_rows(other))
                np.testing.assert_allclose(
                    forward_model_ii(model, SENTENCE, other) - scores,
                    (other_hidden - feature_hidden) @ weight[:, split:].T,
                    atol=1e-12,
                )


class LossTests(unittest.TestCase):
    def test_zero_projection_gives_uniform_loss(self) -> None:
        model = tiny_model()
        model.projection_weight.value[...] = 0.0
        loss, _ = loss_and_gradients(model, *clause_inputs(model))
        self.assertAlmostEqual(loss, 13 * np.log(21), places=9)

    def test_gradients_match_finite_differences(self) -> None:
        rng = np.random.default_rng(0)
        cases = [
            (ArchKind.BASELINE, None),
            (ArchKind.MODEL_I, FeatureScheme.PDET_EMBED),
            (ArchKind.MODEL_I, FeatureScheme.NGRAM),
            (ArchKind.MODEL_II, FeatureScheme.PIET_EMBED),
            (ArchKind.MODEL_II, FeatureScheme.PDET_ONEHOT),
        ]
        for arch, scheme in cases:
            with self.subTest(arch=arch.value, scheme=scheme.value if scheme else None):
                model = tiny_model(arch, scheme)
                inputs = clause_inputs(model)
                _, grads = loss_and_gradients(model, *inputs)
                for name, param in model.parameters().items():
                    self.assertEqual(grads[name].shape, param.value.shape)
                    for _ in range(3):
                        index = tuple(int(rng.integers(dim)) for dim in param.value.shape)
                        original = param.value[index]
                        param.value[index] = original + STEP
                        plus, _ = loss_and_gradients(model, *inputs)
                        param.value[index] = original - STEP
                        minus, _ = loss_and_gradients(model, *inputs)
                        param.value[index] = original
                        numeric = (plus - minus) / (2 * STEP)
                        self.assertAlmostEqual(grads[name][index], numeric, delta=1e-6 + 1e-4 * abs(numeric), msg=name)

    def test_gradients_leave_parameters_clean(self) -> None:
        model = tiny_model()
        loss_and_gradients(model, *clause_inputs(model))
        self.assertTrue(all(param.grad is None for param in model.parameters().values()))


class InferenceTests(unittest.TestCase):
    def test_tag_shapes_and_spans(self) -> None:
        model = tiny_model()
        result = tag(model, SENTENCE, DICTIONARY)
        self.assertEqual(len(result.tags), 13)
        self.assertEqual(result.chars, tuple(SENTENCE))
        for span in result.spans:
            self.assertLess(span.end, 13)
        labeled = result.to_labeled()
        self.assertEqual(parse_corpus(io.StringIO(format_corpus([labeled]))), [labeled])

    def test_empty_sentence_and_unknown_characters(self) -> None:
        model = tiny_model(ArchKind.BASELINE)
        self.assertEqual(tag(model, "").tags, ())
        self.assertEqual(len(tag(model, "龘龘").tags), 2)

    def test_masked_decoding_gives_valid_sequences(self) -> None:
        model = tiny_model()
        for param in model.parameters().values():
            param.value += np.random.default_rng(1).normal(scale=2.0, size=param.value.shape)
        result = tag(model, SENTENCE, DICTIONARY, DecodeOptions(mask_invalid_transitions=True))
        self.assertTrue(is_valid_sequence(result.tags))

    def test_clause_splitting_matches_per_clause_tagging(self) -> None:
        model = tiny_model()
        whole = tag(model, SENTENCE, DICTIONARY)
        first = tag(model, "腹平坦，", DICTIONARY)
        second = tag(model, "未见腹壁静脉曲张。", DICTIONARY)
        self.assertEqual(whole.tags, first.tags + second.tags)

    def test_dictionary_checks(self) -> None:
        model = tiny_model()
        with self.assertRaises(ValueError):
            tag(model, SENTENCE, None)
        model.dictionary_fingerprint = fingerprint(DICTIONARY)
        self.assertTrue(check_dictionary(model, DICTIONARY))
        with self.assertLogs("clinical_ner.model.inference", level="WARNING"):
            self.assertFalse(check_dictionary(model, Dictionary()))
        self.assertTrue(check_dictionary(tiny_model(ArchKind.BASELINE), None))

    def test_tag_sentences(self) -> None:
        model = tiny_model(ArchKind.BASELINE)
        results = tag_sentences(model, [LabeledSentence.from_text("腹痛"), LabeledSentence.from_text("")])
        self.assertEqual([len(r.tags) for r in results], [2, 0])


class SerializationTests(unittest.TestCase):
    def test_round_trip_preserves_everything(self) -> None:
        for arch in ArchKind:
            with self.subTest(arch=arch.value):
                model = tiny_model(arch)
                model.dictionary_fingerprint = fingerprint(DICTIONARY)
                with tempfile.TemporaryDirectory() as tmp:
                    path = Path(tmp) / "model.txt"
                    save_model(model, path)
                    loaded = load_model(path)
                    resaved = Path(tmp) / "resaved.txt"
                    save_model(loaded, resaved)
                    self.assertEqual(resaved.read_bytes(), path.read_bytes())
                self.assertEqual(loaded.config, model.config)
                self.assertEqual(loaded.vocab.tokens, model.vocab.tokens)
                self.assertEqual(loaded.dictionary_fingerprint, model.dictionary_fingerprint)
                self.assertEqual(list(loaded.parameters()), list(model.parameters()))
                for name, param in model.parameters().items():
                    np.testing.assert_array_equal(loaded.parameters()[name].value, param.value)
                dictionary = None if arch is ArchKind.BASELINE else DICTIONARY
                self.assertEqual(tag(loaded, SENTENCE, dictionary), tag(model, SENTENCE, dictionary))

    def test_config_shape_conflict(self) -> None:
        text = format_model(tiny_model())
        self.assertIn('"d_h": 5', text)
        with self.assertRaises(ModelFileError):
            parse_model(text.replace('"d_h": 5', '"d_h": 6'))

    def test_version_mismatch(self) -> None:
        text = format_model(tiny_model())
        with self.assertRaises(ModelFileError):
            parse_model(text.replace("clinical-ner-model 1", "clinical-ner-model 2", 1))

    def test_truncated_and_corrupt_files(self) -> None:
        text = format_model(tiny_model(ArchKind.BASELINE))
        with self.assertRaises(ModelFileError):
            parse_model(text[: len(text) // 2])
        with self.assertRaises(ModelFileError):
            parse_model(text.replace("\nend\n", "\n"))
        with self.assertRaises(ModelFileError):
            parse_model(text.replace("\nend\n", "\ntensor bogus 1\n0.0\nend\n"))
        with self.assertRaises(ModelFileError):
            parse_model("")

    def test_invalid_metadata(self) -> None:
        lines = format_model(tiny_model()).split("\n")
        meta = json.loads(lines[1][len("meta ") :])
        meta["config"]["scheme"] = None
        lines[1] = "meta " + json.dumps(meta)
        with self.assertRaises(ModelFileError):
            parse_model("\n".join(lines))


class PretrainedEmbeddingTests(unittest.TestCase):
    def test_char_rows_are_overwritten(self) -> None:
        model = tiny_model()
        untouched = model.char_embedding.value[model.vocab.lookup("平")].copy()
        report = load_pretrained_embeddings(model, io.StringIO("2 4\n腹 1 2 3 4\n龘 0 0 0 0\n"))
        self.assertEqual(report.loaded, 1)
        self.assertEqual(report.total, len(model.vocab.real_tokens()))
        np.testing.assert_array_equal(model.char_embedding.value[model.vocab.lookup("腹")], [1, 2, 3, 4])
        np.testing.assert_array_equal(model.char_embedding.value[model.vocab.lookup("平")], untouched)

    def test_feature_rows_by_label_name(self) -> None:
        model = tiny_model(ArchKind.MODEL_I, FeatureScheme.PIET_EMBED)
        report = load_pretrained_embeddings(model, io.StringIO("2 3\nb 1 1 1\nNone 2 2 2\n"), EmbeddingTarget.FEATURE)
        self.assertEqual((report.loaded, report.total), (2, 6))
        np.testing.assert_array_equal(model.feature_embedding.value[PietLabel(EntityType.BODY).index], [1, 1, 1])
        np.testing.assert_array_equal(model.feature_embedding.value[0], [2, 2, 2])

    def test_empty_file(self) -> None:
        report = load_pretrained_embeddings(tiny_model(), io.StringIO(""))
        self.assertEqual(report.coverage, 0.0)

    def test_errors(self) -> None:
        with self.assertRaises(EmbeddingFileError):
            load_pretrained_embeddings(tiny_model(), io.StringIO("1 3\n腹 1 2 3\n"))
        with self.assertRaises(EmbeddingFileError) as ctx:
            load_pretrained_embeddings(tiny_model(), io.StringIO("1 4\n腹 1 2 3\n"))
        self.assertEqual(ctx.exception.line_number, 2)
        with self.assertRaises(EmbeddingFileError):
            load_pretrained_embeddings(tiny_model(), io.StringIO("vectors\n"))
        with self.assertRaises(ValueError):
            load_pretrained_embeddings(tiny_model(ArchKind.BASELINE), io.StringIO("1 3\nb 1 1 1\n"), EmbeddingTarget.FEATURE)

    def test_apply_from_files(self) -> None:
        model = tiny_model()
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "chars.vec"
            path.write_text("1 4\n腹 0.5 0.5 0.5 0.5\n", encoding="utf-8")
            reports = PretrainedEmbeddings(char_path=path).apply(model)
        self.assertEqual([r.loaded for r in reports], [1])


class TrainingTests(unittest.TestCase):
    def setUp(self) -> None:
        self.data = generate_synthetic(12, 6, seed=0)

    def test_loss_decreases(self) -> None:
        config = tiny_config(d_e=8, d_d=4, d_h=8, epochs=8, learning_rate=0.02)
        result = train(self.data.train, self.data.dictionary, config)
        self.assertEqual(len(result.history), 8)
        self.assertTrue(all(np.isfinite(result.losses)))
        self.assertLess(result.losses[-1], result.losses[0])
        self.assertEqual(result.model.dictionary_fingerprint, fingerprint(self.data.dictionary))

    def test_same_seed_same_model(self) -> None:
        config = tiny_config(dropout=0.2)
        first = train(self.data.train, self.data.dictionary, config).model.parameters()
        second = train(self.data.train, self.data.dictionary, config).model.parameters()
        for name in first:
            np.testing.assert_array_equal(first[name].value, second[name].value)

    def test_dev_split_and_metrics_log(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            log_path = Path(tmp) / "metrics.jsonl"
            settings = TrainingSettings(dev_split=0.25, patience=1, metrics_log=str(log_path))
            result = train(self.data.train, self.data.dictionary, tiny_config(epochs=4), settings)
            records = [json.loads(line) for line in log_path.read_text(encoding="utf-8").splitlines()]
        self.assertEqual(len(records), len(result.history))
        self.assertTrue(all("dev_f1" in record for record in records))
        self.assertIn(result.best_epoch, [m.epoch for m in result.history])

    def test_training_without_clause_splitting(self) -> None:
        result = train(
            self.data.train,
            None,
            tiny_config(ArchKind.BASELINE, epochs=1),
            corpus_settings=CorpusSettings(split_clauses=False),
        )
        self.assertEqual(len(result.history), 1)

    def test_invalid_inputs(self) -> None:
        with self.assertRaises(ValueError):
            train([], self.data.dictionary, tiny_config())
        with self.assertRaises(ValueError):
            train([LabeledSentence.from_text("腹痛")], self.data.dictionary, tiny_config())
        with self.assertRaises(ValueError):
            train(self.data.train, None, tiny_config())


class SweepTests(unittest.TestCase):
    def test_parse_values(self) -> None:
        points = parse_sweep_values("0.25, 0.5,1", SweepAxis.DICTIONARY)
        self.assertEqual([p.value for p in points], [0.25, 0.5, 1.0])
        self.assertEqual([p.label for p in parse_sweep_values("64,128", SweepAxis.HIDDEN)], ["64", "128"])
        for text, axis in (("0", SweepAxis.DICTIONARY), ("1.5", SweepAxis.DICTIONARY), ("12.5", SweepAxis.HIDDEN), ("", SweepAxis.HIDDEN), ("x", SweepAxis.HIDDEN)):
            with self.assertRaises(ValueError):
                parse_sweep_values(text, axis)

    def test_hidden_point_config(self) -> None:
        base = tiny_config()
        self.assertEqual(point_config(base, SweepPoint(SweepAxis.HIDDEN, 32)).d_h, 32)
        model_ii = point_config(tiny_config(ArchKind.MODEL_II), SweepPoint(SweepAxis.HIDDEN, 33))
        self.assertEqual((model_ii.d_hx, model_ii.d_hd), (16, 17))
        self.assertEqual(model_ii.crf_input_width, 66)
        self.assertIs(point_config(base, SweepPoint(SweepAxis.DICTIONARY, 0.5)), base)

    def test_dictionary_sweep_runs_in_order(self) -> None:
        data = generate_synthetic(6, 4, oov_rate=0.5, seed=1)
        config = tiny_config(epochs=1)
        jobs = [
            SweepJob(point=point, train=data.train, test=data.test, dictionary=data.dictionary, config=config)
            for point in parse_sweep_values("0.5,1.0", SweepAxis.DICTIONARY)
        ]
        results = asyncio.run(run_sweep(jobs, concurrency=1))
        self.assertEqual([r.point.value for r in results], [0.5, 1.0])
        self.assertEqual([r.dictionary_entries for r in results], [20, 40])
        table = format_sweep(results).splitlines()
        self.assertEqual(table[0].split(), ["fraction", "entries", "P", "R", "F1"])
        self.assertEqual(len(table), 3)
        self.assertEqual(format_sweep([]), "")


if __name__ == "__main__":
    unittest.main()
