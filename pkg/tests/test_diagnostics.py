import os
import shutil
import tempfile
import unittest

import numpy as np
import eegbias

from eegbias import (Segment, BLANK, ReportRow, DiagnosticReport, EncodingMatrix, NeuralModelParams,
	Preprocessor)
from eegbias.diagnostics import report_table
from eegbias.models import ModelSpec, TrainConfig, build
from eegbias.errors import DegenerateEncodingError, DegenerateError, SubjectError, DataError

join = os.path.join


class OneHotnessTest(unittest.TestCase):
	def test_identity(self):
		enc = EncodingMatrix(np.eye(5))
		self.assertEqual(eegbias.one_hotness(enc), 0.0)

		#any orthogonal set is one-hot in this sense
		q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 6)))
		self.assertAlmostEqual(eegbias.one_hotness(EncodingMatrix(q)), 0.0, delta=1e-12)

	def test_two_classes(self):
		#|det(A - I)| of two unit vectors is their squared cosine
		angle = 0.7
		means = np.array([[1.0, 0.0], [np.cos(angle), np.sin(angle)]])
		self.assertAlmostEqual(eegbias.one_hotness(EncodingMatrix(means)), np.cos(angle) ** 2)

	def test_invariance(self):
		rng = np.random.default_rng(1)
		encodings = rng.standard_normal((60, 10)) + 0.5
		labels = np.repeat(np.arange(6), 10)

		base = eegbias.one_hotness(eegbias.class_encoding_matrix(encodings, labels))
		self.assertGreater(base, 0)

		#relabelled classes give the identical matrix
		perm = rng.permutation(6)
		a = eegbias.class_encoding_matrix(encodings, labels)
		b = eegbias.class_encoding_matrix(encodings, perm[labels])
		np.testing.assert_array_equal(a.gram, b.gram)

		#positive per-class scaling is normalised away
		scale = np.repeat(rng.uniform(0.1, 10.0, 6), 10)[:, None]
		scaled = eegbias.one_hotness(eegbias.class_encoding_matrix(scale * encodings, labels))
		self.assertAlmostEqual(scaled, base, delta=1e-9 * max(1.0, base))

		np.testing.assert_allclose(np.diag(a.gram), np.ones(6))

	def test_degenerate(self):
		with self.assertRaises(DegenerateEncodingError):
			EncodingMatrix(np.array([[1.0, 0.0], [0.0, 0.0]]))

		with self.assertRaises(DegenerateEncodingError):
			EncodingMatrix(np.zeros((0, 3)))

		#degenerate encodings are value errors
		with self.assertRaises(ValueError):
			EncodingMatrix(np.array([[np.nan, 1.0]]))

	def test_underflow(self):
		tiny = 1e-200
		means = np.array([[1.0, 0.0], [tiny, 1.0]])

		with self.assertLogs('eegbias.diagnostics', level='WARNING'):
			value, flag = eegbias.one_hotness(EncodingMatrix(means), with_flag=True)

		self.assertEqual(value, 0.0)
		self.assertTrue(flag)

		value, flag = eegbias.one_hotness(EncodingMatrix(np.eye(3)), with_flag=True)
		self.assertEqual(value, 0.0)
		self.assertFalse(flag)

	def test_model(self):
		spec = ModelSpec('linear-softmax', n_classes=3, n_channels=1, n_samples=3)
		model = build(spec)
		dense = model.network.layers[-1]
		dense.params['W'][:] = np.eye(3)
		dense.params['b'][:] = 0

		segments = [Segment(np.eye(3)[[k]] * (1 + i), class_label=k) for k in range(3) for i in range(2)]
		self.assertEqual(eegbias.model_one_hotness(model, segments), 0.0)


class ReportTest(unittest.TestCase):
	def setUp(self):
		self.tmp_dir = tempfile.mkdtemp()
		self.report = DiagnosticReport('demo', metadata={'seed': 3})
		self.report.add(ReportRow('pooled-cnn/direct', 'block', 'class', 62.5, 2.5,
			per_subject=[60.0, 65.0], lowest_val_accuracy=3.0))
		self.report.add(ReportRow('pooled-cnn/direct', 'rapid', 'class', 2.0, 2.5))

	def tearDown(self):
		if os.path.exists(self.tmp_dir):
			shutil.rmtree(self.tmp_dir)

	def test_arithmetic(self):
		first, second = self.report.rows
		self.assertAlmostEqual(first.increase, 60.0)
		self.assertAlmostEqual(first.mean, 62.5)
		self.assertAlmostEqual(first.std, 2.5)

		self.assertAlmostEqual(second.increase, -0.5)
		self.assertEqual(second.mean, 2.0)
		self.assertIsNone(second.std)

		table = report_table(self.report)
		self.assertEqual(table[0][0], 'model')
		self.assertEqual(table[1][5], '+60.0')
		self.assertEqual(table[2][6], '-')

		other = DiagnosticReport('more', [ReportRow('m', 'c', 'block', 10.0, 5.0)])
		self.report.extend(other)
		self.assertEqual(len(self.report.rows), 3)

	def test_random_increase(self):
		#a uniform guesser gains nothing over chance
		rng = np.random.default_rng(11)
		guesses = rng.integers(0, 40, size=(10000, 40))
		accuracy = 100 * np.mean(guesses == np.arange(40), axis=1)

		row = ReportRow('random', 'uniform', 'class', float(np.mean(accuracy)),
			100 * eegbias.models.chance_level(40), per_seed=accuracy.tolist())

		self.assertAlmostEqual(row.chance, 2.5)
		self.assertAlmostEqual(row.increase, 0.0, delta=1.0)
		self.assertAlmostEqual(row.mean - row.chance, 0.0, delta=1.0)

	def test_csv(self):
		path = join(self.tmp_dir, 'report.csv')
		eegbias.write_report_csv(path, self.report)

		with open(path) as fh:
			lines = fh.read().splitlines()

		self.assertEqual(lines[0].split(',')[:5], ['experiment', 'model', 'condition', 'labels', 'accuracy'])
		self.assertEqual(len(lines), 3)

		fields = lines[1].split(',')
		self.assertEqual(fields[0], 'demo')
		self.assertEqual(fields[4], '62.5000')
		self.assertEqual(fields[6], '60.0000')
		self.assertEqual(fields[10], '60.0000;65.0000')

		#missing values are empty
		self.assertEqual(lines[2].split(',')[8], '')

	def test_json(self):
		path = join(self.tmp_dir, 'report.json')
		eegbias.write_report_json(path, self.report)
		loaded = eegbias.read_report_json(path)

		self.assertEqual(loaded.name, 'demo')
		self.assertEqual(loaded.metadata, {'seed': 3})
		self.assertEqual(loaded.rows, self.report.rows)

		data = self.report.to_dict()
		self.assertEqual(sorted(data), ['experiment', 'metadata', 'rows'])
		self.assertAlmostEqual(data['rows'][0]['increase_over_chance'], 60.0)


class LeakageTest(unittest.TestCase):
	def setUp(self):
		spec = ModelSpec('linear-softmax', n_classes=4, n_channels=1, n_samples=4)
		self.model = build(spec)
		dense = self.model.network.layers[-1]
		dense.params['W'][:] = np.eye(4)
		dense.params['b'][:] = 0

	def blank(self, hot, pair):
		x = np.zeros((1, 4))
		x[0, hot] = 1.0
		return Segment(x, class_label=BLANK, blank_neighbors=pair, neighbor_blocks=pair)

	def test_blank_oracle(self):
		#a model that outputs a neighbour of every blank window
		blanks = [self.blank(0, (0, 1)), self.blank(2, (1, 2)), self.blank(3, (3, 0))]
		row = eegbias.blank_leakage(self.model, blanks)

		self.assertEqual(row.accuracy, 100.0)
		self.assertEqual(row.chance, 50.0)
		self.assertEqual(row.labels, 'blank-pair')
		self.assertEqual(row.condition, 'blank')

		blanks.append(self.blank(3, (1, 2)))
		self.assertEqual(eegbias.blank_leakage(self.model, blanks, 'blank-block-pair').accuracy, 75.0)

	def test_blank_errors(self):
		with self.assertRaises(DataError):
			eegbias.blank_leakage(self.model, [])

		with self.assertRaises(DataError):
			eegbias.blank_leakage(self.model, [Segment(np.zeros((1, 4)), class_label=1)])


class ExperimentDiagnosticsTest(unittest.TestCase):
	def setUp(self):
		self.params = NeuralModelParams(drift_amplitude=2.0, evoked_amplitude=3.0, n_classes=4,
			n_channels=8, seed=5)
		self.spec = ModelSpec('linear-softmax', n_classes=4, n_channels=8, n_samples=440)
		self.cfg = TrainConfig(lr=0.001, batch=8, epochs=2)

	def test_block_labels(self):
		sched = eegbias.generate_schedule('rapid', 4, 10, 1, seed=1, block_size=10, blank_ms=2000)
		synth = eegbias.synthesize_recording(sched, self.params)
		stimuli, _ = eegbias.build_dataset([synth], Preprocessor((55, 95)), blanks=False)
		split = eegbias.make_splits(stimuli)

		row, model = eegbias.block_label_leakage(split, self.spec, self.cfg)
		self.assertEqual(model.spec.n_classes, 4)
		self.assertEqual(row.labels, 'block')
		self.assertEqual(row.condition, 'rapid')
		self.assertEqual(row.chance, 25.0)
		self.assertTrue(0 <= row.accuracy <= 100)
		self.assertIsNotNone(row.lowest_val_accuracy)

		#a single presentation block has nothing to leak
		sched = eegbias.generate_schedule('rapid', 4, 10, 1, seed=1, block_size=40)
		synth = eegbias.synthesize_recording(sched, self.params)
		stimuli, _ = eegbias.build_dataset([synth], Preprocessor((55, 95)), blanks=False)
		with self.assertRaises(DegenerateError):
			eegbias.block_label_leakage(eegbias.make_splits(stimuli), self.spec, self.cfg)

	def test_subjects(self):
		sched = eegbias.generate_schedule('block', 4, 10, 2, seed=2, blank_ms=2000)
		syntheses = eegbias.synthesize_subjects(sched, self.params, 2)
		stimuli, _ = eegbias.build_dataset(syntheses, Preprocessor((55, 95)), blanks=False)

		report = eegbias.per_subject_vs_pooled(stimuli, self.spec, self.cfg, condition='block')
		self.assertEqual(report.name, 'per-subject-vs-pooled')
		self.assertEqual([row.condition for row in report.rows], ['block per-subject', 'block pooled'])
		self.assertEqual(report.metadata['subjects'], [0, 1])

		for row in report.rows:
			self.assertEqual(len(row.per_subject), 2)
			self.assertEqual(row.chance, 25.0)
			self.assertAlmostEqual(row.accuracy, np.mean(row.per_subject))

		single = [seg for seg in stimuli if seg.subject_id == 0]
		with self.assertRaises(SubjectError):
			eegbias.per_subject_vs_pooled(single, self.spec, self.cfg)

	def test_duration_sweep(self):
		report = eegbias.duration_sweep([1, 2], self.params, self.spec, self.cfg)

		self.assertEqual(report.name, 'duration-sweep')
		self.assertEqual([row.condition for row in report.rows], ['1 min', '1 min', '2 min', '2 min'])
		self.assertEqual([row.labels for row in report.rows],
			['block', 'blank-block-pair', 'block', 'blank-block-pair'])

		#two blocks in one minute, four in two
		self.assertEqual(report.rows[0].chance, 50.0)
		self.assertEqual(report.rows[2].chance, 25.0)
		self.assertEqual(report.rows[0].extra['minutes'], 1)
		self.assertEqual(len(report.rows[0].per_seed), 1)

		with self.assertRaises(ValueError):
			eegbias.duration_sweep([1], self.params, self.spec, self.cfg)
