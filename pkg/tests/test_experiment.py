import os
import json
import shutil
import tempfile
import unittest

import eegbias

from eegbias import config, experiment
from eegbias.errors import ConfigError

join = os.path.join


def small_config(tmp_dir, synth=None, **changes):
	data = {
		'name': 'small',
		'band': 'high-gamma',
		'seed': 3,
		'output': join(tmp_dir, 'out'),
		'synth': {
			'drift_amplitude': 1.0,
			'evoked_amplitude': 3.0,
			'n_channels': 8,
			'n_classes': 4,
			'images_per_class': 10,
			'sessions': 2,
			'n_subjects': 2
		},
		'model': {'family': 'linear-softmax'},
		'train': {'epochs': 2, 'batch': 8}
	}
	data['synth'].update(synth or {})
	data.update(changes)
	return config.validate(config.from_dict(data))


class ExperimentTest(unittest.TestCase):
	def setUp(self):
		self.tmp_dir = tempfile.mkdtemp()

	def tearDown(self):
		if os.path.exists(self.tmp_dir):
			shutil.rmtree(self.tmp_dir)

	def test_builders(self):
		cfg = small_config(self.tmp_dir)

		params = experiment.neural_params(cfg)
		self.assertEqual(params.drift_amplitude, 1.0)
		self.assertEqual(params.n_channels, 8)
		self.assertEqual(params.seed, 3)

		sched = experiment.make_schedule(cfg)
		self.assertEqual(len(sched.stimuli()), 40)
		self.assertEqual(sched.sessions, [0, 1])

		spec = experiment.model_spec(cfg)
		self.assertEqual((spec.family, spec.n_classes, spec.n_channels, spec.n_samples), ('linear-softmax', 4, 8, 440))

		self.assertEqual(experiment.condition_name(cfg), 'block 55-95Hz filter')

		cfg = small_config(self.tmp_dir, {'duration_min': 1.0}, design='rapid')
		sched = experiment.make_schedule(cfg)
		self.assertEqual(sched.design, 'rapid')
		self.assertEqual(sched.n_blocks, 2)

	def test_run(self):
		cfg = small_config(self.tmp_dir, labels='blank-pair')
		report = experiment.run(cfg)

		self.assertEqual(report.name, 'small')
		self.assertEqual([row.labels for row in report.rows], ['class', 'blank-pair'])
		self.assertEqual(report.rows[0].chance, 25.0)
		self.assertEqual(report.rows[1].chance, 50.0)
		self.assertEqual(report.metadata['seed'], 3)
		self.assertEqual(report.metadata['band'], [55.0, 95.0])
		self.assertEqual(report.metadata['config_sha256'], cfg.digest())

		#same config, same report
		again = experiment.run(small_config(self.tmp_dir, labels='blank-pair'))
		self.assertEqual(again.to_dict(), report.to_dict())

	def test_analyses(self):
		cfg = small_config(self.tmp_dir, analysis='both')
		report = experiment.run(cfg)
		self.assertEqual([row.condition for row in report.rows],
			['block 55-95Hz filter per-subject', 'block 55-95Hz filter pooled'])

		#four presentation blocks of 50
		cfg = small_config(self.tmp_dir, {'images_per_class': 50}, design='rapid', labels='block')
		report = experiment.run(cfg)
		self.assertEqual(len(report.rows), 1)
		self.assertEqual(report.rows[0].labels, 'block')

	def test_outputs(self):
		cfg = small_config(self.tmp_dir)
		report = experiment.run(cfg)
		paths = experiment.write_outputs(report, cfg)

		self.assertEqual([os.path.basename(p) for p in paths], ['report.csv', 'report.json', 'manifest.json'])
		self.assertTrue(all(os.path.exists(p) for p in paths))

		with open(paths[2]) as fh:
			data = json.load(fh)

		self.assertEqual(data['config_sha256'], cfg.digest())
		self.assertEqual(data['seed'], 3)
		self.assertEqual(data['versions']['eegbias'], eegbias.__version__)
		self.assertEqual(data['outputs'], sorted(['report.csv', 'report.json', 'manifest.json']))

		loaded = eegbias.read_report_json(paths[1])
		self.assertEqual(loaded.rows, report.rows)

	def test_sweep_configs(self):
		cfg = small_config(self.tmp_dir)

		configs = experiment.sweep_configs(cfg, 'band', ['low-gamma', [14, 70]])
		self.assertEqual([c.band for c in configs], [(32.0, 45.0), (14.0, 70.0)])
		self.assertEqual([c.seed for c in configs], [3, 3])

		configs = experiment.sweep_configs(cfg, 'drift', [0, 2.5], fresh_seeds=True)
		self.assertEqual([c.synth.drift_amplitude for c in configs], [0.0, 2.5])
		self.assertEqual([c.seed for c in configs], [3, 4])
		self.assertEqual(cfg.synth.drift_amplitude, 1.0)

		configs = experiment.sweep_configs(cfg, 'duration', [1, 2])
		self.assertTrue(all(c.design == 'rapid' for c in configs))

		with self.assertRaises(ValueError):
			experiment.sweep_configs(cfg, 'lr', [0.1])

		with self.assertRaises(ValueError):
			experiment.sweep_configs(cfg, 'band', [])

		with self.assertRaises(ConfigError):
			experiment.sweep_configs(cfg, 'drift', [-1])

	def test_sweep(self):
		cfg = small_config(self.tmp_dir)
		report = experiment.sweep(cfg, 'band', ['high-gamma', '14-70'])

		self.assertEqual(report.name, 'small-band-sweep')
		#rows follow the band edges, not the order given
		self.assertEqual(report.metadata['values'], ['14-70', 'high-gamma'])
		self.assertEqual([row.extra['value'] for row in report.rows], ['14-70', 'high-gamma'])
		self.assertEqual([row.condition for row in report.rows], ['block 14-70Hz filter', 'block 55-95Hz filter'])

		#worker processes give the same rows in the same order
		parallel = experiment.sweep(cfg, 'band', ['high-gamma', '14-70'], jobs=2)
		self.assertEqual(parallel.to_dict(), report.to_dict())
