import os
import json
import shutil
import tempfile
import unittest

from eegbias import config
from eegbias.config import ExperimentConfig, SynthConfig, ModelConfig
from eegbias.errors import ConfigError

join = os.path.join


class ConfigTest(unittest.TestCase):
	def setUp(self):
		self.tmp_dir = tempfile.mkdtemp()
		self.cfg_file = join(self.tmp_dir, 'exp.json')
		self.data = {
			'name': 'small',
			'band': 'high-gamma',
			'seed': 7,
			'output': join(self.tmp_dir, 'out'),
			'synth': {'drift_amplitude': 1.5, 'n_channels': 8},
			'model': {'family': 'linear-softmax'},
			'train': {'epochs': 3}
		}

	def tearDown(self):
		if os.path.exists(self.tmp_dir):
			shutil.rmtree(self.tmp_dir)

	def write(self, data):
		with open(self.cfg_file, 'w') as fw:
			json.dump(data, fw)

	def test_load(self):
		self.write(self.data)
		cfg = config.validate(config.load_config(self.cfg_file))

		self.assertEqual(cfg.band, (55.0, 95.0))
		self.assertEqual(cfg.seed, 7)
		self.assertEqual(cfg.synth.drift_amplitude, 1.5)
		self.assertEqual(cfg.synth.n_classes, 40)
		self.assertEqual(cfg.model.family, 'linear-softmax')
		self.assertEqual(cfg.train.epochs, 3)
		self.assertEqual(cfg.train.lr, 0.001)

	def test_unknown_keys(self):
		for data, field in (({'colour': 'red'}, 'colour'), ({'synth': {'drift': 1}}, 'synth.drift'),
							({'train': {'momentum': 0.9}}, 'train.momentum')):
			with self.assertRaises(ConfigError) as ctx:
				config.from_dict(data)

			self.assertEqual(ctx.exception.field, field)
			self.assertTrue(str(ctx.exception).startswith(field + ': '))

		with self.assertRaises(ConfigError):
			config.from_dict({'synth': [1, 2]})

	def test_bad_files(self):
		with open(self.cfg_file, 'w') as fw:
			fw.write('{"name": ')

		with self.assertRaises(ConfigError):
			config.load_config(self.cfg_file)

		with self.assertRaises(ConfigError):
			config.load_config(join(self.tmp_dir, 'missing.json'))

	def test_bands(self):
		self.assertEqual(config.parse_band('all'), (5.0, 95.0))
		self.assertEqual(config.parse_band('14-70'), (14.0, 70.0))
		self.assertEqual(config.parse_band([32, 45]), (32.0, 45.0))
		self.assertIsNone(config.parse_band(None))

		#the gamma presets stay clear of the mains region
		self.assertLessEqual(config.BAND_PRESETS['low-gamma'][1], 45)
		self.assertGreaterEqual(config.BAND_PRESETS['high-gamma'][0], 55)
		self.assertEqual(len(config.TABLE_BANDS), 5)

		with self.assertRaises(ConfigError):
			config.parse_band('delta')

		with self.assertRaises(ConfigError):
			config.parse_band([1, 2, 3])

		cfg = config.from_dict(dict(self.data, band=[95, 55]))
		with self.assertRaises(ConfigError) as ctx:
			config.validate(cfg)
		self.assertEqual(ctx.exception.field, 'band')

		#raw mode may skip the band
		cfg = config.from_dict(dict(self.data, band=None, mode='raw'))
		self.assertIsNone(config.validate(cfg).band)

		with self.assertRaises(ConfigError):
			config.validate(config.from_dict(dict(self.data, band=None)))

	def test_drift_required(self):
		data = dict(self.data, synth={'n_channels': 8})
		cfg = config.from_dict(data)

		with self.assertRaises(ConfigError) as ctx:
			config.validate(cfg)
		self.assertEqual(ctx.exception.field, 'synth.drift_amplitude')

		#commands on existing data do not need it
		config.validate(cfg, synth=False)

	def test_fields(self):
		bad = [
			({'design': 'mixed'}, 'design'),
			({'mode': 'ica'}, 'mode'),
			({'model': {'family': 'transformer'}}, 'model.family'),
			({'train': {'lr': 0}}, 'train.lr'),
			({'train': {'batch': 2.5}}, 'train.batch'),
			({'synth': {'drift_amplitude': -1}}, 'synth.drift_amplitude'),
			({'synth': {'drift_amplitude': 1, 'n_classes': 1}}, 'synth.n_classes'),
			({'seed': -3}, 'seed'),
			({'design': 'rapid', 'labels': 'blank-pair'}, 'labels'),
			({'design': 'blank', 'labels': 'block'}, 'labels')
		]

		for change, field in bad:
			data = dict(self.data, **change)
			with self.assertRaises(ConfigError, msg=field) as ctx:
				config.validate(config.from_dict(data))

			self.assertEqual(ctx.exception.field, field)

	def test_seed(self):
		cfg = config.from_dict(dict(self.data, seed=None))

		config.resolve_seed(cfg, {})
		self.assertIsNone(cfg.seed)
		with self.assertRaises(ConfigError):
			config.validate(cfg)

		config.resolve_seed(cfg, {config.SEED_ENV: '42'})
		self.assertEqual(cfg.seed, 42)

		#an explicit seed wins
		config.resolve_seed(cfg, {config.SEED_ENV: '9'})
		self.assertEqual(cfg.seed, 42)

		cfg.seed = None
		with self.assertRaises(ConfigError):
			config.resolve_seed(cfg, {config.SEED_ENV: 'abc'})

	def test_override(self):
		cfg = config.from_dict(self.data)
		out = config.override(cfg, {'model.family': 'pooled-cnn', 'train.lr': 0.01, 'seed': None,
			'band': 'low-gamma'})

		self.assertEqual(out.model.family, 'pooled-cnn')
		self.assertEqual(out.train.lr, 0.01)
		self.assertEqual(out.seed, 7)
		self.assertEqual(out.band, (32.0, 45.0))
		self.assertEqual(cfg.model.family, 'linear-softmax')

		with self.assertRaises(ConfigError):
			config.override(cfg, {'model.depth': 3})

		with self.assertRaises(ConfigError):
			config.override(cfg, {'seed.value': 3})

	def test_digest(self):
		a = config.from_dict(self.data)
		b = config.from_dict(json.loads(json.dumps(self.data)))
		self.assertEqual(a.digest(), b.digest())
		self.assertEqual(len(a.digest()), 64)

		c = config.override(a, {'train.epochs': 4})
		self.assertNotEqual(a.digest(), c.digest())

		#where results go is not part of the experiment
		self.assertEqual(a.replace(output=join(self.tmp_dir, 'elsewhere')).digest(), a.digest())

		#writing and reading back keeps the canonical form
		config.write_config(self.cfg_file, a)
		self.assertEqual(config.load_config(self.cfg_file).canonical(), a.canonical())

	def test_defaults(self):
		cfg = ExperimentConfig()
		self.assertEqual(cfg.band, (55.0, 95.0))
		self.assertEqual(cfg.design, 'block')
		self.assertIsNone(cfg.seed)
		self.assertIsInstance(cfg.synth, SynthConfig)
		self.assertIsInstance(cfg.model, ModelConfig)
		self.assertEqual(cfg.synth.n_subjects, 6)
		self.assertEqual(cfg.synth.images_per_class, 50)
		self.assertEqual(cfg.to_dict()['synth']['evoked_band'], [55.0, 95.0])
