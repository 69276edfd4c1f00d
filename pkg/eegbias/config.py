"""Experiment configuration.

A config is a JSON object with the top-level keys of ExperimentConfig and
three nested sections (``synth``, ``model``, ``train``).  Unknown keys are
rejected anywhere.  Command line flags override file values; a missing
seed falls back to the ``EEGLAB_SEED`` environment variable.
"""

import os
import json
import math
import hashlib
import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError
from .models import FAMILIES, HEADS

SEED_ENV = 'EEGLAB_SEED'

#frequency bands in Hz, nothing inside the 45-55 Hz mains region
BAND_PRESETS = {
	'theta-alpha-beta': (5.0, 32.0),
	'low-gamma': (32.0, 45.0),
	'high-gamma': (55.0, 95.0),
	'all-gamma': (32.0, 95.0),
	'all': (5.0, 95.0),
	'contamination': (14.0, 70.0)
}

TABLE_BANDS = ['theta-alpha-beta', 'low-gamma', 'high-gamma', 'all-gamma', 'all']

DESIGNS = ('block', 'rapid', 'blank')
LABELS = ('class', 'block', 'blank-pair')
ANALYSES = ('pooled', 'per-subject', 'both')
MODES = ('filter', 'raw', 'contaminate')


@dataclass
class SynthConfig:
	drift_amplitude: float = None
	evoked_amplitude: float = 1.0
	evoked_band: tuple = (55.0, 95.0)
	drift_timescale_s: float = 20.0
	block_offset_scale: float = 1.0
	vigilance_tau_s: float = None
	artifact_gain: float = 0.0
	noise_std: float = 1.0
	subject_jitter: float = 0.0
	n_channels: int = 128
	n_classes: int = 40
	images_per_class: int = 50
	sessions: int = 4
	n_subjects: int = 6
	duration_min: float = None
	isi_jitter_ms: float = 0.0

	@property
	def vigilance(self):
		return math.inf if self.vigilance_tau_s is None else self.vigilance_tau_s


@dataclass
class ModelConfig:
	family: str = 'pooled-cnn'
	head: str = 'direct'
	encoder_dim: int = 128
	downsample: int = None
	n_filters: int = None
	kernel_size: int = 9
	pool: int = 8


@dataclass
class TrainingConfig:
	lr: float = 0.001
	batch: int = 16
	epochs: int = 200


@dataclass
class ExperimentConfig:
	name: str = 'experiment'
	design: str = 'block'
	band: tuple = (55.0, 95.0)
	notch: bool = False
	mode: str = 'filter'
	zero_phase: bool = False
	labels: str = 'class'
	analysis: str = 'pooled'
	seed: int = None
	sampling_rate: float = 1000.0
	output: str = 'results'
	synth: SynthConfig = field(default_factory=SynthConfig)
	model: ModelConfig = field(default_factory=ModelConfig)
	train: TrainingConfig = field(default_factory=TrainingConfig)

	def to_dict(self):
		out = dataclasses.asdict(self)
		out['band'] = None if self.band is None else list(self.band)
		out['synth']['evoked_band'] = list(self.synth.evoked_band)
		return out

	def canonical(self):
		return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))

	def digest(self):
		"""sha256 of the canonical form without the output directory."""
		data = self.to_dict()
		del data['output']
		text = json.dumps(data, sort_keys=True, separators=(',', ':'))
		return hashlib.sha256(text.encode('utf-8')).hexdigest()

	def replace(self, **changes):
		return dataclasses.replace(self, **changes)


_SECTIONS = {
	'synth': SynthConfig,
	'model': ModelConfig,
	'train': TrainingConfig
}


def _build(cls, data, prefix):
	if not isinstance(data, dict):
		raise ConfigError(prefix or 'config', "must be a JSON object")

	names = {f.name for f in dataclasses.fields(cls)}
	for key in data:
		if key not in names:
			raise ConfigError(prefix + key, "unknown key")

	values = {}
	for key, value in data.items():
		if key in _SECTIONS and cls is ExperimentConfig:
			value = _build(_SECTIONS[key], value, key + '.')

		values[key] = value

	return cls(**values)


def parse_band(value, field_name='band'):
	"""A preset name, a 'low-high' string or a [low, high] pair."""
	if value is None:
		return None

	if isinstance(value, str) and value not in BAND_PRESETS and value.count('-') == 1:
		value = value.split('-')

	if isinstance(value, str):
		if value not in BAND_PRESETS:
			raise ConfigError(field_name, "unknown band preset {}, choose from {}".format(
				value, ', '.join(sorted(BAND_PRESETS))))

		return BAND_PRESETS[value]

	try:
		low, high = (float(v) for v in value)
	except (TypeError, ValueError):
		raise ConfigError(field_name, "must be a preset name or [low, high] in Hz")

	return (low, high)


def _choice(name, value, options):
	if value not in options:
		raise ConfigError(name, "{!r} is not one of {}".format(value, ', '.join(options)))


def _positive(name, value, integer=False, allow_zero=False):
	kind = int if integer else (int, float)

	if isinstance(value, bool) or not isinstance(value, kind):
		raise ConfigError(name, "must be a {}".format('whole number' if integer else 'number'))

	if value < 0 or (value == 0 and not allow_zero):
		raise ConfigError(name, "must be {}".format('>= 0' if allow_zero else '> 0'))


def validate(cfg, synth=True):
	"""Check every field, raising ConfigError naming the first bad one.

	With ``synth`` off the drift amplitude may stay unset, for commands that
	work on existing recordings or segments.
	"""
	_choice('design', cfg.design, DESIGNS)
	_choice('labels', cfg.labels, LABELS)
	_choice('analysis', cfg.analysis, ANALYSES)
	_choice('mode', cfg.mode, MODES)
	_choice('model.family', cfg.model.family, FAMILIES)
	_choice('model.head', cfg.model.head, HEADS)
	_positive('sampling_rate', cfg.sampling_rate)

	nyquist = cfg.sampling_rate / 2.0
	cfg.band = parse_band(cfg.band)

	if cfg.band is None:
		if cfg.mode != 'raw':
			raise ConfigError('band', "mode {} needs a band".format(cfg.mode))

	elif not 0 < cfg.band[0] < cfg.band[1] < nyquist:
		raise ConfigError('band', "{} is not within (0, {}) Hz with low < high".format(list(cfg.band), nyquist))

	cfg.synth.evoked_band = parse_band(cfg.synth.evoked_band, 'synth.evoked_band')
	if not 0 < cfg.synth.evoked_band[0] < cfg.synth.evoked_band[1] < nyquist:
		raise ConfigError('synth.evoked_band', "must lie within (0, {}) Hz".format(nyquist))

	if cfg.labels == 'block' and cfg.design == 'blank':
		raise ConfigError('labels', "block labels need a block or rapid design")

	if cfg.labels == 'blank-pair' and cfg.design == 'rapid':
		raise ConfigError('labels', "blank-pair labels need the block or blank design")

	if cfg.seed is None:
		raise ConfigError('seed', "no seed given and {} is not set".format(SEED_ENV))

	_positive('seed', cfg.seed, integer=True, allow_zero=True)

	s = cfg.synth
	if s.drift_amplitude is None and synth:
		raise ConfigError('synth.drift_amplitude', "required, there is no default drift")

	if s.drift_amplitude is not None:
		_positive('synth.drift_amplitude', s.drift_amplitude, allow_zero=True)

	for name in ('evoked_amplitude', 'noise_std', 'artifact_gain',
				 'block_offset_scale', 'subject_jitter', 'isi_jitter_ms'):
		_positive('synth.' + name, getattr(s, name), allow_zero=True)

	_positive('synth.drift_timescale_s', s.drift_timescale_s)
	if s.vigilance_tau_s is not None:
		_positive('synth.vigilance_tau_s', s.vigilance_tau_s)

	for name in ('n_channels', 'images_per_class', 'sessions', 'n_subjects'):
		_positive('synth.' + name, getattr(s, name), integer=True)

	_positive('synth.n_classes', s.n_classes, integer=True)
	if s.n_classes < 2:
		raise ConfigError('synth.n_classes', "must be >= 2")

	if s.duration_min is not None:
		_positive('synth.duration_min', s.duration_min)

	_positive('model.encoder_dim', cfg.model.encoder_dim, integer=True)
	for name in ('kernel_size', 'pool'):
		_positive('model.' + name, getattr(cfg.model, name), integer=True)

	for name in ('downsample', 'n_filters'):
		if getattr(cfg.model, name) is not None:
			_positive('model.' + name, getattr(cfg.model, name), integer=True)

	_positive('train.lr', cfg.train.lr)
	_positive('train.batch', cfg.train.batch, integer=True)
	_positive('train.epochs', cfg.train.epochs, integer=True)

	if not isinstance(cfg.output, str) or not cfg.output:
		raise ConfigError('output', "must be a directory path")

	parent = os.path.dirname(os.path.abspath(cfg.output))
	if not os.access(parent, os.W_OK):
		raise ConfigError('output', "{} is not writable".format(parent))

	return cfg


def from_dict(data):
	cfg = _build(ExperimentConfig, data, '')

	if cfg.band is not None:
		cfg.band = parse_band(cfg.band)

	cfg.synth.evoked_band = parse_band(cfg.synth.evoked_band, 'synth.evoked_band')
	return cfg


def load_config(path):
	try:
		with open(path) as fh:
			data = json.load(fh)
	except ValueError as e:
		raise ConfigError('config', "{} is not valid JSON: {}".format(path, e))
	except OSError as e:
		raise ConfigError('config', "cannot read {}: {}".format(path, e.strerror))

	return from_dict(data)


def write_config(path, cfg):
	with open(path, 'w') as fw:
		json.dump(cfg.to_dict(), fw, indent=1, sort_keys=True)
		fw.write('\n')


def override(cfg, values):
	"""Apply dotted-key overrides such as ``{'model.family': 'pooled-cnn'}``.
	None values are skipped."""
	data = cfg.to_dict()

	for key, value in values.items():
		if value is None:
			continue

		target = data
		parts = key.split('.')
		for part in parts[:-1]:
			if part not in target or not isinstance(target[part], dict):
				raise ConfigError(key, "unknown key")
			target = target[part]

		if parts[-1] not in target:
			raise ConfigError(key, "unknown key")

		target[parts[-1]] = value

	return from_dict(data)


def resolve_seed(cfg, environ=None):
	"""Fill a missing seed from EEGLAB_SEED."""
	environ = os.environ if environ is None else environ

	if cfg.seed is None and environ.get(SEED_ENV, '') != '':
		try:
			cfg.seed = int(environ[SEED_ENV])
		except ValueError:
			raise ConfigError('seed', "{}={!r} is not an integer".format(SEED_ENV, environ[SEED_ENV]))

	return cfg
