"""Config-driven experiments: synthesize, preprocess, split, train, diagnose.

Nothing in an experiment depends on wall-clock time or on the order in
which sweep entries finish, so the same config always yields the same
report bytes.
"""

import os
import sys
import json
import logging
import dataclasses
from concurrent.futures import ProcessPoolExecutor

import numpy
import scipy

from .version import __version__
from .core import TARGET_LENGTH
from .synthgen import NeuralModelParams, generate_schedule, schedule_for_duration, synthesize_subjects, make_splits
from .pipeline import Preprocessor, build_dataset
from .models import ModelSpec, TrainConfig, build, train, chance_level
from .diagnostics import (ReportRow, DiagnosticReport, block_label_leakage, blank_leakage, fit_and_score,
	per_subject_vs_pooled, write_report_csv, write_report_json)
from .config import BAND_PRESETS, validate, parse_band

logger = logging.getLogger(__name__)

SWEEP_AXES = ('band', 'duration', 'drift')


def neural_params(cfg):
	s = cfg.synth
	return NeuralModelParams(
		drift_amplitude = s.drift_amplitude,
		evoked_amplitude = s.evoked_amplitude,
		evoked_band = s.evoked_band,
		n_classes = s.n_classes,
		n_channels = s.n_channels,
		sampling_rate = cfg.sampling_rate,
		drift_timescale_s = s.drift_timescale_s,
		block_offset_scale = s.block_offset_scale,
		vigilance_tau_s = s.vigilance,
		artifact_gain = s.artifact_gain,
		noise_std = s.noise_std,
		subject_jitter = s.subject_jitter,
		seed = cfg.seed
	)


def make_schedule(cfg):
	s = cfg.synth

	if cfg.design == 'rapid':
		if s.duration_min is not None:
			return schedule_for_duration(s.duration_min, s.n_classes, cfg.seed)

		return generate_schedule('rapid', s.n_classes, s.images_per_class, 1, cfg.seed,
			isi_jitter_ms=s.isi_jitter_ms)

	return generate_schedule('block', s.n_classes, s.images_per_class, s.sessions, cfg.seed)


def model_spec(cfg, n_classes=None, n_channels=None, n_samples=TARGET_LENGTH):
	m = cfg.model
	return ModelSpec(
		family = m.family,
		n_classes = n_classes or cfg.synth.n_classes,
		n_channels = n_channels or cfg.synth.n_channels,
		n_samples = n_samples,
		head = m.head,
		encoder_dim = m.encoder_dim,
		downsample = m.downsample,
		n_filters = m.n_filters,
		kernel_size = m.kernel_size,
		pool = m.pool,
		seed = cfg.seed
	)


def train_config(cfg):
	return TrainConfig(lr=cfg.train.lr, batch=cfg.train.batch, epochs=cfg.train.epochs, seed=cfg.seed)


def preprocessor(cfg):
	return Preprocessor(cfg.band, cfg.notch, cfg.mode, cfg.zero_phase, cfg.sampling_rate)


def condition_name(cfg):
	band = 'unfiltered' if cfg.band is None else '{:g}-{:g}Hz'.format(*cfg.band)
	notch = '+notch' if cfg.notch else ''
	return '{} {}{} {}'.format(cfg.design, band, notch, cfg.mode)


def prepare(cfg):
	"""Synthesize all subjects and return (stimulus segments, blank segments)."""
	sched = make_schedule(cfg)
	syntheses = synthesize_subjects(sched, neural_params(cfg), cfg.synth.n_subjects)
	blanks = cfg.labels == 'blank-pair' or cfg.design == 'blank'
	return build_dataset(syntheses, preprocessor(cfg), blanks)


def _percent(x):
	return 100.0 * x


def _class_rows(cfg, split, blanks):
	spec = model_spec(cfg)
	tcfg = train_config(cfg)
	condition = condition_name(cfg)
	report = DiagnosticReport(cfg.name)
	want_blanks = cfg.labels == 'blank-pair' or cfg.design == 'blank'

	if cfg.analysis in ('per-subject', 'both'):
		sub = per_subject_vs_pooled(split, spec, tcfg, 'class', condition=condition)
		rows = sub.rows if cfg.analysis == 'both' else sub.rows[:1]
		report.rows.extend(rows)

		if want_blanks:
			leaks = []
			for s in split.subjects():
				model = train(build(spec), split.for_subject(s), tcfg)
				leaks.append(blank_leakage(model, [b for b in blanks if b.subject_id == s]).accuracy)

			report.add(ReportRow(spec.tag, condition + ' per-subject', 'blank-pair', sum(leaks) / len(leaks),
				_percent(chance_level(spec.n_classes, 'blank-pair')), per_subject=leaks))

	if cfg.analysis == 'pooled':
		model, acc, low = fit_and_score(split, spec, tcfg)
		report.add(ReportRow(spec.tag, condition, 'class', _percent(acc),
			_percent(chance_level(spec.n_classes)), lowest_val_accuracy=_percent(low)))

		if want_blanks:
			report.add(blank_leakage(model, blanks, condition=condition))

	return report


def _block_rows(cfg, split):
	spec = model_spec(cfg)
	tcfg = train_config(cfg)
	condition = condition_name(cfg)
	report = DiagnosticReport(cfg.name)

	if cfg.analysis == 'pooled':
		row, _ = block_label_leakage(split, spec, tcfg, condition)
		report.add(row)
		return report

	split = split.with_labels('block')
	n_blocks = max(seg.block_label for part in split for seg in part) + 1
	spec = dataclasses.replace(spec, n_classes=n_blocks, encoder_dim=max(spec.encoder_dim, n_blocks))
	sub = per_subject_vs_pooled(split, spec, tcfg, 'block', condition=condition)
	report.rows.extend(sub.rows if cfg.analysis == 'both' else sub.rows[:1])
	return report


def run(cfg):
	"""Execute one validated config and return its DiagnosticReport."""
	logger.info("running %s (%s), seed %d", cfg.name, condition_name(cfg), cfg.seed)

	stimuli, blanks = prepare(cfg)
	split = make_splits(stimuli, seed=cfg.seed)

	if cfg.labels == 'block':
		report = _block_rows(cfg, split)
	else:
		report = _class_rows(cfg, split, blanks)

	report.metadata = {
		'seed': cfg.seed,
		'band': None if cfg.band is None else list(cfg.band),
		'design': cfg.design,
		'duration_min': cfg.synth.duration_min,
		'config_sha256': cfg.digest()
	}
	return report


def _run_dict(cfg):
	return run(cfg).to_dict()


def sweep_configs(cfg, axis, values, fresh_seeds=False):
	"""One config per axis value, sharing the base seed unless
	``fresh_seeds`` (then value i uses seed + i)."""
	if axis not in SWEEP_AXES:
		raise ValueError("sweep axis must be one of {}".format(', '.join(SWEEP_AXES)))

	if not values:
		raise ValueError("a sweep needs at least one value")

	out = []
	for i, value in enumerate(values):
		seed = cfg.seed + i if fresh_seeds else cfg.seed
		synth = cfg.synth

		if axis == 'band':
			item = cfg.replace(band=parse_band(value), seed=seed)
		elif axis == 'duration':
			synth = dataclasses.replace(synth, duration_min=float(value))
			item = cfg.replace(design='rapid', synth=synth, seed=seed)
		else:
			synth = dataclasses.replace(synth, drift_amplitude=float(value))
			item = cfg.replace(synth=synth, seed=seed)

		out.append(validate(item))

	return out


def _value_name(axis, value):
	if axis == 'band' and isinstance(value, str) and value in BAND_PRESETS:
		return value

	if axis == 'band':
		return '{:g}-{:g}'.format(*parse_band(value))

	return '{:g}'.format(float(value))


def _value_key(axis, value, item):
	if axis == 'band':
		return tuple(item.band)

	return (float(value),)


def sweep(cfg, axis, values, jobs=1, fresh_seeds=False):
	"""Run ``cfg`` once per value and merge the rows ordered by axis value.

	Bands order by (low, high) edges, durations and drifts numerically; the
	order values were given in only decides the seeds under ``fresh_seeds``.
	"""
	configs = sweep_configs(cfg, axis, values, fresh_seeds)
	order = sorted(range(len(values)), key=lambda i: _value_key(axis, values[i], configs[i]))
	values = [values[i] for i in order]
	configs = [configs[i] for i in order]

	if jobs > 1 and len(configs) > 1:
		with ProcessPoolExecutor(max_workers=jobs) as executor:
			results = list(executor.map(_run_dict, configs))
	else:
		results = [_run_dict(c) for c in configs]

	report = DiagnosticReport('{}-{}-sweep'.format(cfg.name, axis), metadata={
		'axis': axis,
		'values': [_value_name(axis, v) for v in values],
		'seeds': [c.seed for c in configs],
		'config_sha256': cfg.digest()
	})

	for value, data in zip(values, results):
		part = DiagnosticReport.from_dict(data)

		for row in part.rows:
			row.extra = dict(row.extra, axis=axis, value=_value_name(axis, value))
			report.add(row)

	return report


def manifest(cfg, outputs=()):
	return {
		'config': cfg.to_dict(),
		'config_sha256': cfg.digest(),
		'seed': cfg.seed,
		'versions': {
			'eegbias': __version__,
			'numpy': numpy.__version__,
			'scipy': scipy.__version__,
			'python': '{}.{}.{}'.format(*sys.version_info[:3])
		},
		'outputs': sorted(outputs)
	}


def write_outputs(report, cfg, directory=None, extra=None):
	"""Write report CSV/JSON plus the manifest into ``directory``."""
	directory = directory or cfg.output
	os.makedirs(directory, exist_ok=True)

	names = ['report.csv', 'report.json', 'manifest.json']
	write_report_csv(os.path.join(directory, 'report.csv'), report)
	write_report_json(os.path.join(directory, 'report.json'), report)

	data = manifest(cfg, names)
	if extra:
		data.update(extra)

	with open(os.path.join(directory, 'manifest.json'), 'w') as fw:
		json.dump(data, fw, indent=1, sort_keys=True)
		fw.write('\n')

	logger.info("wrote %s", ', '.join(os.path.join(directory, n) for n in names))
	return [os.path.join(directory, n) for n in names]
