"""Temporal-correlation diagnostics.

Accuracies in reports are percentages; ``increase`` is accuracy minus
chance in percent points.
"""

import csv
import json
import math
import logging
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .models import build, train, evaluate, encode, chance_level
from .synthgen import make_splits, schedule_for_duration, synthesize_subjects, DatasetSplit
from .pipeline import Preprocessor, build_dataset
from .errors import DataError, DegenerateError, DegenerateEncodingError, SubjectError

logger = logging.getLogger(__name__)

UNDERFLOW = 1e-300

CSV_FIELDS = ['experiment', 'model', 'condition', 'labels', 'accuracy', 'chance',
	'increase_over_chance', 'mean', 'std', 'lowest_val_accuracy', 'per_subject', 'per_seed']


def population_std(values):
	if len(values) < 2:
		return None

	return float(np.std(values))


@dataclass
class ReportRow:
	model: str
	condition: str
	labels: str
	accuracy: float
	chance: float
	per_subject: list = field(default_factory=list)
	per_seed: list = field(default_factory=list)
	lowest_val_accuracy: float = None
	extra: dict = field(default_factory=dict)

	@property
	def increase(self):
		return self.accuracy - self.chance

	@property
	def spread(self):
		return self.per_subject or self.per_seed

	@property
	def mean(self):
		if not self.spread:
			return self.accuracy

		return float(np.mean(self.spread))

	@property
	def std(self):
		return population_std(self.spread)

	def to_dict(self):
		out = dataclasses.asdict(self)
		out['increase_over_chance'] = self.increase
		out['mean'] = self.mean
		out['std'] = self.std
		return out

	@classmethod
	def from_dict(cls, data):
		names = {f.name for f in dataclasses.fields(cls)}
		return cls(**{k: v for k, v in data.items() if k in names})


@dataclass
class DiagnosticReport:
	name: str
	rows: list = field(default_factory=list)
	metadata: dict = field(default_factory=dict)

	def add(self, row):
		self.rows.append(row)
		return row

	def extend(self, other):
		self.rows.extend(other.rows)

	def to_dict(self):
		return {
			'experiment': self.name,
			'metadata': self.metadata,
			'rows': [row.to_dict() for row in self.rows]
		}

	@classmethod
	def from_dict(cls, data):
		return cls(data['experiment'], [ReportRow.from_dict(r) for r in data['rows']], data.get('metadata', {}))


def _fmt(value):
	if value is None:
		return ''

	return '{:.4f}'.format(value)


def write_report_csv(path, report):
	with open(path, 'w', newline='') as fw:
		writer = csv.writer(fw, lineterminator='\n')
		writer.writerow(CSV_FIELDS)

		for row in report.rows:
			writer.writerow([report.name, row.model, row.condition, row.labels,
				_fmt(row.accuracy), _fmt(row.chance), _fmt(row.increase),
				_fmt(row.mean), _fmt(row.std), _fmt(row.lowest_val_accuracy),
				';'.join(_fmt(v) for v in row.per_subject),
				';'.join(_fmt(v) for v in row.per_seed)])


def write_report_json(path, report):
	with open(path, 'w') as fw:
		json.dump(report.to_dict(), fw, indent=1, sort_keys=True)
		fw.write('\n')


def read_report_json(path):
	with open(path) as fh:
		return DiagnosticReport.from_dict(json.load(fh))


def report_table(report):
	"""Header and rows for printing, per-condition in report order."""
	table = [['model', 'condition', 'labels', 'accuracy', 'chance', 'increase', 'std']]

	for row in report.rows:
		std = row.std
		table.append([row.model, row.condition, row.labels, '{:.1f}'.format(row.accuracy),
			'{:.1f}'.format(row.chance), '{:+.1f}'.format(row.increase),
			'-' if std is None else '{:.1f}'.format(std)])

	return table


@dataclass
class EncodingMatrix:
	"""Unit-normalised class-mean encodings and their Gram matrix.

	Rows are kept in a canonical order (lexicographic on the normalised
	vectors) so relabelling classes yields the identical matrix.
	"""
	means: np.ndarray
	gram: np.ndarray = field(init=False, repr=False)

	def __post_init__(self):
		means = np.asarray(self.means, dtype=np.float64)

		if means.ndim != 2 or len(means) < 1:
			raise DegenerateEncodingError("class means must be a non-empty classes x dim matrix")

		norms = np.linalg.norm(means, axis=1)
		if np.any(norms == 0) or not np.all(np.isfinite(norms)):
			raise DegenerateEncodingError("class {} has a zero mean encoding".format(int(np.argmin(norms))))

		unit = means / norms[:, None]
		order = np.lexsort(unit.T[::-1])
		self.means = unit[order]
		self.gram = self.means @ self.means.T

	@property
	def n_classes(self):
		return len(self.means)


def class_encoding_matrix(encodings, labels):
	"""Average encodings per label and build the EncodingMatrix."""
	encodings = np.asarray(encodings, dtype=np.float64)
	labels = np.asarray(labels)
	classes = np.unique(labels)
	means = np.stack([encodings[labels == c].mean(axis=0) for c in classes])
	return EncodingMatrix(means)


def one_hotness(enc, with_flag=False):
	"""|det(A - I)| through a pivoted LU (slogdet).

	Values below 1e-300 are returned as 0; ``with_flag`` also returns
	whether that happened.
	"""
	sign, logdet = np.linalg.slogdet(enc.gram - np.eye(enc.n_classes))
	underflow = False

	if sign == 0:
		value = 0.0
	elif logdet < math.log(UNDERFLOW):
		value = 0.0
		underflow = True
		logger.warning("one-hotness underflows (log |det| = %.1f), reported as 0", logdet)
	else:
		value = math.exp(logdet)

	if with_flag:
		return value, underflow

	return value


def model_one_hotness(model, segments, kind='class'):
	"""OH of a model's encodings of ``segments`` grouped by label."""
	labels = [seg.label(kind) for seg in segments]
	return one_hotness(class_encoding_matrix(encode(model, list(segments)), labels))


def _percent(x):
	return 100.0 * x


def blank_leakage(model, blanks, kind='blank-pair', condition='blank'):
	"""Share of blank windows predicted as one of their neighbouring labels."""
	if not blanks:
		raise DataError("no blank segments")

	for seg in blanks:
		pair = seg.blank_neighbors if kind == 'blank-pair' else seg.neighbor_blocks
		if pair is None:
			raise DataError("blank segment at {} ms has no neighbouring labels".format(seg.onset_ms))

	acc = evaluate(model, blanks, kind)
	row = ReportRow(model.spec.tag, condition, kind, _percent(acc), _percent(chance_level(model.spec.n_classes, kind)))
	logger.info("blank leakage (%s): %.1f%% against %.1f%% chance", kind, row.accuracy, row.chance)
	return row


def _count_labels(split):
	labels = {seg.label(split.labels) for part in split for seg in part}
	return max(labels) + 1, len(labels)


def fit_and_score(split, spec, cfg, test=None):
	"""Train a fresh model on ``split`` and score it on ``test`` (default
	the split's test part) at the selected and the lowest-val checkpoint."""
	test = split.test if test is None else test
	model = train(build(spec), split, cfg)
	acc = evaluate(model, test, split.labels)
	low = evaluate(model.with_parameters(model.lowest_params), test, split.labels)
	return model, acc, low


def block_label_leakage(split, spec, cfg, condition='rapid'):
	"""Train on presentation-block labels and report accuracy over chance.

	Returns (row, model); the model spec is resized to the number of blocks.
	"""
	split = split.with_labels('block')
	n_labels, distinct = _count_labels(split)

	if distinct < 2:
		raise DegenerateError("block-label leakage needs at least 2 blocks")

	spec = dataclasses.replace(spec, n_classes=n_labels, encoder_dim=max(spec.encoder_dim, n_labels))
	model, acc, low = fit_and_score(split, spec, cfg)

	row = ReportRow(spec.tag, condition, 'block', _percent(acc), _percent(chance_level(n_labels)),
		lowest_val_accuracy=_percent(low))
	logger.info("block-label leakage: %.1f%% against %.1f%% chance", row.accuracy, row.chance)
	return row, model


def per_subject_vs_pooled(dataset, spec, cfg, labels='class', seed=0, condition=''):
	"""Train per subject and pooled on the same image split.

	``dataset`` is a DatasetSplit or a list of stimulus segments.  Both
	analyses are tested subject by subject.
	"""
	if isinstance(dataset, DatasetSplit):
		split = dataset.with_labels(labels)
	else:
		split = make_splits(dataset, seed=seed).with_labels(labels)

	subjects = split.subjects()
	if len(subjects) < 2:
		raise SubjectError("per-subject vs pooled needs at least 2 subjects, got {}".format(len(subjects)))

	parts = {}
	for s in subjects:
		parts[s] = split.for_subject(s)

		if not all(parts[s].sizes()):
			raise SubjectError("subject {} has an empty split part {}".format(s, parts[s].sizes()))

	chance = _percent(chance_level(spec.n_classes))
	prefix = condition + ' ' if condition else ''

	single = []
	single_low = []
	for s in subjects:
		_, acc, low = fit_and_score(parts[s], spec, cfg)
		single.append(_percent(acc))
		single_low.append(_percent(low))
		logger.info("subject %d alone: %.1f%%", s, single[-1])

	model = train(build(spec), split, cfg)
	lowest = model.with_parameters(model.lowest_params)
	pooled = [_percent(evaluate(model, parts[s].test, labels)) for s in subjects]
	pooled_low = [_percent(evaluate(lowest, parts[s].test, labels)) for s in subjects]

	report = DiagnosticReport('per-subject-vs-pooled', metadata={'subjects': subjects, 'labels': labels})
	report.add(ReportRow(spec.tag, prefix + 'per-subject', labels, float(np.mean(single)), chance,
		per_subject=single, lowest_val_accuracy=float(np.mean(single_low))))
	report.add(ReportRow(spec.tag, prefix + 'pooled', labels, float(np.mean(pooled)), chance,
		per_subject=pooled, lowest_val_accuracy=float(np.mean(pooled_low))))

	logger.info("per-subject mean %.1f%%, pooled mean %.1f%%", report.rows[0].mean, report.rows[1].mean)
	return report


def duration_sweep(durations, params, spec, cfg, seeds=(0,), n_subjects=1, prep=None):
	"""Block-label (and blank) leakage of single-session rapid experiments
	of increasing length.

	Only the schedule length changes between durations; drift and vigilance
	act through the synthesized recordings.
	"""
	durations = list(durations)
	if len(durations) < 2:
		raise ValueError("a duration sweep needs at least 2 durations")

	prep = prep or Preprocessor(mode='raw')
	report = DiagnosticReport('duration-sweep', metadata={'durations': durations, 'seeds': list(seeds)})

	for minutes in durations:
		block_acc = []
		block_chance = []
		blank_acc = []
		blank_chance = []

		for seed in seeds:
			sched = schedule_for_duration(minutes, params.n_classes, seed)
			syntheses = synthesize_subjects(sched, params.replace(seed=seed), n_subjects)
			stimuli, blanks = build_dataset(syntheses, prep)
			split = make_splits(stimuli, seed=seed)

			row, model = block_label_leakage(split, spec, cfg, condition='{:g} min'.format(minutes))
			block_acc.append(row.accuracy)
			block_chance.append(row.chance)

			if blanks:
				blank = blank_leakage(model, blanks, 'blank-block-pair')
				blank_acc.append(blank.accuracy)
				blank_chance.append(blank.chance)

		chance = float(np.mean(block_chance))
		increases = [a - c for a, c in zip(block_acc, block_chance)]
		report.add(ReportRow(spec.tag, '{:g} min'.format(minutes), 'block', float(np.mean(block_acc)),
			chance, per_seed=block_acc, extra={'minutes': minutes, 'increase_per_seed': increases}))

		if blank_acc:
			report.add(ReportRow(spec.tag, '{:g} min'.format(minutes), 'blank-block-pair',
				float(np.mean(blank_acc)), float(np.mean(blank_chance)), per_seed=blank_acc,
				extra={'minutes': minutes}))

		logger.info("%g min: block-label increase over chance %+.1f points", minutes, float(np.mean(increases)))

	return report
