"""Recordings, segments and the segment-level preprocessing steps."""

import logging
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, LengthError

logger = logging.getLogger(__name__)

BLANK = -1

SAMPLING_RATE = 1000
N_CHANNELS = 128
DISCARD = 20
TARGET_LENGTH = 440
BLANK_WINDOW = 500
BLANK_OVERLAP = 100


@dataclass
class Recording:
	"""Continuous multichannel recording, samples are channels x time (uV).

	``start_ms`` places sample 0 on the schedule clock, so event onsets can
	be mapped to sample indices of a single session recording.
	"""
	samples: np.ndarray
	sampling_rate: float = SAMPLING_RATE
	subject_id: int = 0
	session_id: int = 0
	start_ms: float = 0.0

	def __post_init__(self):
		self.samples = np.asarray(self.samples, dtype=np.float64)

		if self.samples.ndim != 2:
			raise DataError("recording samples must be a channels x time matrix")

		if not self.sampling_rate > 0:
			raise DataError("sampling rate must be positive, got {}".format(self.sampling_rate))

		if self.samples.shape[0] < 1:
			raise DataError("recording has no channels")

		if not np.all(np.isfinite(self.samples)):
			raise DataError("recording of subject {} contains non-finite samples".format(self.subject_id))

	@property
	def n_channels(self):
		return self.samples.shape[0]

	@property
	def n_samples(self):
		return self.samples.shape[1]

	@property
	def duration_ms(self):
		return self.n_samples * 1000.0 / self.sampling_rate

	def sample_index(self, time_ms):
		return int(round((time_ms - self.start_ms) * self.sampling_rate / 1000.0))

	def window(self, start, length):
		return self.samples[:, start:start+length]

	def __repr__(self):
		return "<Recording> subject {} session {}: {} channels x {} samples at {} Hz".format(
			self.subject_id, self.session_id, self.n_channels, self.n_samples, self.sampling_rate)


@dataclass
class Segment:
	"""Fixed-length window with its label set.

	``class_label`` is a class id, ``BLANK`` for blank-screen windows or None
	for an unlabelled window.  Blank windows carry the classes (and blocks)
	shown right before and after the blank.
	"""
	samples: np.ndarray
	class_label: int = None
	block_label: int = None
	blank_neighbors: tuple = None
	subject_id: int = 0
	onset_ms: float = 0.0
	image_id: int = -1
	session_id: int = 0
	neighbor_blocks: tuple = None
	degenerate_channels: tuple = field(default=())

	def __post_init__(self):
		self.samples = np.asarray(self.samples, dtype=np.float64)

		if self.samples.ndim != 2:
			raise DataError("segment samples must be a channels x time matrix")

		if self.class_label == BLANK and self.blank_neighbors is None:
			raise DataError("blank segment at {} ms has no neighbouring classes".format(self.onset_ms))

		if self.blank_neighbors is not None:
			if self.class_label != BLANK:
				raise DataError("only blank segments carry neighbouring classes")

			self.blank_neighbors = tuple(int(c) for c in self.blank_neighbors)

	@property
	def is_blank(self):
		return self.class_label == BLANK

	@property
	def n_channels(self):
		return self.samples.shape[0]

	@property
	def n_samples(self):
		return self.samples.shape[1]

	def label(self, kind):
		if kind == 'class':
			return self.class_label

		elif kind == 'block':
			return self.block_label

		raise ValueError("unknown label kind {}".format(kind))

	def replace(self, **changes):
		return dataclasses.replace(self, **changes)


def trim_segment(raw, discard=DISCARD, target=TARGET_LENGTH, **labels):
	"""Drop the first ``discard`` samples and cut to ``target`` samples.

	Extra keyword arguments become the fields of the returned Segment.
	"""
	raw = np.asarray(raw, dtype=np.float64)

	if raw.ndim != 2:
		raise DataError("raw window must be a channels x time matrix")

	if discard < 0 or target < 1:
		raise LengthError("discard must be >= 0 and target >= 1")

	if raw.shape[1] < discard + target:
		raise LengthError("window of {} samples is shorter than {} + {}".format(
			raw.shape[1], discard, target))

	return Segment(raw[:, discard:discard+target].copy(), **labels)


def window_starts(n_samples, window=BLANK_WINDOW, overlap=BLANK_OVERLAP):
	if not window > overlap >= 0:
		raise ValueError("window must exceed overlap and overlap must be >= 0")

	if n_samples < window:
		return []

	step = window - overlap
	return list(range(0, n_samples - window + 1, step))


def split_blank(rec, window=BLANK_WINDOW, overlap=BLANK_OVERLAP, neighbors=None,
				discard=DISCARD, target=TARGET_LENGTH, block_neighbors=None, block_label=None):
	"""Cut a blank interval into overlapping windows, each trimmed like a
	stimulus segment.  Windows that would run past the interval are dropped.
	"""
	if neighbors is None:
		raise DataError("blank windows need the classes before and after the blank")

	segments = []
	for start in window_starts(rec.n_samples, window, overlap):
		onset = rec.start_ms + start * 1000.0 / rec.sampling_rate
		segments.append(trim_segment(rec.window(start, window), discard, target,
			class_label = BLANK,
			block_label = block_label,
			blank_neighbors = neighbors,
			neighbor_blocks = block_neighbors,
			subject_id = rec.subject_id,
			session_id = rec.session_id,
			onset_ms = onset
		))

	return segments


def zscore_per_channel(seg):
	"""Per-channel z-score with the population standard deviation.

	Channels with zero variance are set to zero and listed in
	``degenerate_channels`` of the result.
	"""
	x = seg.samples
	mean = x.mean(axis=1, keepdims=True)
	centred = x - mean
	std = np.sqrt(np.mean(centred * centred, axis=1, keepdims=True))

	scale = np.maximum(np.abs(mean), 1.0) * np.finfo(np.float64).eps
	flat = (std <= scale)[:, 0]

	out = np.zeros_like(x)
	live = ~flat
	out[live] = centred[live] / std[live]

	degenerate = tuple(int(c) for c in np.flatnonzero(flat))
	if degenerate:
		logger.warning("segment at %s ms: %d zero-variance channel(s) zeroed", seg.onset_ms, len(degenerate))

	return seg.replace(samples=out, degenerate_channels=degenerate)
