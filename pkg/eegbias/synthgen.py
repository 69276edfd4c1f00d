"""Synthetic EEG experiments with known ground truth.

A schedule lays out stimuli and blank screens in time (block or rapid
design).  A recording is synthesized from it as the sum of a class-evoked
gamma-band response, slow drift and white noise.  The drift is what the
diagnostics are meant to catch: it follows the time course of the
experiment, not the stimulus content.
"""

import json
import math
import logging
import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .core import BLANK, SAMPLING_RATE, N_CHANNELS, Recording
from .errors import DataError, StratificationError

logger = logging.getLogger(__name__)

STIMULUS_MS = 500.0
BLANK_MS = 10000.0
BLOCK_SIZE = 50
SESSION_GAP_MS = 60000.0
LEAD_MS = 1000.0
TAIL_MS = 1000.0
ENVELOPE_MS = 100.0
SPLIT_RATIOS = (0.8, 0.1, 0.1)


@dataclass
class Event:
	onset_ms: float
	duration_ms: float
	class_id: int
	block_index: int
	session_index: int = 0
	image_id: int = -1

	@property
	def is_blank(self):
		return self.class_id == BLANK

	@property
	def end_ms(self):
		return self.onset_ms + self.duration_ms


@dataclass
class StimulusSchedule:
	"""Time-ordered stimulus and blank events.

	Blank events carry the block index of the block they follow.
	"""
	events: list
	design: str
	n_classes: int
	images_per_class: int
	stimulus_duration_ms: float = STIMULUS_MS
	blank_duration_ms: float = BLANK_MS

	def __post_init__(self):
		if self.design not in ('block', 'rapid'):
			raise DataError("unknown design {}".format(self.design))

		for prev, ev in zip(self.events, self.events[1:]):
			if ev.onset_ms < prev.end_ms:
				raise DataError("events at {} ms and {} ms overlap".format(prev.onset_ms, ev.onset_ms))

	def __len__(self):
		return len(self.events)

	def __iter__(self):
		return iter(self.events)

	def stimuli(self):
		return [ev for ev in self.events if not ev.is_blank]

	def blanks(self):
		return [ev for ev in self.events if ev.is_blank]

	@property
	def n_blocks(self):
		blocks = {ev.block_index for ev in self.events if not ev.is_blank}
		return len(blocks)

	@property
	def sessions(self):
		return sorted({ev.session_index for ev in self.events})

	def session_events(self, session):
		return [ev for ev in self.events if ev.session_index == session]

	def session_span(self, session):
		events = self.session_events(session)
		return events[0].onset_ms, events[-1].end_ms

	@property
	def duration_ms(self):
		if not self.events:
			return 0.0

		return self.events[-1].end_ms - self.events[0].onset_ms

	def blank_context(self, index):
		"""Return ((prev_class, next_class), (prev_block, next_block)) of the
		blank event at ``index``.
		"""
		ev = self.events[index]
		if not ev.is_blank:
			raise DataError("event {} is not a blank".format(index))

		before = [e for e in self.events[:index] if not e.is_blank and e.session_index == ev.session_index]
		after = [e for e in self.events[index+1:] if not e.is_blank and e.session_index == ev.session_index]

		if not before or not after:
			raise DataError("blank at {} ms is not between two stimuli".format(ev.onset_ms))

		return (before[-1].class_id, after[0].class_id), (before[-1].block_index, after[0].block_index)

	def to_dict(self):
		return {
			'design': self.design,
			'n_classes': self.n_classes,
			'images_per_class': self.images_per_class,
			'stimulus_duration_ms': self.stimulus_duration_ms,
			'blank_duration_ms': self.blank_duration_ms,
			'events': [dataclasses.asdict(ev) for ev in self.events]
		}

	@classmethod
	def from_dict(cls, data):
		events = [Event(**ev) for ev in data['events']]
		return cls(events, data['design'], data['n_classes'], data['images_per_class'],
			data.get('stimulus_duration_ms', STIMULUS_MS), data.get('blank_duration_ms', BLANK_MS))


def write_schedule(path, sched):
	with open(path, 'w') as fw:
		json.dump(sched.to_dict(), fw, indent=1)


def read_schedule(path):
	with open(path) as fh:
		return StimulusSchedule.from_dict(json.load(fh))


def _lay_out(blocks, sessions, stimulus_ms, blank_ms, session_gap_ms, rng=None, isi_jitter_ms=0.0):
	"""Place blocks of (class_id, image_id) pairs on the clock.

	``sessions`` is a list of lists of block indices.  The clock starts at
	LEAD_MS so recordings never begin before time zero.
	"""
	events = []
	clock = LEAD_MS

	for s, block_ids in enumerate(sessions):
		if s > 0:
			clock += session_gap_ms

		for k, b in enumerate(block_ids):
			if k > 0:
				events.append(Event(clock, blank_ms, BLANK, events[-1].block_index, s))
				clock += blank_ms

			for class_id, image_id in blocks[b]:
				events.append(Event(clock, stimulus_ms, int(class_id), int(b), s, int(image_id)))
				clock += stimulus_ms

				if isi_jitter_ms > 0:
					clock += float(rng.uniform(0.0, isi_jitter_ms))

	return events


def generate_schedule(design, n_classes=40, images_per_class=BLOCK_SIZE, sessions=4, seed=0,
					  block_size=BLOCK_SIZE, stimulus_ms=STIMULUS_MS, blank_ms=BLANK_MS,
					  session_gap_ms=SESSION_GAP_MS, isi_jitter_ms=0.0):
	"""Build a block or rapid design schedule.

	Block design shows all images of a class consecutively, classes are
	spread over ``sessions`` in a seeded order.  Rapid design shuffles all
	stimuli and cuts them into presentation blocks of ``block_size``, all in
	a single session.
	Image ids are ``class_id * images_per_class + k``.
	"""
	if n_classes < 2:
		raise ValueError("a schedule needs at least 2 classes")

	if images_per_class < 1:
		raise ValueError("images_per_class must be at least 1")

	if sessions < 1:
		raise ValueError("sessions must be at least 1")

	rng = np.random.default_rng(seed)

	if design == 'block':
		order = rng.permutation(n_classes)
		blocks = []

		for c in order:
			images = c * images_per_class + rng.permutation(images_per_class)
			blocks.append([(c, i) for i in images])

		groups = np.array_split(np.arange(n_classes), min(sessions, n_classes))

	elif design == 'rapid':
		if block_size < 1:
			raise ValueError("block_size must be at least 1")

		pairs = [(c, c * images_per_class + k) for c in range(n_classes) for k in range(images_per_class)]
		order = rng.permutation(len(pairs))
		shuffled = [pairs[i] for i in order]
		blocks = [shuffled[i:i+block_size] for i in range(0, len(shuffled), block_size)]
		#rapid design runs as one session whatever ``sessions`` says
		groups = [np.arange(len(blocks))]

	else:
		raise ValueError("design must be 'block' or 'rapid'")

	events = _lay_out(blocks, [list(g) for g in groups], stimulus_ms, blank_ms,
		session_gap_ms, rng, isi_jitter_ms)

	sched = StimulusSchedule(events, design, n_classes, images_per_class, stimulus_ms, blank_ms)
	logger.debug("%s schedule: %d stimuli in %d blocks, %d session(s)",
		design, len(sched.stimuli()), sched.n_blocks, len(sched.sessions))

	return sched


def schedule_for_duration(minutes, n_classes=40, seed=0, block_size=BLOCK_SIZE,
						  stimulus_ms=STIMULUS_MS, blank_ms=BLANK_MS):
	"""Single-session rapid schedule lasting roughly ``minutes``.

	Presentation blocks are added until the session length is reached,
	classes are balanced by giving every class the same image count.
	"""
	if not minutes > 0:
		raise ValueError("duration must be positive")

	block_ms = block_size * stimulus_ms + blank_ms
	n_blocks = max(2, int(round((minutes * 60000.0 + blank_ms) / block_ms)))
	images_per_class = max(1, int(round(n_blocks * block_size / float(n_classes))))

	return generate_schedule('rapid', n_classes, images_per_class, 1, seed, block_size, stimulus_ms, blank_ms)


def assign_block_labels(sched):
	"""Presentation-block index of every stimulus, in schedule order."""
	return [ev.block_index for ev in sched.stimuli()]


@dataclass
class NeuralModelParams:
	"""Generative model of one synthetic subject.

	Amplitudes are in uV, timescales in seconds.  ``drift_amplitude`` is the
	stationary std of the OU drift; each block adds a constant offset with
	std ``block_offset_scale * drift_amplitude``.  ``drift_channels`` limits
	the drift to a subset of channels (None means all).
	"""
	drift_amplitude: float
	evoked_amplitude: float = 1.0
	evoked_band: tuple = (55.0, 95.0)
	n_classes: int = 40
	n_channels: int = N_CHANNELS
	sampling_rate: float = SAMPLING_RATE
	drift_timescale_s: float = 20.0
	block_offset_scale: float = 1.0
	drift_channels: tuple = None
	vigilance_tau_s: float = math.inf
	artifact_gain: float = 0.0
	noise_std: float = 1.0
	subject_jitter: float = 0.0
	seed: int = 0
	spatial_patterns: np.ndarray = field(default=None, repr=False)

	def __post_init__(self):
		for name in ('drift_amplitude', 'evoked_amplitude', 'noise_std', 'artifact_gain',
					 'block_offset_scale', 'subject_jitter'):
			if not getattr(self, name) >= 0:
				raise DataError("{} must be >= 0".format(name))

		if not self.vigilance_tau_s > 0:
			raise DataError("vigilance_tau_s must be > 0")

		if not self.drift_timescale_s > 0:
			raise DataError("drift_timescale_s must be > 0")

		low, high = self.evoked_band
		if not 0 < low < high < self.sampling_rate / 2.0:
			raise DataError("evoked band {} is outside (0, {}) Hz".format(self.evoked_band, self.sampling_rate / 2.0))

		if self.drift_channels is not None:
			self.drift_channels = tuple(int(c) for c in self.drift_channels)

			if any(not 0 <= c < self.n_channels for c in self.drift_channels):
				raise DataError("drift channel out of range")

		if self.spatial_patterns is None:
			rng = np.random.default_rng([self.seed, 0x5a7])
			patterns = rng.standard_normal((self.n_classes, self.n_channels))
			self.spatial_patterns = patterns / np.linalg.norm(patterns, axis=1, keepdims=True)

		else:
			self.spatial_patterns = np.asarray(self.spatial_patterns, dtype=np.float64)

		if self.spatial_patterns.shape != (self.n_classes, self.n_channels):
			raise DataError("spatial_patterns must be n_classes x n_channels")

		if len(np.unique(np.round(self.spatial_patterns, 12), axis=0)) != self.n_classes:
			raise DataError("spatial patterns must be pairwise distinct")

	def replace(self, **changes):
		return dataclasses.replace(self, **changes)


@dataclass
class EventTruth:
	"""What went into the recording around one stimulus."""
	event: Event
	evoked_gain: float
	drift_scale: float


@dataclass
class Synthesis:
	recordings: list
	schedule: StimulusSchedule
	params: NeuralModelParams
	subject_id: int
	truth: list

	def recording(self, session):
		for rec in self.recordings:
			if rec.session_id == session:
				return rec

		raise KeyError(session)


def class_carriers(params, n_samples):
	"""Fixed band-limited waveform per class with raised-cosine edges.

	White noise is band-limited in the frequency domain to ``evoked_band``
	and scaled to unit RMS before the envelope is applied.
	"""
	rng = np.random.default_rng([params.seed, 0xca7])
	fs = params.sampling_rate

	freqs = np.fft.rfftfreq(n_samples, 1.0 / fs)
	passband = (freqs >= params.evoked_band[0]) & (freqs <= params.evoked_band[1])

	spectra = np.fft.rfft(rng.standard_normal((params.n_classes, n_samples)), axis=1)
	spectra[:, ~passband] = 0
	carriers = np.fft.irfft(spectra, n=n_samples, axis=1)
	carriers /= np.sqrt(np.mean(carriers ** 2, axis=1, keepdims=True))

	ramp = min(int(round(ENVELOPE_MS * fs / 1000.0)), n_samples // 2)
	envelope = np.ones(n_samples)
	if ramp > 0:
		edge = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
		envelope[:ramp] = edge
		envelope[n_samples-ramp:] = edge[::-1]

	return carriers * envelope


def subject_patterns(params, subject_id):
	if params.subject_jitter == 0:
		return params.spatial_patterns

	rng = np.random.default_rng([params.seed, subject_id, 0x5b7])
	mixed = params.spatial_patterns + params.subject_jitter * rng.standard_normal(params.spatial_patterns.shape) / math.sqrt(params.n_channels)
	return mixed / np.linalg.norm(mixed, axis=1, keepdims=True)


def ou_process(rng, n_channels, n_samples, fs, timescale_s, std):
	"""Per-channel stationary OU process, exact discretisation.

	x[n+1] = a x[n] + sqrt(1 - a^2) std w[n] with a = exp(-1 / (fs tau)),
	run as a first-order IIR recursion.
	"""
	if std == 0 or n_samples == 0:
		return np.zeros((n_channels, n_samples))

	a = math.exp(-1.0 / (fs * timescale_s))
	b = math.sqrt(1.0 - a * a) * std
	x0 = std * rng.standard_normal((n_channels, 1))
	w = rng.standard_normal((n_channels, n_samples))
	out, _ = signal.lfilter([b], [1.0, -a], w, axis=1, zi=a * x0)
	return out


def _vigilance(t_s, tau_s):
	if math.isinf(tau_s):
		return np.ones_like(t_s)

	return np.exp(-t_s / tau_s)


def _block_spans(events, start_ms, end_ms):
	"""Time span of every block in a session, split at blank midpoints."""
	spans = []
	current = None
	left = start_ms

	for ev in events:
		if ev.is_blank:
			mid = ev.onset_ms + ev.duration_ms / 2.0
			if current is not None:
				spans.append((current, left, mid))
				current = None
			left = mid

		elif current is None:
			current = ev.block_index

	if current is not None:
		spans.append((current, left, end_ms))

	return spans


def synthesize_recording(sched, params, subject_id=0):
	"""Render a schedule into one Recording per session.

	samples = evoked + drift + noise where the evoked response of a stimulus
	is ``amplitude * exp(-t / vigilance_tau) * pattern[class] x carrier[class]``,
	t being the time since session start.  Drift is an OU process plus a
	constant offset per presentation block, scaled by
	``1 + artifact_gain * (1 - exp(-t / vigilance_tau))``.
	"""
	fs = params.sampling_rate
	rng = np.random.default_rng(np.random.SeedSequence([params.seed, subject_id]))

	stim_samples = int(round(sched.stimulus_duration_ms * fs / 1000.0))
	carriers = class_carriers(params, stim_samples)
	patterns = subject_patterns(params, subject_id)

	if params.drift_channels is None:
		drift_mask = np.ones((params.n_channels, 1))
	else:
		drift_mask = np.zeros((params.n_channels, 1))
		drift_mask[list(params.drift_channels)] = 1.0

	n_blocks = max(ev.block_index for ev in sched.events) + 1
	offsets = params.block_offset_scale * params.drift_amplitude * rng.standard_normal((n_blocks, params.n_channels))

	recordings = []
	truth = []

	for session in sched.sessions:
		events = sched.session_events(session)
		first, last = sched.session_span(session)
		start_ms = max(first - LEAD_MS, 0.0)
		n_samples = int(round((last + TAIL_MS - start_ms) * fs / 1000.0))
		t_s = (np.arange(n_samples) / fs) + (start_ms - first) / 1000.0
		t_s = np.maximum(t_s, 0.0)

		drift = ou_process(rng, params.n_channels, n_samples, fs, params.drift_timescale_s, params.drift_amplitude)
		for block, left, right in _block_spans(events, start_ms, start_ms + n_samples * 1000.0 / fs):
			i = int(round((left - start_ms) * fs / 1000.0))
			j = int(round((right - start_ms) * fs / 1000.0))
			drift[:, i:j] += offsets[block][:, None]

		growth = 1.0 + params.artifact_gain * (1.0 - _vigilance(t_s, params.vigilance_tau_s))
		samples = drift * drift_mask * growth[None, :]

		samples += params.noise_std * rng.standard_normal((params.n_channels, n_samples))

		for ev in events:
			if ev.is_blank:
				continue

			i = int(round((ev.onset_ms - start_ms) * fs / 1000.0))
			gain = params.evoked_amplitude * float(_vigilance(np.array((ev.onset_ms - first) / 1000.0), params.vigilance_tau_s))
			if gain > 0:
				samples[:, i:i+stim_samples] += gain * np.outer(patterns[ev.class_id], carriers[ev.class_id])

			truth.append(EventTruth(ev, gain, float(growth[i])))

		recordings.append(Recording(samples, fs, subject_id, session, start_ms))

	logger.debug("subject %d: synthesized %d session(s), %d stimuli", subject_id, len(recordings), len(truth))

	return Synthesis(recordings, sched, params, subject_id, truth)


def synthesize_subjects(sched, params, n_subjects, subject_params=None):
	"""One Synthesis per subject.  ``subject_params`` maps a subject id to
	its own NeuralModelParams."""
	out = []
	for s in range(n_subjects):
		p = params
		if subject_params and s in subject_params:
			p = subject_params[s]

		out.append(synthesize_recording(sched, p, s))

	return out


def subjects_of(segments):
	"""Sorted distinct subject ids of a list of segments."""
	return sorted({seg.subject_id for seg in segments})


@dataclass
class DatasetSplit:
	"""Train/validation/test segments and the label kind to learn."""
	train: list
	val: list
	test: list
	labels: str = 'class'

	def __iter__(self):
		return iter((self.train, self.val, self.test))

	def subjects(self):
		return subjects_of(seg for part in self for seg in part)

	def for_subject(self, subject_id):
		pick = lambda part: [seg for seg in part if seg.subject_id == subject_id]
		return DatasetSplit(pick(self.train), pick(self.val), pick(self.test), self.labels)

	def with_labels(self, kind):
		if kind not in ('class', 'block'):
			raise ValueError("split labels must be 'class' or 'block'")

		return DatasetSplit(self.train, self.val, self.test, kind)

	def sizes(self):
		return len(self.train), len(self.val), len(self.test)


def _split_counts(n, ratios):
	val = max(1, int(math.floor(ratios[1] * n + 0.5)))
	test = max(1, int(math.floor(ratios[2] * n + 0.5)))
	return n - val - test, val, test


def make_splits(segments, ratios=SPLIT_RATIOS, seed=0):
	"""Split segments by image id, stratified by class.

	Every image of a class goes to exactly one part, together with the
	segments of all subjects that saw it.
	"""
	if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
		raise ValueError("ratios must be three non-negative values summing to 1")

	images = {}
	for seg in segments:
		if seg.image_id < 0:
			raise DataError("segment at {} ms has no image id".format(seg.onset_ms))

		images.setdefault(seg.class_label, set()).add(seg.image_id)

	rng = np.random.default_rng(seed)
	part_of = {}

	for c in sorted(images):
		ids = sorted(images[c])

		if len(ids) < 3:
			raise StratificationError("class {} has {} image(s), at least 3 are needed".format(c, len(ids)))

		n_train, n_val, _ = _split_counts(len(ids), ratios)
		if n_train < 1:
			raise StratificationError("class {} has too few images for ratios {}".format(c, ratios))

		ids = [ids[i] for i in rng.permutation(len(ids))]
		for k, image in enumerate(ids):
			part_of[image] = 0 if k < n_train else 1 if k < n_train + n_val else 2

	parts = ([], [], [])
	for seg in segments:
		parts[part_of[seg.image_id]].append(seg)

	return DatasetSplit(*parts)
