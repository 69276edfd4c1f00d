"""From synthesized sessions to labelled, preprocessed segments.

Three preprocessing modes are supported:

``filter``
	bandpass (and optional 50 Hz notch) along time over the whole session,
	then cut, trim and z-score; the proper pipeline.
``raw``
	no filtering, cut, trim and z-score.
``contaminate``
	cut and trim the raw signal, filter along the channel axis of each
	segment, then z-score; the misfiltered pipeline.
"""

import logging

from .core import BLANK_WINDOW, BLANK_OVERLAP, DISCARD, TARGET_LENGTH, Recording, trim_segment, split_blank, zscore_per_channel
from .filters import design_bandpass, design_notch, apply_filter, contaminate_channel_axis
from .errors import DataError

logger = logging.getLogger(__name__)

STIMULUS_WINDOW = 500
MODES = ('filter', 'raw', 'contaminate')


class Preprocessor:
	"""Holds the filters of one preprocessing setting and applies them."""

	def __init__(self, band=None, notch=False, mode='filter', zero_phase=False, fs=1000,
				 discard=DISCARD, target=TARGET_LENGTH):
		if mode not in MODES:
			raise ValueError("mode must be one of {}".format(', '.join(MODES)))

		if mode != 'raw' and band is None:
			raise ValueError("mode {} needs a band".format(mode))

		self.mode = mode
		self.zero_phase = zero_phase
		self.discard = discard
		self.target = target
		self.filters = []

		if band is not None and mode != 'raw':
			self.filters.append(design_bandpass(band[0], band[1], fs))

			if notch:
				self.filters.append(design_notch(fs=fs))

	def __repr__(self):
		return "<Preprocessor> {} {}".format(self.mode, self.filters)

	def session(self, rec):
		if self.mode != 'filter':
			return rec

		for spec in self.filters:
			rec = apply_filter(spec, rec, zero_phase=self.zero_phase)

		return rec

	def segment(self, seg):
		if self.mode == 'contaminate':
			for spec in self.filters:
				seg = contaminate_channel_axis(seg, spec, self.zero_phase)

		return zscore_per_channel(seg)


def preprocess_subject(synth, prep, blanks=True, window=BLANK_WINDOW, overlap=BLANK_OVERLAP):
	"""Return (stimulus_segments, blank_segments) for one synthesized subject."""
	sched = synth.schedule
	stimuli = []
	blank_segments = []

	for rec in synth.recordings:
		session = prep.session(rec)

		for index, ev in enumerate(sched.events):
			if ev.session_index != rec.session_id:
				continue

			start = session.sample_index(ev.onset_ms)

			if not ev.is_blank:
				raw = session.window(start, STIMULUS_WINDOW)
				seg = trim_segment(raw, prep.discard, prep.target,
					class_label = ev.class_id,
					block_label = ev.block_index,
					subject_id = synth.subject_id,
					session_id = rec.session_id,
					onset_ms = ev.onset_ms,
					image_id = ev.image_id
				)
				stimuli.append(prep.segment(seg))

			elif blanks:
				neighbors, blocks = sched.blank_context(index)
				n = int(round(ev.duration_ms * session.sampling_rate / 1000.0))
				interval = Recording(session.window(start, n), session.sampling_rate,
					synth.subject_id, rec.session_id, ev.onset_ms)

				for seg in split_blank(interval, window, overlap, neighbors, prep.discard,
									   prep.target, blocks, ev.block_index):
					blank_segments.append(prep.segment(seg))

	logger.debug("subject %d: %d stimulus and %d blank segments", synth.subject_id, len(stimuli), len(blank_segments))

	return stimuli, blank_segments


def build_dataset(syntheses, prep, blanks=True):
	"""Preprocess every subject and concatenate their segments."""
	if not syntheses:
		raise DataError("no subjects to preprocess")

	stimuli = []
	blank_segments = []

	for synth in syntheses:
		s, b = preprocess_subject(synth, prep, blanks)
		stimuli.extend(s)
		blank_segments.extend(b)

	logger.info("dataset: %d subjects, %d stimulus segments, %d blank segments",
		len(syntheses), len(stimuli), len(blank_segments))

	return stimuli, blank_segments
