"""IIR filter design and application.

Filters are second-order-section cascades designed with scipy.signal.  A
Butterworth bandpass of order 2 becomes two biquads; the bilinear transform
is pre-warped at both cutoffs so the -3 dB points land on the requested
frequencies.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core import Recording, Segment
from .errors import CutoffError, DataError

logger = logging.getLogger(__name__)

BANDPASS_ORDER = 2
NOTCH_Q = 30.0
MAINS_HZ = 50.0


@dataclass(frozen=True, eq=False)
class FilterSpec:
	"""Immutable biquad cascade.

	``sos`` is the scipy layout, one row ``(b0, b1, b2, 1, a1, a2)`` per
	section.  ``cutoffs`` is ``(low, high)`` for a bandpass and
	``(center, q)`` for a notch.
	"""
	kind: str
	cutoffs: tuple
	fs: float
	sos: np.ndarray

	def __post_init__(self):
		sos = np.array(self.sos, dtype=np.float64)
		sos.setflags(write=False)
		object.__setattr__(self, 'sos', sos)

		if not np.all(np.isfinite(sos)):
			raise CutoffError("{} filter has non-finite coefficients".format(self.kind))

		if np.any(np.abs(self.poles()) >= 1.0):
			raise CutoffError("{} filter {} is unstable".format(self.kind, self.cutoffs))

	@property
	def sections(self):
		"""Coefficients as (b0, b1, b2, a1, a2) tuples."""
		return [tuple(float(v) for v in (s[0], s[1], s[2], s[4], s[5])) for s in self.sos]

	def poles(self):
		return np.concatenate([np.roots(s[3:]) for s in self.sos])

	def __repr__(self):
		return "<FilterSpec> {} {} at {} Hz, {} sections".format(
			self.kind, self.cutoffs, self.fs, len(self.sos))


def _check_frequency(name, value, fs):
	if not 0 < value < fs / 2.0:
		raise CutoffError("{} of {} Hz is outside (0, {}) Hz".format(name, value, fs / 2.0))


def design_bandpass(low_hz, high_hz, fs=1000, order=BANDPASS_ORDER):
	if fs <= 0:
		raise CutoffError("sampling rate must be positive")

	_check_frequency('low cutoff', low_hz, fs)
	_check_frequency('high cutoff', high_hz, fs)

	if not low_hz < high_hz:
		raise CutoffError("low cutoff {} Hz must be below high cutoff {} Hz".format(low_hz, high_hz))

	sos = signal.butter(order, [low_hz, high_hz], btype='bandpass', fs=fs, output='sos')
	return FilterSpec('bandpass', (float(low_hz), float(high_hz)), float(fs), sos)


def design_notch(center_hz=MAINS_HZ, q=NOTCH_Q, fs=1000):
	if fs <= 0:
		raise CutoffError("sampling rate must be positive")

	_check_frequency('notch center', center_hz, fs)

	if not q > 0:
		raise CutoffError("notch quality factor must be positive, got {}".format(q))

	b, a = signal.iirnotch(center_hz, q, fs=fs)
	sos = signal.tf2sos(b, a)
	return FilterSpec('notch', (float(center_hz), float(q)), float(fs), sos)


def frequency_response(spec, freqs):
	"""Complex response of the cascade at ``freqs`` (Hz)."""
	_, h = signal.sosfreqz(spec.sos, worN=np.asarray(freqs, dtype=np.float64), fs=spec.fs)
	return h


def filter_array(spec, x, axis=-1, zero_phase=False):
	x = np.asarray(x, dtype=np.float64)

	if not np.all(np.isfinite(x)):
		raise DataError("cannot filter non-finite samples")

	#scipy rejects read-only coefficient buffers
	sos = np.array(spec.sos)

	if zero_phase:
		return signal.sosfiltfilt(sos, x, axis=axis)

	return signal.sosfilt(sos, x, axis=axis)


def apply_filter(spec, rec, axis='time', zero_phase=False):
	"""Filter every channel of a Recording or Segment along time.

	Causal forward filtering by default; ``zero_phase`` runs the cascade
	forward and backward instead.
	"""
	if axis == 'time':
		ax = 1
	elif axis == 'channel':
		ax = 0
	else:
		raise ValueError("axis must be 'time' or 'channel'")

	if isinstance(rec, Recording) and spec.fs != rec.sampling_rate:
		logger.warning("filter designed for %s Hz applied to a %s Hz recording", spec.fs, rec.sampling_rate)

	out = filter_array(spec, rec.samples, axis=ax, zero_phase=zero_phase)

	if isinstance(rec, Segment):
		return rec.replace(samples=out)

	return Recording(out, rec.sampling_rate, rec.subject_id, rec.session_id, rec.start_ms)


def contaminate_channel_axis(seg, spec, zero_phase=False):
	"""Filter across channels instead of time.

	At every time index the channel vector, in stored channel order, is
	treated as a 1-D signal sampled at the filter's rate.  This is the
	transposed-filtering mistake that leaves a near-regular pattern over
	time.
	"""
	return apply_filter(spec, seg, axis='channel', zero_phase=zero_phase)
