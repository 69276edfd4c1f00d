"""EEGB1 binary container.

Layout (all little endian)::

	b'EEGB' | u32 version=1 | u32 n_channels | u32 sampling_rate_hz | u32 n_segments
	per segment:
		u32 n_samples | i32 class_label (-1 blank) | u32 block_index
		u32 subject_id | u32 session_id | u64 onset_ms
		n_channels x n_samples float32, channel-major

Labels the container cannot hold (image ids, neighbouring classes of blank
windows, missing labels) live in a JSON sidecar named ``<file>.sgi``.
"""

import os
import json
import struct
import logging

import numpy as np

from .core import BLANK, Recording, Segment
from .errors import FormatError

logger = logging.getLogger(__name__)

MAGIC = b'EEGB'
VERSION = 1

_header = struct.Struct('<4sIIII')
_entry = struct.Struct('<IiIIIQ')


def index_path(path):
	return '{}.sgi'.format(path)


def _write(path, n_channels, sampling_rate, entries):
	with open(path, 'wb') as fw:
		fw.write(_header.pack(MAGIC, VERSION, n_channels, int(round(sampling_rate)), len(entries)))

		for samples, class_label, block_index, subject_id, session_id, onset_ms in entries:
			if samples.shape[0] != n_channels:
				raise FormatError("all entries of an EEGB1 file must have {} channels".format(n_channels))

			if onset_ms < 0:
				raise FormatError("EEGB1 onsets are unsigned, got {} ms".format(onset_ms))

			fw.write(_entry.pack(samples.shape[1], class_label, block_index,
				subject_id, session_id, int(round(onset_ms))))
			fw.write(np.ascontiguousarray(samples, dtype='<f4').tobytes())


def _read(path):
	with open(path, 'rb') as fh:
		head = fh.read(_header.size)

		if len(head) < _header.size:
			raise FormatError("{} is too short to be an EEGB1 file".format(path))

		magic, version, n_channels, sampling_rate, n_entries = _header.unpack(head)

		if magic != MAGIC:
			raise FormatError("{} is not an EEGB file (magic {!r})".format(path, magic))

		if version != VERSION:
			raise FormatError("{} has unsupported EEGB version {}".format(path, version))

		entries = []
		for i in range(n_entries):
			raw = fh.read(_entry.size)

			if len(raw) < _entry.size:
				raise FormatError("{} is truncated at entry {}".format(path, i))

			n_samples, class_label, block_index, subject_id, session_id, onset_ms = _entry.unpack(raw)
			size = n_channels * n_samples * 4
			data = fh.read(size)

			if len(data) < size:
				raise FormatError("{} is truncated in the samples of entry {}".format(path, i))

			samples = np.frombuffer(data, dtype='<f4').reshape(n_channels, n_samples).astype(np.float64)
			entries.append((samples, class_label, block_index, subject_id, session_id, onset_ms))

	return n_channels, sampling_rate, entries


def write_segments(path, segments, sampling_rate, index=True):
	if not segments:
		raise FormatError("no segments to write")

	entries = []
	for seg in segments:
		label = BLANK if seg.class_label is None else seg.class_label
		block = 0 if seg.block_label is None else seg.block_label
		entries.append((seg.samples, label, block, seg.subject_id, seg.session_id, seg.onset_ms))

	_write(path, segments[0].n_channels, sampling_rate, entries)

	if index:
		rows = [{
			'class_label': seg.class_label,
			'block_label': seg.block_label,
			'image_id': seg.image_id,
			'blank_neighbors': list(seg.blank_neighbors) if seg.blank_neighbors else None,
			'neighbor_blocks': list(seg.neighbor_blocks) if seg.neighbor_blocks else None
		} for seg in segments]

		with open(index_path(path), 'w') as fw:
			json.dump({'format': 'eegbias-segment-index', 'version': 1, 'segments': rows}, fw)

	logger.debug("wrote %d segments to %s", len(segments), path)


def read_segments(path):
	"""Return (segments, sampling_rate).  Uses the .sgi sidecar when present."""
	_, sampling_rate, entries = _read(path)

	rows = None
	if os.path.exists(index_path(path)):
		with open(index_path(path)) as fh:
			rows = json.load(fh)['segments']

		if len(rows) != len(entries):
			raise FormatError("{} lists {} segments, container has {}".format(
				index_path(path), len(rows), len(entries)))

	segments = []
	for i, (samples, class_label, block_index, subject_id, session_id, onset_ms) in enumerate(entries):
		fields = {
			'class_label': class_label,
			'block_label': block_index,
			'subject_id': subject_id,
			'session_id': session_id,
			'onset_ms': float(onset_ms)
		}

		if rows is not None:
			row = rows[i]
			fields['class_label'] = row['class_label']
			fields['block_label'] = row['block_label']
			fields['image_id'] = row['image_id']
			fields['blank_neighbors'] = tuple(row['blank_neighbors']) if row['blank_neighbors'] else None
			fields['neighbor_blocks'] = tuple(row['neighbor_blocks']) if row['neighbor_blocks'] else None

		elif class_label == BLANK:
			fields['class_label'] = None

		segments.append(Segment(samples, **fields))

	return segments, sampling_rate


def write_recordings(path, recordings):
	"""Store continuous recordings, one unlabelled entry per session."""
	if not recordings:
		raise FormatError("no recordings to write")

	rates = {rec.sampling_rate for rec in recordings}
	if len(rates) != 1:
		raise FormatError("recordings in one EEGB1 file must share a sampling rate")

	entries = [(rec.samples, BLANK, 0, rec.subject_id, rec.session_id, rec.start_ms) for rec in recordings]
	_write(path, recordings[0].n_channels, recordings[0].sampling_rate, entries)


def read_recordings(path):
	_, sampling_rate, entries = _read(path)

	return [Recording(samples, sampling_rate, subject_id, session_id, float(onset_ms))
		for samples, _, _, subject_id, session_id, onset_ms in entries]
