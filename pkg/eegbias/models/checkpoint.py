"""EEGM blobs and training history files.

An EEGM blob is ``b'EEGM' | u32 version | u32 descriptor length`` followed
by a UTF-8 JSON descriptor and the float32 little endian arrays it lists,
in order.  The descriptor's ``tag`` says what the blob holds (``model``,
``codebook``, ``regressor``).
"""

import csv
import json
import struct

import numpy as np

from .network import ModelSpec, TrainedModel, build_network
from ..errors import FormatError

MAGIC = b'EEGM'
VERSION = 1

_header = struct.Struct('<4sII')

HISTORY_FIELDS = ['epoch', 'train_loss', 'train_acc', 'val_acc']


def write_blob(path, tag, meta, arrays):
	names = list(arrays)
	descriptor = {
		'tag': tag,
		'meta': meta,
		'arrays': [{'name': k, 'shape': list(np.shape(arrays[k]))} for k in names]
	}
	text = json.dumps(descriptor, sort_keys=True).encode('utf-8')

	with open(path, 'wb') as fw:
		fw.write(_header.pack(MAGIC, VERSION, len(text)))
		fw.write(text)

		for k in names:
			fw.write(np.ascontiguousarray(arrays[k], dtype='<f4').tobytes())


def read_blob(path, tag=None):
	"""Return (tag, meta, arrays).  ``tag`` rejects blobs of another kind."""
	with open(path, 'rb') as fh:
		head = fh.read(_header.size)

		if len(head) < _header.size:
			raise FormatError("{} is too short to be an EEGM blob".format(path))

		magic, version, size = _header.unpack(head)

		if magic != MAGIC:
			raise FormatError("{} is not an EEGM blob".format(path))

		if version != VERSION:
			raise FormatError("{} has unsupported EEGM version {}".format(path, version))

		try:
			descriptor = json.loads(fh.read(size).decode('utf-8'))
		except ValueError:
			raise FormatError("{} has a corrupt descriptor".format(path))

		if tag is not None and descriptor['tag'] != tag:
			raise FormatError("{} holds a {}, not a {}".format(path, descriptor['tag'], tag))

		arrays = {}
		for item in descriptor['arrays']:
			shape = tuple(item['shape'])
			count = int(np.prod(shape))
			data = fh.read(count * 4)

			if len(data) < count * 4:
				raise FormatError("{} is truncated in array {}".format(path, item['name']))

			arrays[item['name']] = np.frombuffer(data, dtype='<f4').astype(np.float64).reshape(shape)

	return descriptor['tag'], descriptor['meta'], arrays


def save_model(path, model):
	meta = {
		'spec': model.spec.to_dict(),
		'selected_epoch': model.selected_epoch,
		'lowest_epoch': model.lowest_epoch,
		'history': model.history
	}
	write_blob(path, 'model', meta, model.network.parameters())


def load_model(path):
	_, meta, arrays = read_blob(path, 'model')
	spec = ModelSpec.from_dict(meta['spec'])
	network = build_network(spec)
	network.load_parameters(arrays)

	return TrainedModel(spec, network, meta['history'], meta['selected_epoch'], meta['lowest_epoch'])


def write_history(path, history):
	with open(path, 'w', newline='') as fw:
		writer = csv.DictWriter(fw, fieldnames=HISTORY_FIELDS, lineterminator='\n')
		writer.writeheader()

		for row in history:
			writer.writerow({k: row[k] for k in HISTORY_FIELDS})


def read_history(path):
	with open(path, newline='') as fh:
		return [{
			'epoch': int(row['epoch']),
			'train_loss': float(row['train_loss']),
			'train_acc': float(row['train_acc']),
			'val_acc': float(row['val_acc'])
		} for row in csv.DictReader(fh)]
