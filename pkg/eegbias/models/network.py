"""Model families and their encoder/classifier split.

A network is a list of encoder layers followed by a (possibly empty) list
of head layers.  The encoding of a segment is the activation between the
two.  When the head is empty the encoding itself is used as the logits;
predictions only ever look at the first ``n_classes`` entries.
"""

import logging
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .layers import Dense, ReLU, Flatten, Decimate, ChannelwiseConv1d, Conv1d, LSTM
from ..core import N_CHANNELS, TARGET_LENGTH
from ..errors import SpecError

logger = logging.getLogger(__name__)

FAMILIES = ('linear-softmax', 'channelwise-cnn', 'pooled-cnn', 'recurrent-encoder')
HEADS = ('direct', 'relu-only', 'fc-only', 'fc40', 'fc40-relu', 'relu-fc40')

#heads that put an encoder_dim wide layer in front of the boundary or the logits
WIDE_HEADS = ('relu-only', 'fc-only', 'relu-fc40')

DEFAULT_FILTERS = {
	'channelwise-cnn': 4,
	'pooled-cnn': 16
}


@dataclass
class ModelSpec:
	family: str
	n_classes: int = 40
	n_channels: int = N_CHANNELS
	n_samples: int = TARGET_LENGTH
	head: str = 'direct'
	encoder_dim: int = 128
	downsample: int = None
	n_filters: int = None
	kernel_size: int = 9
	pool: int = 8
	seed: int = 0

	def __post_init__(self):
		if self.family not in FAMILIES:
			raise SpecError("unknown model family {}".format(self.family))

		if self.head not in HEADS:
			raise SpecError("unknown head {}".format(self.head))

		if self.family == 'linear-softmax' and self.head != 'direct':
			raise SpecError("linear-softmax only has the direct head")

		if self.downsample is None:
			self.downsample = 4 if self.family == 'recurrent-encoder' else 1

		if self.n_filters is None:
			self.n_filters = DEFAULT_FILTERS.get(self.family, 0)

		if self.n_classes < 2:
			raise SpecError("n_classes must be at least 2")

		if self.n_channels < 1 or self.n_samples < 1:
			raise SpecError("input must have at least one channel and one sample")

		if self.downsample < 1:
			raise SpecError("downsample factor must be >= 1")

		if self.head in WIDE_HEADS and self.encoder_dim < self.n_classes:
			raise SpecError("encoder_dim {} is smaller than n_classes {}".format(self.encoder_dim, self.n_classes))

		steps = self.n_samples // self.downsample
		if steps < 1:
			raise SpecError("downsampling by {} leaves no time steps".format(self.downsample))

		if self.family in ('channelwise-cnn', 'pooled-cnn'):
			if self.n_filters < 1 or self.kernel_size < 1 or self.pool < 1:
				raise SpecError("filters, kernel size and pool must be >= 1")

			if (steps - self.kernel_size + 1) // self.pool < 1:
				raise SpecError("kernel {} and pool {} do not fit {} time steps".format(
					self.kernel_size, self.pool, steps))

	@property
	def tag(self):
		return '{}/{}'.format(self.family, self.head)

	def to_dict(self):
		return dataclasses.asdict(self)

	@classmethod
	def from_dict(cls, data):
		return cls(**data)


class Network:
	def __init__(self, encoder, head):
		self.encoder = encoder
		self.head = head

	@property
	def layers(self):
		return self.encoder + self.head

	def encode(self, x):
		for layer in self.encoder:
			x = layer.forward(x)

		return x

	def forward(self, x):
		for layer in self.layers:
			x = layer.forward(x)

		return x

	def backward(self, grad):
		for layer in reversed(self.layers):
			grad = layer.backward(grad)

		return grad

	def parameters(self):
		"""Name to array mapping, the arrays are the live layer parameters."""
		return {'{}.{}'.format(i, k): v for i, layer in enumerate(self.layers) for k, v in layer.params.items()}

	def gradients(self):
		return {'{}.{}'.format(i, k): v for i, layer in enumerate(self.layers) for k, v in layer.grads.items()}

	def copy_parameters(self):
		return {k: v.copy() for k, v in self.parameters().items()}

	def load_parameters(self, values):
		params = self.parameters()

		if set(values) != set(params):
			raise SpecError("parameter names do not match the network")

		for k, v in values.items():
			if params[k].shape != np.shape(v):
				raise SpecError("parameter {} has shape {}, expected {}".format(k, np.shape(v), params[k].shape))

			params[k][...] = v

	@property
	def n_params(self):
		return sum(layer.n_params for layer in self.layers)

	def __repr__(self):
		return "<Network> {} || {}".format(' -> '.join(map(repr, self.encoder)), ' -> '.join(map(repr, self.head)))


def _trunk(spec, rng):
	"""Family specific layers and the width of their flattened output."""
	layers = []
	if spec.downsample > 1:
		layers.append(Decimate(spec.downsample))

	steps = spec.n_samples // spec.downsample

	if spec.family == 'linear-softmax':
		layers.append(Flatten())
		return layers, spec.n_channels * steps

	if spec.family == 'recurrent-encoder':
		layers.append(LSTM(spec.n_channels, spec.encoder_dim, rng))
		return layers, spec.encoder_dim

	pooled = (steps - spec.kernel_size + 1) // spec.pool

	if spec.family == 'channelwise-cnn':
		layers.append(ChannelwiseConv1d(spec.n_channels, spec.n_filters, spec.kernel_size, rng))
		width = spec.n_channels * spec.n_filters * pooled
	else:
		layers.append(Conv1d(spec.n_channels, spec.n_filters, spec.kernel_size, rng))
		width = spec.n_filters * pooled

	layers.extend([ReLU(), Decimate(spec.pool), Flatten()])
	return layers, width


def build_network(spec):
	rng = np.random.default_rng(spec.seed)
	encoder, width = _trunk(spec, rng)
	k = spec.n_classes
	e = spec.encoder_dim
	head = []

	if spec.head == 'direct':
		if spec.family == 'linear-softmax':
			encoder.append(Dense(width, k, rng))
		else:
			head.append(Dense(width, k, rng))

	elif spec.head == 'relu-only':
		encoder.extend([Dense(width, e, rng), ReLU()])

	elif spec.head == 'fc-only':
		encoder.append(Dense(width, e, rng))

	elif spec.head == 'fc40':
		encoder.append(Dense(width, k, rng))

	elif spec.head == 'fc40-relu':
		encoder.extend([Dense(width, k, rng), ReLU()])

	elif spec.head == 'relu-fc40':
		encoder.extend([Dense(width, e, rng), ReLU()])
		head.append(Dense(e, k, rng))

	return Network(encoder, head)


@dataclass
class TrainedModel:
	"""Network plus its spec and training record.

	``selected_epoch`` is the best-validation checkpoint loaded into the
	network; ``lowest_epoch``/``lowest_params`` keep the lowest-validation
	checkpoint for auditing.
	"""
	spec: ModelSpec
	network: Network
	history: list = field(default_factory=list)
	selected_epoch: int = None
	lowest_epoch: int = None
	lowest_params: dict = field(default=None, repr=False)

	@property
	def n_params(self):
		return self.network.n_params

	@property
	def trained(self):
		return self.selected_epoch is not None

	def selected(self):
		if not self.trained:
			return None

		return self.history[self.selected_epoch]

	def lowest(self):
		if self.lowest_epoch is None:
			return None

		return self.history[self.lowest_epoch]

	def with_parameters(self, values):
		"""Copy of the model with other parameter values loaded."""
		clone = TrainedModel(self.spec, build_network(self.spec), self.history,
			self.selected_epoch, self.lowest_epoch, self.lowest_params)
		clone.network.load_parameters(values)
		return clone


def build(spec):
	"""Untrained model for ``spec`` with seeded uniform initialisation."""
	network = build_network(spec)
	logger.debug("built %s: %s, %d parameters", spec.tag, network, network.n_params)
	return TrainedModel(spec, network)
