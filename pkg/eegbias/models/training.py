"""Mini-batch training, evaluation and gradient checking."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_softmax, softmax

from ..core import BLANK
from ..errors import DataError, EvalError, SpecError, TrainingError

logger = logging.getLogger(__name__)

LABEL_KINDS = ('class', 'block', 'blank-pair', 'blank-block-pair')
EVAL_BATCH = 256


@dataclass
class TrainConfig:
	lr: float = 0.001
	batch: int = 16
	epochs: int = 200
	beta1: float = 0.9
	beta2: float = 0.999
	eps: float = 1e-8
	seed: int = 0

	def __post_init__(self):
		if not self.lr > 0:
			raise SpecError("learning rate must be > 0")

		if self.batch < 1:
			raise SpecError("batch size must be >= 1")

		if self.epochs < 1:
			raise SpecError("epochs must be >= 1")


class Adam:
	"""Adam with bias-corrected moments, updates parameters in place."""

	def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
		self.lr = lr
		self.beta1 = beta1
		self.beta2 = beta2
		self.eps = eps
		self.m = {}
		self.v = {}
		self.t = 0

	def step(self, params, grads):
		self.t += 1
		bc1 = 1.0 - self.beta1 ** self.t
		bc2 = 1.0 - self.beta2 ** self.t

		for k, p in params.items():
			g = grads[k]

			if k not in self.m:
				self.m[k] = np.zeros_like(p)
				self.v[k] = np.zeros_like(p)

			self.m[k] *= self.beta1
			self.m[k] += (1.0 - self.beta1) * g
			self.v[k] *= self.beta2
			self.v[k] += (1.0 - self.beta2) * (g * g)

			p -= (self.lr / bc1) * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.eps)


def stack(segments):
	if not segments:
		raise EvalError("no segments")

	return np.stack([seg.samples for seg in segments])


def labels_of(segments, kind):
	if kind not in ('class', 'block'):
		raise ValueError("training labels must be 'class' or 'block'")

	y = [seg.label(kind) for seg in segments]

	if any(v is None or v == BLANK for v in y):
		raise DataError("some segments have no {} label".format(kind))

	return np.asarray(y, dtype=np.int64)


def cross_entropy(logits, y):
	"""Mean softmax cross-entropy and its gradient w.r.t. the logits."""
	logp = log_softmax(logits, axis=1)
	n = len(y)
	loss = -logp[np.arange(n), y].mean()
	grad = np.exp(logp)
	grad[np.arange(n), y] -= 1.0
	return loss, grad / n


def probabilities(logits):
	return softmax(logits, axis=1)


def _argmax(logits, n_classes):
	#argmax keeps the lowest index on ties
	return np.argmax(logits[:, :n_classes], axis=1)


def _check_range(y, n_classes):
	if len(y) and (y.min() < 0 or y.max() >= n_classes):
		raise DataError("labels must lie in [0, {})".format(n_classes))


def train(model, split, cfg=None):
	"""Train ``model`` on ``split`` with mini-batch Adam.

	Returns the model with the best validation checkpoint loaded (ties go to
	the earliest epoch).  The lowest validation checkpoint is kept next to
	it.  Both are chosen from the per-epoch history.
	"""
	cfg = cfg or TrainConfig()
	spec = model.spec
	net = model.network

	if not split.train or not split.val:
		raise DataError("training needs non-empty train and validation parts")

	X = stack(split.train)
	y = labels_of(split.train, split.labels)
	Xv = stack(split.val)
	yv = labels_of(split.val, split.labels)
	_check_range(y, spec.n_classes)
	_check_range(yv, spec.n_classes)

	rng = np.random.default_rng(cfg.seed)
	opt = Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
	params = net.parameters()

	history = []
	best = (-1.0, None, None)
	lowest = (2.0, None, None)

	for epoch in range(cfg.epochs):
		order = rng.permutation(len(X))
		total = 0.0
		correct = 0

		for i in range(0, len(order), cfg.batch):
			idx = order[i:i+cfg.batch]
			logits = net.forward(X[idx])
			loss, grad = cross_entropy(logits, y[idx])

			if not np.isfinite(loss):
				raise TrainingError("loss became {} in epoch {}".format(loss, epoch), epoch)

			net.backward(grad)
			opt.step(params, net.gradients())

			total += loss * len(idx)
			correct += int(np.sum(_argmax(logits, spec.n_classes) == y[idx]))

		val_acc = float(np.mean(_predict_array(net, Xv, spec.n_classes) == yv))
		row = {
			'epoch': epoch,
			'train_loss': total / len(X),
			'train_acc': correct / float(len(X)),
			'val_acc': val_acc
		}
		history.append(row)

		if val_acc > best[0]:
			best = (val_acc, epoch, net.copy_parameters())

		if val_acc < lowest[0]:
			lowest = (val_acc, epoch, net.copy_parameters())

		logger.debug("epoch %d: loss %.4f train %.3f val %.3f", epoch, row['train_loss'], row['train_acc'], val_acc)

	net.load_parameters(best[2])
	model.history = history
	model.selected_epoch = best[1]
	model.lowest_epoch = lowest[1]
	model.lowest_params = lowest[2]

	logger.info("%s: best val %.3f at epoch %d, lowest val %.3f at epoch %d",
		spec.tag, best[0], best[1], lowest[0], lowest[1])

	return model


def _predict_array(net, X, n_classes):
	out = []
	for i in range(0, len(X), EVAL_BATCH):
		out.append(_argmax(net.forward(X[i:i+EVAL_BATCH]), n_classes))

	return np.concatenate(out)


def predict(model, segments):
	"""Top-1 predicted label of every segment."""
	return _predict_array(model.network, stack(segments), model.spec.n_classes)


def chance_level(n_classes, kind='class'):
	if kind in ('blank-pair', 'blank-block-pair'):
		return 2.0 / n_classes

	return 1.0 / n_classes


def score_predictions(predictions, segments, kind='class'):
	"""Fraction of correct predictions.  Pair kinds count a blank as correct
	when the prediction is either of its two neighbours."""
	if kind not in LABEL_KINDS:
		raise ValueError("unknown label kind {}".format(kind))

	if len(segments) == 0:
		raise EvalError("cannot score an empty set of segments")

	if len(predictions) != len(segments):
		raise EvalError("{} predictions for {} segments".format(len(predictions), len(segments)))

	if kind in ('class', 'block'):
		truth = labels_of(segments, kind)
		return float(np.mean(np.asarray(predictions) == truth))

	hits = 0
	for p, seg in zip(predictions, segments):
		pair = seg.blank_neighbors if kind == 'blank-pair' else seg.neighbor_blocks

		if pair is None:
			raise DataError("segment at {} ms has no neighbouring labels".format(seg.onset_ms))

		hits += int(p in pair)

	return hits / float(len(segments))


def evaluate(model, segments, kind='class'):
	if len(segments) == 0:
		raise EvalError("cannot evaluate on an empty set of segments")

	return score_predictions(predict(model, segments), segments, kind)


def encode(model, segments):
	"""Activations at the encoder/classifier boundary, one row per segment."""
	single = not isinstance(segments, (list, tuple))
	if single:
		segments = [segments]

	X = stack(segments)
	out = np.concatenate([model.network.encode(X[i:i+EVAL_BATCH]) for i in range(0, len(X), EVAL_BATCH)])
	return out[0] if single else out


def gradient_check(model, X, y, eps=1e-6, n_entries=12, seed=0):
	"""Largest relative error between backprop and central differences.

	For every parameter array ``n_entries`` random entries are perturbed; the
	error of an array is ``|num - ana| / max(|num| + |ana|, 1e-12)`` over
	the perturbed entries taken as vectors.
	"""
	net = model.network
	rng = np.random.default_rng(seed)

	def loss_at():
		return cross_entropy(net.forward(X), y)[0]

	_, grad = cross_entropy(net.forward(X), y)
	net.backward(grad)
	analytic = {k: v.copy() for k, v in net.gradients().items()}

	worst = 0.0
	for name, p in net.parameters().items():
		flat = p.reshape(-1)
		picks = rng.choice(flat.size, size=min(n_entries, flat.size), replace=False)
		num = np.empty(len(picks))

		for j, i in enumerate(picks):
			keep = flat[i]
			flat[i] = keep + eps
			up = loss_at()
			flat[i] = keep - eps
			down = loss_at()
			flat[i] = keep
			num[j] = (up - down) / (2 * eps)

		ana = analytic[name].reshape(-1)[picks]
		err = np.linalg.norm(num - ana) / max(np.linalg.norm(num) + np.linalg.norm(ana), 1e-12)
		worst = max(worst, err)
		logger.debug("gradient check %s: %.2e", name, err)

	return worst
