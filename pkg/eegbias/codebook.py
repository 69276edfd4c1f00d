"""Random codebooks and linear regression between feature sets.

Regressing class-clustered features onto a set of targets only transfers
class information when the targets themselves cluster by class.  The
functions here make that checkable: build a random codebook, regress onto
it and classify the regressed features by nearest class mean.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from .models.checkpoint import write_blob, read_blob
from .errors import DataError, DegenerateError, SingularError

logger = logging.getLogger(__name__)

DIM = 128
SIGMA = 0.1
RIDGE = 1e-6


@dataclass
class Codebook:
	"""Codewords (classes x dim) and noisy samples drawn around them."""
	codewords: np.ndarray
	samples: np.ndarray
	labels: np.ndarray
	sigma: float = SIGMA

	def __post_init__(self):
		self.codewords = np.asarray(self.codewords, dtype=np.float64)
		self.samples = np.asarray(self.samples, dtype=np.float64)
		self.labels = np.asarray(self.labels, dtype=np.int64)

		if len(np.unique(self.codewords, axis=0)) != len(self.codewords):
			raise DataError("codewords must be pairwise distinct")

		if not np.all(np.isfinite(self.samples)):
			raise DataError("codebook samples must be finite")

		if len(self.samples) != len(self.labels):
			raise DataError("one label per sample is required")

	@property
	def n_classes(self):
		return self.codewords.shape[0]

	@property
	def dim(self):
		return self.codewords.shape[1]

	def targets(self):
		"""Codeword of every sample's class."""
		return self.codewords[self.labels]


def generate_codebook(n_classes=40, dim=DIM, sigma=SIGMA, samples_per_class=50, seed=0, n_subjects=1):
	"""Uniform codewords in [0, 1]^dim plus Gaussian samples around them.

	With ``n_subjects`` > 1 each sample is the average of that many noisy
	draws of its codeword, as when a stimulus is seen by several subjects.
	"""
	if dim < 2:
		raise ValueError("codeword dimension must be >= 2")

	if sigma < 0:
		raise ValueError("sigma must be >= 0")

	if n_subjects < 1 or samples_per_class < 1:
		raise ValueError("n_subjects and samples_per_class must be >= 1")

	rng = np.random.default_rng(seed)
	codewords = rng.uniform(0.0, 1.0, size=(n_classes, dim))
	labels = np.repeat(np.arange(n_classes), samples_per_class)

	noise = rng.standard_normal((n_subjects, len(labels), dim)).mean(axis=0)
	samples = codewords[labels] + sigma * noise

	return Codebook(codewords, samples, labels, sigma)


@dataclass
class Regressor:
	weights: np.ndarray
	ridge: float
	mse: float

	def predict(self, X):
		return np.asarray(X, dtype=np.float64) @ self.weights


def _gradient_solve(X, Y, ridge, tol=1e-13, max_iter=200000):
	#gradient descent on 0.5 ||XW - Y||^2 + 0.5 ridge ||W||^2 with step 1 / L
	G = X.T @ X + ridge * np.eye(X.shape[1])
	B = X.T @ Y
	step = 1.0 / linalg.eigvalsh(G)[-1]
	W = np.zeros((X.shape[1], Y.shape[1]))

	for i in range(max_iter):
		delta = step * (G @ W - B)
		W -= delta

		if np.linalg.norm(delta) <= tol * max(np.linalg.norm(W), 1.0):
			break

	return W


def fit_linear_regressor(X, Y, ridge=RIDGE, solver='normal'):
	"""Minimise ||XW - Y||^2 + ridge ||W||^2, no intercept.

	``solver`` is 'normal' (normal equations) or 'gradient'.
	"""
	X = np.asarray(X, dtype=np.float64)
	Y = np.asarray(Y, dtype=np.float64)

	if Y.ndim == 1:
		Y = Y[:, None]

	if X.ndim != 2 or X.shape[0] != Y.shape[0]:
		raise DataError("X and Y must have the same number of rows")

	if ridge < 0:
		raise ValueError("ridge must be >= 0")

	if ridge == 0 and np.linalg.matrix_rank(X) < X.shape[1]:
		raise SingularError("X is rank deficient, use ridge > 0")

	if solver == 'normal':
		G = X.T @ X + ridge * np.eye(X.shape[1])
		try:
			W = linalg.solve(G, X.T @ Y, assume_a='pos')
		except linalg.LinAlgError:
			raise SingularError("normal equations are singular, use ridge > 0")

	elif solver == 'gradient':
		W = _gradient_solve(X, Y, ridge)

	else:
		raise ValueError("solver must be 'normal' or 'gradient'")

	residual = X @ W - Y
	return Regressor(W, ridge, float(np.mean(residual ** 2)))


def nearest_mean_predict(features, means):
	"""Index of the nearest row of ``means`` for every feature row."""
	return np.argmin(cdist(features, means), axis=1)


def class_means(features, labels):
	classes = np.unique(labels)
	return classes, np.stack([features[labels == c].mean(axis=0) for c in classes])


def class_separability(features, labels):
	"""Nearest-class-mean accuracy, means estimated on all samples."""
	features = np.asarray(features, dtype=np.float64)
	labels = np.asarray(labels)

	if len(np.unique(labels)) < 2:
		raise DegenerateError("class separability needs at least 2 classes")

	classes, means = class_means(features, labels)
	return float(np.mean(classes[nearest_mean_predict(features, means)] == labels))


@dataclass
class RegressionResult:
	source_accuracy: float
	target_separability: float
	regressed_accuracy: float
	mse: float
	chance: float


def regress_then_classify(source, targets, labels, ridge=RIDGE, test_fraction=0.2, seed=0):
	"""Fit source -> targets on a training part and classify the regressed
	held-out rows by nearest class mean of the held-out targets.

	The target means never see the fitted rows: targets that do not
	cluster by class give chance accuracy.

	``source_accuracy`` is nearest-class-mean accuracy on the held-out
	source rows, for comparison with ``regressed_accuracy``.
	"""
	source = np.asarray(source, dtype=np.float64)
	targets = np.asarray(targets, dtype=np.float64)
	labels = np.asarray(labels)

	rng = np.random.default_rng(seed)
	order = rng.permutation(len(labels))
	n_test = max(1, int(round(test_fraction * len(labels))))
	test, fit = order[:n_test], order[n_test:]

	reg = fit_linear_regressor(source[fit], targets[fit], ridge)

	classes, target_means = class_means(targets[test], labels[test])
	regressed = classes[nearest_mean_predict(reg.predict(source[test]), target_means)]

	source_classes, source_means = class_means(source[fit], labels[fit])
	direct = source_classes[nearest_mean_predict(source[test], source_means)]

	result = RegressionResult(
		source_accuracy = float(np.mean(direct == labels[test])),
		target_separability = class_separability(targets, labels),
		regressed_accuracy = float(np.mean(regressed == labels[test])),
		mse = reg.mse,
		chance = 1.0 / len(source_classes)
	)
	logger.info("regression: source %.3f, targets %.3f, regressed %.3f (mse %.4f)",
		result.source_accuracy, result.target_separability, result.regressed_accuracy, result.mse)

	return result


def save_codebook(path, book):
	write_blob(path, 'codebook', {'sigma': book.sigma}, {
		'codewords': book.codewords,
		'samples': book.samples,
		'labels': book.labels
	})


def load_codebook(path):
	_, meta, arrays = read_blob(path, 'codebook')
	return Codebook(arrays['codewords'], arrays['samples'], np.rint(arrays['labels']), meta['sigma'])


def save_regressor(path, reg):
	write_blob(path, 'regressor', {'ridge': reg.ridge, 'mse': reg.mse}, {'weights': reg.weights})


def load_regressor(path):
	_, meta, arrays = read_blob(path, 'regressor')
	return Regressor(arrays['weights'], meta['ridge'], meta['mse'])
