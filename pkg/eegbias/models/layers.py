"""Layers with explicit forward and backward passes.

Every layer caches what its backward pass needs during ``forward`` and
fills ``grads`` (same keys as ``params``) during ``backward``.  Inputs are
batches: ``(N, C, T)`` for time series, ``(N, D)`` for vectors.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit


def uniform_init(rng, shape, fan_in):
	bound = 1.0 / np.sqrt(fan_in)
	return rng.uniform(-bound, bound, size=shape)


class Layer:
	def __init__(self):
		self.params = {}
		self.grads = {}

	def forward(self, x):
		raise NotImplementedError

	def backward(self, grad):
		raise NotImplementedError

	@property
	def n_params(self):
		return sum(p.size for p in self.params.values())

	def __repr__(self):
		return self.__class__.__name__


class Dense(Layer):
	def __init__(self, n_in, n_out, rng):
		super().__init__()
		self.params['W'] = uniform_init(rng, (n_in, n_out), n_in)
		self.params['b'] = np.zeros(n_out)

	def forward(self, x):
		self._x = x
		return x @ self.params['W'] + self.params['b']

	def backward(self, grad):
		self.grads['W'] = self._x.T @ grad
		self.grads['b'] = grad.sum(axis=0)
		return grad @ self.params['W'].T

	def __repr__(self):
		return "Dense({}, {})".format(*self.params['W'].shape)


class ReLU(Layer):
	def forward(self, x):
		self._mask = x > 0
		return x * self._mask

	def backward(self, grad):
		return grad * self._mask


class Flatten(Layer):
	def forward(self, x):
		self._shape = x.shape
		return x.reshape(x.shape[0], -1)

	def backward(self, grad):
		return grad.reshape(self._shape)


class Decimate(Layer):
	"""Average pooling along time by an integer factor, trailing samples
	that do not fill a bin are dropped."""

	def __init__(self, factor):
		super().__init__()
		self.factor = factor

	def forward(self, x):
		n, c, t = x.shape
		self._t = t
		keep = t // self.factor
		return x[:, :, :keep*self.factor].reshape(n, c, keep, self.factor).mean(axis=3)

	def backward(self, grad):
		n, c, keep = grad.shape
		dx = np.zeros((n, c, self._t))
		dx[:, :, :keep*self.factor] = np.repeat(grad, self.factor, axis=2) / self.factor
		return dx

	def __repr__(self):
		return "Decimate({})".format(self.factor)


def _scatter_windows(dwin, t):
	"""Adjoint of sliding_window_view along the last input axis."""
	k = dwin.shape[-1]
	steps = dwin.shape[-2]
	dx = np.zeros(dwin.shape[:-2] + (t,))

	for j in range(k):
		dx[..., j:j+steps] += dwin[..., j]

	return dx


class ChannelwiseConv1d(Layer):
	"""Separate bank of 1-D filters for every channel, output is
	``(N, C * F, T - K + 1)`` with the F maps of a channel adjacent."""

	def __init__(self, n_channels, n_filters, kernel_size, rng):
		super().__init__()
		self.params['W'] = uniform_init(rng, (n_channels, n_filters, kernel_size), kernel_size)
		self.params['b'] = np.zeros((n_channels, n_filters))

	def forward(self, x):
		self._t = x.shape[2]
		self._win = sliding_window_view(x, self.params['W'].shape[2], axis=2)
		out = np.einsum('nctk,cfk->ncft', self._win, self.params['W'], optimize=True)
		out += self.params['b'][None, :, :, None]
		n, c, f, t = out.shape
		return out.reshape(n, c * f, t)

	def backward(self, grad):
		c, f, _ = self.params['W'].shape
		g = grad.reshape(grad.shape[0], c, f, grad.shape[2])
		self.grads['W'] = np.einsum('ncft,nctk->cfk', g, self._win, optimize=True)
		self.grads['b'] = g.sum(axis=(0, 3))
		dwin = np.einsum('ncft,cfk->nctk', g, self.params['W'], optimize=True)
		return _scatter_windows(dwin, self._t)

	def __repr__(self):
		return "ChannelwiseConv1d({}, {}, {})".format(*self.params['W'].shape)


class Conv1d(Layer):
	"""Filters spanning all channels, output ``(N, F, T - K + 1)``."""

	def __init__(self, n_channels, n_filters, kernel_size, rng):
		super().__init__()
		self.params['W'] = uniform_init(rng, (n_filters, n_channels, kernel_size), n_channels * kernel_size)
		self.params['b'] = np.zeros(n_filters)

	def forward(self, x):
		self._t = x.shape[2]
		self._win = sliding_window_view(x, self.params['W'].shape[2], axis=2)
		out = np.einsum('nctk,fck->nft', self._win, self.params['W'], optimize=True)
		return out + self.params['b'][None, :, None]

	def backward(self, grad):
		self.grads['W'] = np.einsum('nft,nctk->fck', grad, self._win, optimize=True)
		self.grads['b'] = grad.sum(axis=(0, 2))
		dwin = np.einsum('nft,fck->nctk', grad, self.params['W'], optimize=True)
		return _scatter_windows(dwin, self._t)

	def __repr__(self):
		return "Conv1d({1}, {0}, {2})".format(*self.params['W'].shape)


class LSTM(Layer):
	"""Single-layer LSTM returning the hidden state of the last time step.

	Weights are packed in one ``(1 + n_in + hidden, 4 * hidden)`` matrix,
	row 0 holds the biases.  Gate blocks along the columns are candidate,
	input, forget, output.  The forget bias starts at 1.
	"""

	def __init__(self, n_in, hidden, rng):
		super().__init__()
		w = uniform_init(rng, (1 + n_in + hidden, 4 * hidden), n_in + hidden)
		w[0, :] = 0
		w[0, 2*hidden:3*hidden] = 1.0
		self.params['W'] = w
		self.hidden = hidden

	def forward(self, x):
		X = x.transpose(2, 0, 1)
		steps, batch, n_in = X.shape
		h = self.hidden
		W = self.params['W']

		Hin = np.zeros((steps, batch, 1 + n_in + h))
		IFOGf = np.zeros((steps, batch, 4 * h))
		C = np.zeros((steps, batch, h))
		Ct = np.zeros((steps, batch, h))
		Hout = np.zeros((steps, batch, h))

		for t in range(steps):
			Hin[t, :, 0] = 1
			Hin[t, :, 1:n_in+1] = X[t]
			if t > 0:
				Hin[t, :, n_in+1:] = Hout[t-1]

			ifog = Hin[t] @ W
			IFOGf[t, :, :h] = np.tanh(ifog[:, :h])
			IFOGf[t, :, h:] = expit(ifog[:, h:])

			C[t] = IFOGf[t, :, :h] * IFOGf[t, :, h:2*h]
			if t > 0:
				C[t] += IFOGf[t, :, 2*h:3*h] * C[t-1]

			Ct[t] = np.tanh(C[t])
			Hout[t] = Ct[t] * IFOGf[t, :, 3*h:]

		self._cache = (Hin, IFOGf, C, Ct, n_in)
		return Hout[-1]

	def backward(self, grad):
		Hin, IFOGf, C, Ct, n_in = self._cache
		steps, batch, _ = Hin.shape
		h = self.hidden
		W = self.params['W']

		dW = np.zeros_like(W)
		dX = np.zeros((steps, batch, n_in))
		dC = np.zeros((batch, h))
		dh = grad.copy()

		for t in reversed(range(steps)):
			dIFOGf = np.zeros((batch, 4 * h))
			dIFOGf[:, 3*h:] = Ct[t] * dh
			dC += (1 - Ct[t] ** 2) * (IFOGf[t, :, 3*h:] * dh)

			if t > 0:
				dIFOGf[:, 2*h:3*h] = dC * C[t-1]

			dIFOGf[:, :h] = dC * IFOGf[t, :, h:2*h]
			dIFOGf[:, h:2*h] = dC * IFOGf[t, :, :h]

			dIFOG = np.empty_like(dIFOGf)
			dIFOG[:, :h] = (1 - IFOGf[t, :, :h] ** 2) * dIFOGf[:, :h]
			y = IFOGf[t, :, h:]
			dIFOG[:, h:] = y * (1 - y) * dIFOGf[:, h:]

			dW += Hin[t].T @ dIFOG
			dHin = dIFOG @ W.T
			dX[t] = dHin[:, 1:n_in+1]

			dh = dHin[:, n_in+1:]
			dC = dC * IFOGf[t, :, 2*h:3*h]

		self.grads['W'] = dW
		return dX.transpose(1, 2, 0)

	def __repr__(self):
		return "LSTM({}, {})".format(self.params['W'].shape[0] - 1 - self.hidden, self.hidden)

