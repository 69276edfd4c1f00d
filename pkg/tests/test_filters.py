import numpy as np
import eegbias
import unittest

from eegbias import Recording, Segment, FilterSpec
from eegbias.errors import CutoffError, DataError

fs = 1000


def sinusoid(freq, n=4000, channels=1):
	t = np.arange(n) / float(fs)
	return np.tile(np.sin(2 * np.pi * freq * t), (channels, 1))


def rms(x):
	return float(np.sqrt(np.mean(np.square(x))))


class FilterTest(unittest.TestCase):
	def setUp(self):
		self.bandpass = eegbias.design_bandpass(55, 95, fs)
		self.notch = eegbias.design_notch(50, 30, fs)

	def test_design(self):
		self.assertEqual(self.bandpass.kind, 'bandpass')
		self.assertEqual(self.bandpass.cutoffs, (55.0, 95.0))

		#order 2 prototype gives two biquads
		self.assertEqual(len(self.bandpass.sections), 2)
		self.assertEqual(len(self.bandpass.sections[0]), 5)

		for spec in (self.bandpass, self.notch):
			self.assertTrue(np.all(np.abs(spec.poles()) < 1))
			self.assertTrue(np.all(np.isfinite(spec.sos)))

		#sos array is read only
		with self.assertRaises(ValueError):
			self.bandpass.sos[0, 0] = 2.0

	def test_cutoff_errors(self):
		with self.assertRaises(CutoffError):
			eegbias.design_bandpass(95, 55, fs)

		with self.assertRaises(CutoffError):
			eegbias.design_bandpass(55, 500, fs)

		with self.assertRaises(CutoffError):
			eegbias.design_bandpass(0, 95, fs)

		with self.assertRaises(CutoffError):
			eegbias.design_notch(600, 30, fs)

		with self.assertRaises(CutoffError):
			eegbias.design_notch(50, 0, fs)

		#error classes keep the built-in contract
		with self.assertRaises(ValueError):
			eegbias.design_bandpass(95, 55, fs)

	def test_unstable(self):
		with self.assertRaises(CutoffError):
			FilterSpec('bandpass', (1, 2), fs, [[1.0, 0.0, 0.0, 1.0, -2.5, 1.5]])

	def test_cutoff_gain(self):
		h = np.abs(eegbias.frequency_response(self.bandpass, [55, 95, 75, 20]))
		db = 20 * np.log10(h)

		self.assertAlmostEqual(db[0], -3.0103, delta=0.5)
		self.assertAlmostEqual(db[1], -3.0103, delta=0.5)
		self.assertGreaterEqual(db[2], -1)
		self.assertLessEqual(db[3], -20)

		spec = eegbias.design_bandpass(14, 70, fs)
		self.assertGreaterEqual(20 * np.log10(abs(eegbias.frequency_response(spec, [40])[0])), -1)

	def test_notch_gain(self):
		q = 30
		h = np.abs(eegbias.frequency_response(self.notch, [50, 50 - 50.0 / q, 50 + 50.0 / q, 75]))
		db = 20 * np.log10(h)

		self.assertLessEqual(db[0], -20)
		self.assertGreaterEqual(db[1], -3.5)
		self.assertGreaterEqual(db[2], -3.5)
		self.assertAlmostEqual(db[3], 0, delta=0.5)

	def test_notch_sinusoid(self):
		x = Recording(sinusoid(50))
		y = eegbias.apply_filter(self.notch, x)
		self.assertLessEqual(rms(y.samples[:, 1000:]), 0.1 * rms(x.samples[:, 1000:]))

		x = Recording(sinusoid(75))
		y = eegbias.apply_filter(self.notch, x)
		self.assertGreaterEqual(rms(y.samples[:, 1000:]), 0.9 * rms(x.samples[:, 1000:]))

	def test_bandpass_sinusoids(self):
		low = sinusoid(10, channels=3)
		high = sinusoid(75, channels=3)

		y_low = eegbias.apply_filter(self.bandpass, Recording(low)).samples
		y_high = eegbias.apply_filter(self.bandpass, Recording(high)).samples
		y_sum = eegbias.apply_filter(self.bandpass, Recording(low + high)).samples

		self.assertLessEqual(rms(y_low[:, 1000:]), 0.1 * rms(low[:, 1000:]))
		self.assertGreaterEqual(rms(y_high[:, 1000:]), 0.9 * rms(high[:, 1000:]))
		np.testing.assert_allclose(y_sum, y_low + y_high, rtol=1e-9, atol=1e-12)

	def test_impulse_response(self):
		n = 4096
		impulse = np.zeros((1, n))
		impulse[0, 0] = 1.0

		out = eegbias.apply_filter(self.bandpass, Recording(impulse)).samples[0]
		measured = np.abs(np.fft.rfft(out))

		#64 test frequencies on exact DFT bins
		bins = np.arange(64) * 16
		freqs = bins * fs / float(n)
		analytic = np.abs(eegbias.frequency_response(self.bandpass, freqs))

		np.testing.assert_allclose(measured[bins], analytic, atol=1e-6)

	def test_linearity(self):
		rng = np.random.default_rng(5)
		x = rng.standard_normal((4, 2000))
		y = rng.standard_normal((4, 2000))
		a, b = 1.7, -0.3

		fx = eegbias.apply_filter(self.bandpass, Recording(x)).samples
		fy = eegbias.apply_filter(self.bandpass, Recording(y)).samples
		fxy = eegbias.apply_filter(self.bandpass, Recording(a * x + b * y)).samples

		expect = a * fx + b * fy
		self.assertLessEqual(np.max(np.abs(fxy - expect)), 1e-9 * np.max(np.abs(expect)))

		#time invariance: a delayed input gives a delayed output
		shifted = np.concatenate([np.zeros((4, 100)), x[:, :-100]], axis=1)
		fs_shift = eegbias.apply_filter(self.bandpass, Recording(shifted)).samples
		np.testing.assert_allclose(fs_shift[:, 100:], fx[:, :-100], rtol=1e-9, atol=1e-12)

	def test_zero_input(self):
		rec = Recording(np.zeros((3, 500)), subject_id=2, session_id=1)
		out = eegbias.apply_filter(self.bandpass, rec)

		self.assertEqual(out.samples.shape, (3, 500))
		self.assertTrue(np.all(out.samples == 0))
		self.assertEqual(out.subject_id, 2)
		self.assertEqual(out.session_id, 1)

		out = eegbias.apply_filter(self.bandpass, rec, zero_phase=True)
		self.assertTrue(np.all(out.samples == 0))

	def test_read_only(self):
		#coefficients stay frozen while filtering still runs
		self.assertFalse(self.bandpass.sos.flags.writeable)

		x = sinusoid(75, n=1000, channels=2)
		x.setflags(write=False)

		for zero_phase in (False, True):
			out = eegbias.filter_array(self.bandpass, x, zero_phase=zero_phase)
			self.assertEqual(out.shape, (2, 1000))
			self.assertTrue(np.all(np.isfinite(out)))

		out = eegbias.apply_filter(self.notch, Recording(np.zeros((2, 100))))
		self.assertTrue(np.all(out.samples == 0))
		self.assertFalse(self.bandpass.sos.flags.writeable)

	def test_zero_phase(self):
		#forward-backward filtering keeps a passband sinusoid in phase
		x = sinusoid(75)
		y = eegbias.apply_filter(self.bandpass, Recording(x), zero_phase=True).samples
		mid = slice(1000, 3000)
		corr = np.corrcoef(x[0, mid], y[0, mid])[0, 1]
		self.assertGreater(corr, 0.99)

	def test_non_finite(self):
		seg = Segment(np.array([[0.0, np.nan, 1.0]]))
		with self.assertRaises(DataError):
			eegbias.apply_filter(self.bandpass, seg)

		with self.assertRaises(DataError):
			Recording(np.array([[0.0, np.inf]]))

		with self.assertRaises(ValueError):
			eegbias.apply_filter(self.bandpass, seg, axis='depth')

	def test_contamination(self):
		spec = eegbias.design_bandpass(14, 70, fs)

		seg = Segment(np.zeros((128, 440)), class_label=0)
		out = eegbias.contaminate_channel_axis(seg, spec)
		self.assertTrue(np.all(out.samples == 0))
		self.assertEqual(out.class_label, 0)

		#a channel-constant input is DC along the channel axis and gets rejected
		rng = np.random.default_rng(0)
		n_channels = 3000
		level = rng.standard_normal(8)
		seg = Segment(np.tile(level, (n_channels, 1)))
		out = eegbias.contaminate_channel_axis(seg, spec).samples
		self.assertLessEqual(rms(out[1500:]), 1e-3 * rms(seg.samples[1500:]))

		#adding a per-time constant to every channel changes nothing after the transient
		noise = Segment(rng.standard_normal((n_channels, 8)))
		a = eegbias.contaminate_channel_axis(noise, spec).samples
		b = eegbias.contaminate_channel_axis(noise.replace(samples=noise.samples + level), spec).samples
		self.assertLessEqual(np.max(np.abs(a[1500:] - b[1500:])), 1e-6 * max(1.0, np.max(np.abs(a))))

	def test_contamination_spectrum(self):
		spec = eegbias.design_bandpass(14, 70, fs)
		rng = np.random.default_rng(1)
		seg = Segment(rng.standard_normal((4096, 16)))

		out = eegbias.contaminate_channel_axis(seg, spec).samples
		power = np.mean(np.abs(np.fft.rfft(out, axis=0)) ** 2, axis=1)
		freqs = np.fft.rfftfreq(4096, 1.0 / fs)

		inside = power[(freqs > 20) & (freqs < 60)].mean()
		outside = power[freqs > 200].mean()
		self.assertGreater(inside, 100 * outside)
