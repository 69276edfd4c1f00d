"""Exceptions raised by eegbias.

Every error derives from the built-in type a caller would expect
(``ValueError`` for bad input, ``RuntimeError`` for failures during
training) so plain ``except ValueError`` keeps working.
"""


class EEGBiasError(Exception):
	pass


class DataError(EEGBiasError, ValueError):
	pass


class FormatError(DataError):
	pass


class CutoffError(EEGBiasError, ValueError):
	pass


class LengthError(EEGBiasError, ValueError):
	pass


class StratificationError(EEGBiasError, ValueError):
	pass


class SpecError(EEGBiasError, ValueError):
	pass


class EvalError(EEGBiasError, ValueError):
	pass


class SubjectError(EEGBiasError, ValueError):
	pass


class DegenerateError(EEGBiasError, ValueError):
	pass


class DegenerateEncodingError(DegenerateError):
	pass


class SingularError(EEGBiasError, ValueError):
	pass


class TrainingError(EEGBiasError, RuntimeError):
	def __init__(self, message, epoch=None):
		super().__init__(message)
		self.epoch = epoch


class ConfigError(EEGBiasError, ValueError):
	def __init__(self, field, reason):
		super().__init__("{}: {}".format(field, reason))
		self.field = field
		self.reason = reason
