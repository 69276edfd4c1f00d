from .version import __version__
from .errors import *
from .core import (BLANK, Recording, Segment, trim_segment, split_blank, window_starts,
	zscore_per_channel)
from .filters import (FilterSpec, design_bandpass, design_notch, frequency_response, filter_array,
	apply_filter, contaminate_channel_axis)
from .eegb import read_segments, write_segments, read_recordings, write_recordings
from .synthgen import (Event, StimulusSchedule, NeuralModelParams, Synthesis, DatasetSplit,
	generate_schedule, schedule_for_duration, assign_block_labels, synthesize_recording,
	synthesize_subjects, make_splits, subjects_of, read_schedule, write_schedule)
from .pipeline import Preprocessor, preprocess_subject, build_dataset
from .diagnostics import (ReportRow, DiagnosticReport, EncodingMatrix, class_encoding_matrix,
	one_hotness, model_one_hotness, blank_leakage, block_label_leakage, per_subject_vs_pooled,
	duration_sweep, write_report_csv, write_report_json, read_report_json)
from .codebook import (Codebook, Regressor, generate_codebook, fit_linear_regressor,
	class_separability, regress_then_classify)


def version(debug=False):
	"""Package version; with ``debug`` also the numpy and scipy versions."""
	if not debug:
		return __version__

	import numpy
	import scipy

	return "eegbias: {}; numpy: {}; scipy: {}".format(__version__, numpy.__version__, scipy.__version__)
