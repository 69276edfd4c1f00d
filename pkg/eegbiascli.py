import os
import sys
import logging
import argparse

import numpy as np

import eegbias
from eegbias import config as confmod
from eegbias import experiment
from eegbias.models import build, train, evaluate, save_model, load_model, write_history, chance_level
from eegbias.errors import ConfigError, EEGBiasError

logger = logging.getLogger('eegbias')


def print_table(table):
	long_cols = [0] * len(table[0])

	for row in table:
		for idx, col in enumerate(row):
			l = len(str(col))
			if l > long_cols[idx]:
				long_cols[idx] = l

	for row in table:
		row = ['{:<{}}'.format(col, long_cols[idx]) if idx==0 else
		'{:>{}}'.format(col, long_cols[idx]) for idx, col in enumerate(row)]

		print("\t".join(row))


def band_value(values):
	if not values:
		return None

	if len(values) == 1:
		return values[0]

	if len(values) == 2:
		return [float(v) for v in values]

	raise ConfigError('band', "give a preset name or two cut-off frequencies")


def config_from_args(args, synth=True):
	"""Config file (if any) overridden by command line flags."""
	if getattr(args, 'config', None):
		cfg = confmod.load_config(args.config)
	else:
		cfg = confmod.ExperimentConfig()

	flags = {
		'name': getattr(args, 'name', None),
		'design': getattr(args, 'design', None),
		'band': band_value(getattr(args, 'band', None)),
		'mode': getattr(args, 'mode', None),
		'labels': getattr(args, 'labels', None),
		'analysis': getattr(args, 'analysis', None),
		'seed': getattr(args, 'seed', None),
		'output': getattr(args, 'out_dir', None),
		'model.family': getattr(args, 'model', None),
		'model.head': getattr(args, 'head', None),
		'synth.drift_amplitude': getattr(args, 'drift', None),
		'synth.evoked_amplitude': getattr(args, 'evoked', None),
		'synth.vigilance_tau_s': getattr(args, 'vigilance', None),
		'synth.n_subjects': getattr(args, 'subjects', None),
		'synth.n_channels': getattr(args, 'channels', None),
		'synth.n_classes': getattr(args, 'classes', None),
		'synth.images_per_class': getattr(args, 'images_per_class', None),
		'synth.sessions': getattr(args, 'sessions', None),
		'synth.duration_min': getattr(args, 'duration', None),
		'train.epochs': getattr(args, 'epochs', None),
		'train.batch': getattr(args, 'batch', None),
		'train.lr': getattr(args, 'lr', None)
	}

	if getattr(args, 'notch', False):
		flags['notch'] = True

	if getattr(args, 'zero_phase', False):
		flags['zero_phase'] = True

	if getattr(args, 'unfiltered', False):
		flags['mode'] = 'raw'

	cfg = confmod.override(cfg, flags)

	if getattr(args, 'unfiltered', False):
		cfg.band = None

	confmod.resolve_seed(cfg)
	return confmod.validate(cfg, synth)


def read_subjects(args):
	"""Group the recordings of an EEGB1 file into one Synthesis per subject."""
	sched = eegbias.read_schedule(args.schedule)
	recordings = eegbias.read_recordings(args.recordings)
	subjects = sorted({rec.subject_id for rec in recordings})

	return [eegbias.Synthesis([r for r in recordings if r.subject_id == s], sched, None, s, [])
		for s in subjects]


def eeg_synth(args):
	cfg = config_from_args(args)
	sched = experiment.make_schedule(cfg)
	syntheses = eegbias.synthesize_subjects(sched, experiment.neural_params(cfg), cfg.synth.n_subjects)

	recordings = [rec for synth in syntheses for rec in synth.recordings]
	eegbias.write_recordings(args.out_file, recordings)
	eegbias.write_schedule(args.out_file + '.schedule.json', sched)

	rows = [["subject", "sessions", "stimuli", "blocks", "seconds"]]
	for synth in syntheses:
		rows.append([synth.subject_id, len(synth.recordings), len(sched.stimuli()), sched.n_blocks,
			round(sum(r.duration_ms for r in synth.recordings) / 1000.0, 1)])

	print_table(rows)


def eeg_preprocess(args):
	cfg = config_from_args(args, synth=False)
	prep = experiment.preprocessor(cfg)
	stimuli, blanks = eegbias.build_dataset(read_subjects(args), prep, args.blanks)

	eegbias.write_segments(args.out_file, stimuli + blanks, cfg.sampling_rate)
	print_table([["segments", "stimuli", "blanks"], [args.out_file, len(stimuli), len(blanks)]])


def load_parts(args, cfg):
	"""Segments of an EEGB1 file as (image split, blank windows)."""
	if not args.segments:
		raise ConfigError('segments', "an EEGB1 segment file is required")

	segments, _ = eegbias.read_segments(args.segments)
	stimuli = [seg for seg in segments if not seg.is_blank and seg.class_label is not None]
	blanks = [seg for seg in segments if seg.is_blank]

	if not stimuli:
		raise eegbias.DataError("{} holds no labelled stimulus segments".format(args.segments))

	return eegbias.make_splits(stimuli, seed=cfg.seed), blanks


def spec_for(cfg, split, n_labels=None):
	seg = split.train[0]
	n_labels = n_labels or max(seg.label(split.labels) for part in split for seg in part) + 1
	return experiment.model_spec(cfg, max(n_labels, 2), seg.n_channels, seg.n_samples)


def load_model_file(args):
	if not args.model_file:
		raise ConfigError('model_file', "the {} diagnostic needs a trained model (-m)".format(args.test))

	return load_model(args.model_file)


def eeg_train(args):
	cfg = config_from_args(args, synth=False)
	split, _ = load_parts(args, cfg)
	split = split.with_labels('block' if cfg.labels == 'block' else 'class')

	spec = spec_for(cfg, split)
	model = train(build(spec), split, experiment.train_config(cfg))
	save_model(args.out_file, model)
	write_history(args.out_file + '.history.csv', model.history)

	acc = evaluate(model, split.test, split.labels)
	low = evaluate(model.with_parameters(model.lowest_params), split.test, split.labels)
	print_table([
		["model", "labels", "params", "epoch", "test", "lowestValTest", "chance"],
		[spec.tag, split.labels, model.n_params, model.selected_epoch, round(100 * acc, 2),
			round(100 * low, 2), round(100 * chance_level(spec.n_classes), 2)]
	])


def _emit(report, args, cfg=None):
	if args.out_dir:
		if cfg is not None:
			experiment.write_outputs(report, cfg, args.out_dir)
		else:
			os.makedirs(args.out_dir, exist_ok=True)
			eegbias.write_report_csv(os.path.join(args.out_dir, 'report.csv'), report)
			eegbias.write_report_json(os.path.join(args.out_dir, 'report.json'), report)

	print_table(eegbias.diagnostics.report_table(report))


def eeg_diagnose(args):
	seed = 0 if args.seed is None else args.seed

	if args.test == 'codebook':
		n_classes = args.classes or 40
		book = eegbias.generate_codebook(n_classes, args.dim, args.sigma, seed=seed)
		source = eegbias.generate_codebook(n_classes, args.dim, args.sigma, seed=seed + 1)
		noise = np.random.default_rng(seed).uniform(size=book.samples.shape)

		rows = [["targets", "sourceAcc", "targetSep", "regressedAcc", "mse"]]
		for name, targets in (('codebook', book.samples), ('noise', noise)):
			r = eegbias.regress_then_classify(source.samples, targets, source.labels, seed=seed)
			rows.append([name, round(100 * r.source_accuracy, 2), round(100 * r.target_separability, 2),
				round(100 * r.regressed_accuracy, 2), round(r.mse, 4)])

		print_table(rows)
		return

	if args.test == 'duration':
		cfg = config_from_args(args)
		report = eegbias.duration_sweep(args.durations, experiment.neural_params(cfg), experiment.model_spec(cfg),
			experiment.train_config(cfg), seeds=args.seeds or [cfg.seed], n_subjects=cfg.synth.n_subjects,
			prep=experiment.preprocessor(cfg))
		return _emit(report, args, cfg)

	cfg = config_from_args(args, synth=False)

	if args.test in ('blank', 'onehot'):
		model = load_model_file(args)

	split, blanks = load_parts(args, cfg)
	report = eegbias.DiagnosticReport(args.test)

	if args.test == 'blank':
		report.add(eegbias.blank_leakage(model, blanks))

	elif args.test == 'block':
		row, _ = eegbias.block_label_leakage(split, spec_for(cfg, split), experiment.train_config(cfg))
		report.add(row)

	elif args.test == 'subjects':
		report = eegbias.per_subject_vs_pooled(split, spec_for(cfg, split), experiment.train_config(cfg))

	elif args.test == 'onehot':
		oh = eegbias.model_one_hotness(model, split.test)
		raw = eegbias.model_one_hotness(build(model.spec), split.test)
		print_table([["model", "trainedOH", "untrainedOH"], [model.spec.tag, '{:.3e}'.format(oh), '{:.3e}'.format(raw)]])
		return

	_emit(report, args)


def eeg_run(args):
	cfg = config_from_args(args)
	report = experiment.run(cfg)
	experiment.write_outputs(report, cfg)
	print_table(eegbias.diagnostics.report_table(report))


def eeg_sweep(args):
	cfg = config_from_args(args)
	values = args.values

	if args.axis == 'band' and values == ['table']:
		values = confmod.TABLE_BANDS

	report = experiment.sweep(cfg, args.axis, values, args.jobs, args.fresh_seeds)
	experiment.write_outputs(report, cfg, extra={'sweep': {'axis': args.axis, 'values': list(values),
		'fresh_seeds': args.fresh_seeds}})
	print_table(eegbias.diagnostics.report_table(report))


def eeg_report(args):
	for i, path in enumerate(args.reports):
		report = eegbias.read_report_json(path)

		if i > 0:
			print()

		if len(args.reports) > 1:
			print(report.name)

		print_table(eegbias.diagnostics.report_table(report))


def add_config_options(parser, model=True, synth=True):
	parser.add_argument('-c', '--config',
		metavar = 'str',
		help = "JSON experiment config, command line options override its values"
	)
	parser.add_argument('-s', '--seed',
		type = int,
		metavar = 'int',
		help = "random seed, default is taken from EEGLAB_SEED"
	)
	parser.add_argument('--band',
		nargs = '+',
		metavar = 'str',
		help = "band preset name ({}) or low and high cut-off in Hz".format(', '.join(sorted(confmod.BAND_PRESETS)))
	)
	parser.add_argument('--notch',
		action = 'store_true',
		help = "add a 50 Hz notch filter"
	)
	parser.add_argument('--mode',
		choices = confmod.MODES,
		help = "filter along time (filter), no filter (raw) or along channels (contaminate)"
	)
	parser.add_argument('--unfiltered',
		action = 'store_true',
		help = "skip filtering, same as --mode raw without a band"
	)
	parser.add_argument('--zero-phase',
		action = 'store_true',
		help = "filter forward and backward instead of causally"
	)

	if synth:
		parser.add_argument('--design',
			choices = confmod.DESIGNS,
			help = "block, rapid or blank (block design scored on blank intervals)"
		)
		parser.add_argument('--subjects', type=int, metavar='int', help="number of synthetic subjects")
		parser.add_argument('--channels', type=int, metavar='int', help="number of channels")
		parser.add_argument('--classes', type=int, metavar='int', help="number of stimulus classes")
		parser.add_argument('--images-per-class', type=int, metavar='int', help="images per class")
		parser.add_argument('--sessions', type=int, metavar='int', help="sessions of the block design")
		parser.add_argument('--duration', type=float, metavar='float', help="rapid design length in minutes")
		parser.add_argument('--drift', type=float, metavar='float', help="drift amplitude in uV")
		parser.add_argument('--evoked', type=float, metavar='float', help="evoked amplitude in uV")
		parser.add_argument('--vigilance', type=float, metavar='float', help="vigilance time constant in seconds")

	if model:
		parser.add_argument('--model',
			choices = eegbias.models.FAMILIES,
			help = "model family"
		)
		parser.add_argument('--head',
			choices = eegbias.models.HEADS,
			help = "encoder head variant"
		)
		parser.add_argument('--labels',
			choices = confmod.LABELS,
			help = "labels to train and score"
		)
		parser.add_argument('--analysis',
			choices = confmod.ANALYSES,
			help = "pooled, per-subject or both"
		)
		parser.add_argument('--epochs', type=int, metavar='int', help="training epochs")
		parser.add_argument('--batch', type=int, metavar='int', help="mini-batch size")
		parser.add_argument('--lr', type=float, metavar='float', help="learning rate")


def main(argv=None):
	parser = argparse.ArgumentParser(
		prog = 'eegbias',
		usage = "eegbias COMMAND [OPTIONS]",
		description = "Temporal-correlation bias diagnostics for block-design EEG classification",
		formatter_class = argparse.RawDescriptionHelpFormatter
	)

	parser.add_argument('-v', '--version',
		action = 'version',
		version = "%(prog)s version {}".format(eegbias.version())
	)
	parser.add_argument('-q', '--quiet',
		action = 'store_true',
		help = "only show warnings and errors"
	)
	parser.add_argument('--debug',
		action = 'store_true',
		help = "show debug messages"
	)

	subparsers = parser.add_subparsers(
		title = 'Commands',
		prog = 'eegbias',
		metavar = ''
	)

	#synthesize recordings
	parser_synth = subparsers.add_parser('synth',
		help = "synthesize recordings of a block or rapid design experiment"
	)
	parser_synth.set_defaults(func=eeg_synth)
	add_config_options(parser_synth, model=False)
	parser_synth.add_argument('-o', '--out-file',
		metavar = 'str',
		required = True,
		help = "output EEGB1 file, the schedule goes to <file>.schedule.json"
	)

	#preprocess recordings into segments
	parser_prep = subparsers.add_parser('preprocess',
		help = "filter, cut, trim and z-score recordings into segments"
	)
	parser_prep.set_defaults(func=eeg_preprocess)
	add_config_options(parser_prep, model=False, synth=False)
	parser_prep.add_argument('--schedule',
		metavar = 'str',
		required = True,
		help = "schedule JSON written by synth"
	)
	parser_prep.add_argument('--blanks',
		action = 'store_true',
		help = "also cut the blank intervals into windows"
	)
	parser_prep.add_argument('-o', '--out-file',
		metavar = 'str',
		required = True,
		help = "output EEGB1 segment file"
	)
	parser_prep.add_argument('recordings',
		help = "EEGB1 recording file"
	)

	#train a model
	parser_train = subparsers.add_parser('train',
		help = "train a model on class or block labels"
	)
	parser_train.set_defaults(func=eeg_train)
	add_config_options(parser_train)
	parser_train.add_argument('-o', '--out-file',
		metavar = 'str',
		required = True,
		help = "output EEGM model, history goes to <file>.history.csv"
	)
	parser_train.add_argument('segments',
		help = "EEGB1 segment file"
	)

	#diagnostics
	parser_diag = subparsers.add_parser('diagnose',
		help = "run one leakage diagnostic"
	)
	parser_diag.set_defaults(func=eeg_diagnose)
	add_config_options(parser_diag)
	parser_diag.add_argument('test',
		choices = ['blank', 'block', 'subjects', 'onehot', 'duration', 'codebook'],
		help = "blank, block, subjects, onehot, duration or codebook"
	)
	parser_diag.add_argument('segments',
		nargs = '?',
		help = "EEGB1 segment file (not used by duration and codebook)"
	)
	parser_diag.add_argument('-m', '--model-file',
		metavar = 'str',
		help = "trained EEGM model, for blank and onehot"
	)
	parser_diag.add_argument('--durations',
		nargs = '+',
		type = float,
		default = [4.0, 11.0, 23.0],
		metavar = 'float',
		help = "experiment durations in minutes, default 4 11 23"
	)
	parser_diag.add_argument('--seeds',
		nargs = '+',
		type = int,
		metavar = 'int',
		help = "seeds of the duration sweep"
	)
	parser_diag.add_argument('--dim', type=int, default=128, metavar='int', help="codeword dimension")
	parser_diag.add_argument('--sigma', type=float, default=0.1, metavar='float', help="codeword noise std")
	parser_diag.add_argument('-o', '--out-dir',
		metavar = 'str',
		help = "write report.csv and report.json here"
	)

	#full experiment
	parser_run = subparsers.add_parser('run',
		help = "synthesize, preprocess, train and diagnose from a config"
	)
	parser_run.set_defaults(func=eeg_run)
	add_config_options(parser_run)
	parser_run.add_argument('-n', '--name', metavar='str', help="experiment name")
	parser_run.add_argument('-o', '--out-dir',
		metavar = 'str',
		help = "output directory for report and manifest"
	)

	#sweep one axis
	parser_sweep = subparsers.add_parser('sweep',
		help = "run a config once per band, duration or drift value"
	)
	parser_sweep.set_defaults(func=eeg_sweep)
	add_config_options(parser_sweep)
	parser_sweep.add_argument('-n', '--name', metavar='str', help="experiment name")
	parser_sweep.add_argument('--axis',
		choices = experiment.SWEEP_AXES,
		required = True,
		help = "band, duration or drift"
	)
	parser_sweep.add_argument('-j', '--jobs',
		type = int,
		default = 1,
		metavar = 'int',
		help = "number of parallel runs, default 1"
	)
	parser_sweep.add_argument('--fresh-seeds',
		action = 'store_true',
		help = "give every value its own seed instead of the shared base seed"
	)
	parser_sweep.add_argument('-o', '--out-dir',
		metavar = 'str',
		help = "output directory for report and manifest"
	)
	parser_sweep.add_argument('values',
		nargs = '*',
		metavar = 'value',
		help = "axis values; band presets or low-high pairs, minutes or drift amplitudes; 'table' for all table bands"
	)

	#print reports
	parser_report = subparsers.add_parser('report',
		help = "print saved report.json files as tables"
	)
	parser_report.set_defaults(func=eeg_report)
	parser_report.add_argument('reports',
		nargs = '+',
		metavar = 'report',
		help = "report.json files"
	)

	args = parser.parse_args(argv)

	if args.debug:
		level = logging.DEBUG
	elif args.quiet:
		level = logging.WARNING
	else:
		level = logging.INFO

	logging.basicConfig(level=level, format="%(levelname)s: %(message)s")

	if not hasattr(args, 'func'):
		parser.print_help()
		return 0

	if args.func is eeg_sweep and not args.values:
		sys.stderr.write("error: values: a sweep needs at least one value\n")
		return 2

	try:
		args.func(args)
	except ConfigError as e:
		sys.stderr.write("error: {}\n".format(e))
		return 2
	except (EEGBiasError, OSError) as e:
		logger.debug("failure", exc_info=True)
		sys.stderr.write("error: {}\n".format(e))
		return 1

	return 0


if __name__ == '__main__':
	sys.exit(main())
