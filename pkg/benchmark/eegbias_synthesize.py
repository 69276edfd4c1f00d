import sys
import eegbias

channels, minutes, seed = sys.argv[1:]

sched = eegbias.schedule_for_duration(float(minutes), seed=int(seed))
params = eegbias.NeuralModelParams(drift_amplitude=2.0, n_channels=int(channels), seed=int(seed))
synth = eegbias.synthesize_recording(sched, params)

for rec in synth.recordings:
	print(rec)
