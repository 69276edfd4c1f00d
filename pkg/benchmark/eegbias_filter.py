import sys
import eegbias

recfile, low, high, zero_phase = sys.argv[1:]

spec = eegbias.design_bandpass(float(low), float(high))

for rec in eegbias.read_recordings(recfile):
	out = eegbias.apply_filter(spec, rec, zero_phase=zero_phase == '1')
	print(out)
