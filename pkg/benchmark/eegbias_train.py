import sys
import eegbias
from eegbias.models import ModelSpec, TrainConfig, build, train, evaluate

segfile, family, epochs = sys.argv[1:]

segments, _ = eegbias.read_segments(segfile)
stimuli = [s for s in segments if not s.is_blank]
split = eegbias.make_splits(stimuli)

n_classes = max(s.class_label for s in stimuli) + 1
spec = ModelSpec(family, n_classes, stimuli[0].n_channels, stimuli[0].n_samples)
model = train(build(spec), split, TrainConfig(epochs=int(epochs)))

print(spec.tag, model.n_params, evaluate(model, split.test))
