from .network import FAMILIES, HEADS, ModelSpec, Network, TrainedModel, build, build_network
from .training import (TrainConfig, Adam, train, predict, evaluate, encode, chance_level,
	score_predictions, gradient_check, cross_entropy, probabilities, stack, labels_of)
from .checkpoint import save_model, load_model, write_history, read_history, write_blob, read_blob
