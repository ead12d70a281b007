# memlab/core/constants.py

# parameter init range, uniform(-INIT_SCALE, INIT_SCALE)
INIT_SCALE = 0.1
LSTM_FORGET_BIAS = 1.0

# constant fill for fresh slot memories (keeps cosine well-defined)
MEMORY_INIT_VALUE = 1e-6

# added under the square root of squared norms
NORM_EPS = 1e-16
# added to weights before the log in sharpening
LOG_EPS = 1e-30

# ntm shift offsets, in order
SHIFT_OFFSETS = (-1, 0, 1)

# dnc read modes, in order
READ_MODES = ('backward', 'content', 'forward')

ACTIVATIONS = ('sigmoid', 'tanh', 'relu', 'softplus')

# program memory
GUMBEL_TEMPERATURE = 0.5
PROGRAM_ETA0 = 0.1
PROGRAM_ETA_DECAY = 0.9
PROGRAM_DECAY_EVERY = 1000

# vmed
KL_ANNEAL_FRACTION = 0.2
MC_KL_SAMPLES = 200_000

# optimizers
ADAM_DEFAULTS = {'lr': 1e-3, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8}
RMSPROP_DEFAULTS = {'lr': 1e-4, 'decay': 0.95, 'momentum': 0.9, 'eps': 1e-10}
DEFAULT_CLIP = 10.0

# reserved token ids for the two-process tasks
SEPARATOR_ID = 0   # end of input
EMPTY_ID = 1       # end of output / padding

METRIC_KINDS = ('bit_error', 'bit_accuracy', 'seq_accuracy', 'nld', 'precision_at_k', 'mse')

EVAL_SAMPLES = 1000
