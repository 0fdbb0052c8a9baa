from hev_energy_lab.mlcore.backprop import EXTERNAL, SQUARED_ERROR, backprop, squared_error
from hev_energy_lab.mlcore.gradcheck import GradCheckReport, finite_difference_check
from hev_energy_lab.mlcore.lstm import (
    LstmWeights,
    init_lstm,
    lstm_cell_backward,
    lstm_cell_forward,
    lstm_sequence_backward,
    lstm_sequence_forward,
)
from hev_energy_lab.mlcore.mlp import MlpWeights, init_mlp, mlp_backward, mlp_forward
from hev_energy_lab.mlcore.optim import Adam, optimizer_step
from hev_energy_lab.mlcore.persistence import WeightFile, load_weights, save_weights
from hev_energy_lab.mlcore.rnn import RnnWeights, init_rnn, rnn_sequence_backward, rnn_sequence_forward
from hev_energy_lab.mlcore.scaling import StandardScaler

__all__ = [
    "EXTERNAL",
    "SQUARED_ERROR",
    "Adam",
    "GradCheckReport",
    "LstmWeights",
    "MlpWeights",
    "RnnWeights",
    "StandardScaler",
    "WeightFile",
    "backprop",
    "finite_difference_check",
    "init_lstm",
    "init_mlp",
    "init_rnn",
    "load_weights",
    "lstm_cell_backward",
    "lstm_cell_forward",
    "lstm_sequence_backward",
    "lstm_sequence_forward",
    "mlp_backward",
    "mlp_forward",
    "optimizer_step",
    "rnn_sequence_backward",
    "rnn_sequence_forward",
    "save_weights",
    "squared_error",
]
