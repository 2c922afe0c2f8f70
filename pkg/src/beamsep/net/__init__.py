from .model import TcnModel, mse_loss
from .adam import Adam
from .serialize import save_model, load_model
from .train import TrainConfig, train

__all__ = ["TcnModel", "mse_loss", "Adam", "save_model", "load_model", "TrainConfig", "train"]
