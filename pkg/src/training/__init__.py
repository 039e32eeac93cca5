from training.config import Config
from training.dataset import SyntheticCorpus, SyntheticSpeaker, Utterance, generate_dataset
from training.optimizer import Adam, clip_grad_norm, noam_rate
from training.checkpoint import Checkpoint, read_checkpoint, restore, save_checkpoint
from training.trainer import Trainer, TrainResult, load_model, synthesize_mel, train
from training.ablation import ablation_configs, ablation_matrix
