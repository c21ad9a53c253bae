"""From-scratch Vision Transformer with manual backpropagation."""
from .checkpoint import load_checkpoint, save_checkpoint
from .kernels import BACKEND
from .layers import (cross_entropy_loss, extract_patches, layer_norm, multi_head_self_attention, relu,
                     softmax, sparse_categorical_accuracy)
from .model import ViTConfig, ViTModel, backward, embed, encoder_block, forward
from .train import TrainHistory, TrainingDiverged, train
