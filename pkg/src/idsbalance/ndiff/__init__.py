"""Small reverse-mode autodiff engine on float64 numpy arrays."""
from .nn import LAYER_KINDS, LayerSpec, Network
from .ops import (activation_forward, batch_norm_forward, conv1d_forward, dense_forward,
                  lstm_sequence, lstm_step, maxpool1d_forward, softmax_cross_entropy)
from .optim import CLASSIFIER_BETAS, GAN_BETAS, Adam, AdamState, adam_step
from .tensor import (Tensor, as_tensor, concat, exp, grad, index, leaky_relu, log, log_softmax,
                     matmul, mean, no_grad, relu, reshape, set_grad_enabled, sigmoid, softmax,
                     sqrt, stack, sum_, tanh)
