from layers.module import Module, Parameter, glorot_uniform
from layers.linear import Conv1d, Dropout, Embedding, LayerNorm, Linear
from layers.attention import MultiHeadAttention, PositionwiseFeedForward, TransformerEncoderBlock, sinusoid_encoding
from layers.pooling import AttentionPool
