from backbone.saln import StyleAdaptiveLayerNorm, saln
from backbone.blocks import FFTBlock
from backbone.encoder import FusionEncoder, TextEncoder, fusion_encode, text_encode
from backbone.variance import VarianceAdapter, VarianceTargets, length_regulate, variance_adapter
from backbone.decoder import MelDecoder, mel_decode
from backbone.loss import LOSS_TERMS, reconstruction_loss
from backbone.model import CifTts, InjectionSite, ModelOutput, model_forward
from backbone.vocab import PhonemeVocabulary, read_phoneme_file
