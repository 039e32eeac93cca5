from dsp.wav import SAMPLE_RATE, AudioBuffer, load_wav, save_wav
from dsp.spectral import HOP_LENGTH, N_FFT, N_MELS, mel_filterbank, mel_spectrogram, mfcc, stft, trim_silence
from dsp.melio import read_mel, write_mel, write_mel_csv
