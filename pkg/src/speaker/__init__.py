from speaker.content_extractor import ContentExtractor, InStats, content_forward, instance_norm
from speaker.audio_encoder import AudioEncoder, encode_audio
from speaker.pipeline import (
    SpeakerPipeline, StreamFusion, TemporalPooling, align_content, negate, speaker_forward,
)
