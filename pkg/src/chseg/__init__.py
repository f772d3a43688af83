"""Multichannel speech segmentation (VAD, OSD, SCD) with circular-harmonics DOA features."""

from .array_sim import (ArrayGeometry, MultichannelWaveform, ScenarioSpec, SourceSpec,
                        deactivate_channels, gen_scenario, synth_plane_wave)
from .dsp import SpectrogramTensor, stft
from .features import FEATURE_DIMS, FeatureNormalizer, FeatureRecipe, FeatureSequence, concat
from .labeling import AnnotationSet, Segment
from .tcn import TCN, Adam, TCNConfig, param_count

__version__ = "0.1.0"
