"""impairlab: a desk-scale lab for audio impairment classification under
heavy label noise.

Synthesizes five-class impaired-speech datasets (background noise, reverb,
packet-loss distortion, low volume, clean) from seeded pseudo-speech, extracts
engineered / log-mel / raw-waveform representations, trains small numpy-only
neural networks on deliberately corrupted labels, and scores everything
against clean ground truth.
"""

from . import audio_io, errors, experiments, features, labelnoise, nn, synthesis
from .audio_io import AudioClip, read_wav, rms_dbfs, normalize_to_dbfs, write_wav
from .synthesis import (
    ImpairmentClass,
    LabeledDataset,
    build_dataset,
    load_manifest,
    pseudo_corpus,
    save_manifest,
)
from .experiments import ExperimentConfig, run_experiment

__version__ = "0.1.0"

__all__ = [
    "AudioClip", "ExperimentConfig", "ImpairmentClass", "LabeledDataset",
    "audio_io", "build_dataset", "errors", "experiments", "features",
    "labelnoise", "load_manifest", "nn", "normalize_to_dbfs", "pseudo_corpus",
    "read_wav", "rms_dbfs", "run_experiment", "save_manifest", "synthesis",
    "write_wav", "__version__",
]
