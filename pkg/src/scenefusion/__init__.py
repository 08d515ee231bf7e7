"""Multimodal scene classification toolkit.

Audio clips become MFCC feature vectors; images pass through a frozen
convolutional backbone; each modality gets its own classifier (the audio
topology found by evolutionary search) and a late-fusion head learns from
the two branches' concatenated pre-softmax outputs.
"""

from .audio_features import AudioClip, MfccConfig, clip_features
from .audio_branch import (
    EvoConfig,
    FitnessConfig,
    Genome,
    GenomeBounds,
    evolve_topology,
    train_audio_classifier,
)
from .convnet import BackboneSpec, BuiltinCnnBackbone, train_builtin_backbone
from .datasets import (
    PairedDataset,
    SynthConfig,
    generate_synthetic,
    load_manifest_dataset,
    mfcc_matrix,
)
from .evaluation import FoldPlan, FoldReport, evaluate, holdout_evaluate, kfold_split
from .fusion import FusedPairs, FusionModel, build_fusion_model, train_fusion_head
from .network import NetworkModel, TrainConfig, count_connections, mlp, softmax, train

__version__ = "0.1.0"
