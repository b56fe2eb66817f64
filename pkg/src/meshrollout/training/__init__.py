"""Next-step training: losses, AdamW schedule, samples, checkpoints and the loop.

Usage:
    from meshrollout.training import TrainConfig, train_model

    result = train_model(model_config, TrainConfig(epochs=2), split.train, seed=0)
"""

from .calibration import estimate_noise_scale
from .checkpoint import (
    CHECKPOINT_VERSION,
    checkpoint_path,
    latest_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .config import AuxLossConfig, TrainConfig
from .exceptions import (
    CheckpointError,
    IncompatibleLossError,
    NonFiniteGradientError,
    TrainingError,
)
from .losses import (
    cosine_similarity_loss,
    divergence_residual,
    enforced_mask,
    grad_supervision,
    main_loss,
)
from .optim import (
    AdamMoments,
    adamw_step,
    build_optimizer,
    check_finite_gradients,
    lr_at,
    set_learning_rate,
)
from .samples import (
    Prefetcher,
    Sample,
    epoch_order,
    make_sample,
    prefetch,
    sample_pairs,
)
from .trainer import (
    LATENT_FILE,
    LOG_FILE,
    TrainResult,
    Trainer,
    final_latent_trend,
    run_hash,
    train_model,
)

__all__ = [
    # Configuration
    "TrainConfig",
    "AuxLossConfig",
    # Models
    "Sample",
    "AdamMoments",
    "TrainResult",
    "CHECKPOINT_VERSION",
    "LOG_FILE",
    "LATENT_FILE",
    # Optimization
    "lr_at",
    "adamw_step",
    "build_optimizer",
    "set_learning_rate",
    "check_finite_gradients",
    # Losses
    "main_loss",
    "grad_supervision",
    "divergence_residual",
    "cosine_similarity_loss",
    "enforced_mask",
    # Samples
    "sample_pairs",
    "epoch_order",
    "make_sample",
    "Prefetcher",
    "prefetch",
    # Loop and checkpoints
    "Trainer",
    "train_model",
    "run_hash",
    "final_latent_trend",
    "estimate_noise_scale",
    "save_checkpoint",
    "load_checkpoint",
    "latest_checkpoint",
    "checkpoint_path",
    # Exceptions
    "TrainingError",
    "NonFiniteGradientError",
    "CheckpointError",
    "IncompatibleLossError",
]
