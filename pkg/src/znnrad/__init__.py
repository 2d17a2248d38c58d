"""znnrad: grayscale-image classification with zeroing-dynamics training.

Pipeline stages: scanline unscented Kalman denoising, adaptive spectral
band features (moments + co-occurrence textures), a linear classifier
whose weights evolve under integral-enhanced zeroing dynamics, and a
lizard-jump population search for hyperparameter tuning.
"""

__version__ = "0.1.0"
