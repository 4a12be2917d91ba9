"""ePCA: covariance estimation and denoising for exponential-family noise"""

__version__ = "1.0.0"
__description__ = "Exponential-family PCA, EBLP denoising and random-matrix diagnostics"
