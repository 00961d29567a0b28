"""cfprobe: counterfactual probing of text-conditioned diffusion models on synthetic chest images."""

__version__ = "0.1.0"
