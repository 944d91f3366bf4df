"""Directly denoising diffusion models at desk scale."""
