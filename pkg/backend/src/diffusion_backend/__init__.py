"""Reference inpainting backend.

A small latent diffusion model served over the same HTTP wire protocol the
defurnishing pipeline's mock backends speak: multipart POST /v1/inpaint and
/v1/superres, PNG responses, structured JSON errors. The model is built
deterministically from a seed (no weight downloads) and supports LoRA
adapters produced by the bundled fine-tune script.
"""

from diffusion_backend.sampler import latent_init_mix

__version__ = "0.1.0"

__all__ = ["latent_init_mix", "__version__"]
