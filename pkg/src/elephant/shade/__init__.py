from .disney import (LOBE_CLEARCOAT, LOBE_DIFFUSE, LOBE_SPECULAR,
                     MaterialBatch, evaluate, sample)
from .facetex import (FaceIdOutOfRange, FaceTextureCache, TextureIoError,
                      read_face_uncached, sample_texture, write_ftex)
from .lights import (ENV_PDF, LightSample, bind_environment_image,
                     eval_environment, quad_light_pdf, quad_normal_area,
                     sample_environment, sample_quad_light,
                     validate_quad_light)
from .tables import get_tables

__all__ = ["LOBE_CLEARCOAT", "LOBE_DIFFUSE", "LOBE_SPECULAR", "MaterialBatch",
           "evaluate", "sample", "FaceIdOutOfRange", "FaceTextureCache",
           "TextureIoError", "read_face_uncached", "sample_texture",
           "write_ftex", "ENV_PDF", "LightSample", "bind_environment_image",
           "eval_environment", "quad_light_pdf", "quad_normal_area",
           "sample_environment", "sample_quad_light", "validate_quad_light",
           "get_tables"]
