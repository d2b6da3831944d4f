from .api import HitBatch, TwoLevelAccel
from .bvh import Bvh, EmptyInput, build_bvh, check_containment
from .compile import CompiledScene, compile_scene

__all__ = ["HitBatch", "TwoLevelAccel", "Bvh", "EmptyInput", "build_bvh",
           "check_containment", "CompiledScene", "compile_scene"]
