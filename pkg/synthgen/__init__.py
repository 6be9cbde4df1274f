"""合成多视角场景：骨架、相机阵列、运动、渲染与文件读写"""

from synthgen.config import DropoutWindow, ScenarioConfig
from synthgen.motion import GroundTruth, simulate
from synthgen.render import RenderedView, bbox_from_keypoints, render
from synthgen.rig import build_rig
from synthgen.skeleton import SkeletonTemplate
from synthgen.writer import (LoadedScenario, Scene, generate_scene, load_scenario, read_scenario_config,
                             write_scene)

__all__ = [
    "DropoutWindow", "ScenarioConfig", "GroundTruth", "simulate", "RenderedView", "bbox_from_keypoints",
    "render", "build_rig", "SkeletonTemplate", "LoadedScenario", "Scene", "generate_scene",
    "load_scenario", "read_scenario_config", "write_scene",
]
