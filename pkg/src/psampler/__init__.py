"""Occlusion-aware importance sampling of camera rays from SDF probability grids."""

from .errors import (BehindCamera, ConfigError, DegenerateDistribution, EmptyGridWarning,
                     InvalidDepth, NoIntersection, SamplerError)
from .geometry import (Camera, CameraBounds, SceneBoundary, camera_to_image, camera_to_world,
                       compute_bounds, image_to_camera, load_rig, project, ray_from_sample,
                       unproject, world_to_camera)
from .image_grid import (CameraGrid, apply_view_dependency, build_camera_grid,
                         interpolate_camera_grid, normalize, transmittance)
from .kernels import BACKEND
from .losses import (compute_alphas, compute_weights, evaluate_ray, total_surface_loss)
from .sampler import (Band, MarginalTables, MixSchedule, OUT_OF_SURFACE, Source, build_tables,
                      mix_fraction, near_sigma, sample_depth_for_pixel, sample_guided,
                      sample_ray_points, sample_rays, uniform_count)
from .scene_grid import (SceneGrid, build_scene_grid, logistic_density, partition_cells,
                         sigmoid_cdf)
from .sdf import Box, Slab, Sphere, Union

__version__ = "0.1.0"

__all__ = [
    "apply_view_dependency",
    "BACKEND",
    "Band",
    "BehindCamera",
    "Box",
    "build_camera_grid",
    "build_scene_grid",
    "build_tables",
    "Camera",
    "camera_to_image",
    "camera_to_world",
    "CameraBounds",
    "CameraGrid",
    "compute_alphas",
    "compute_bounds",
    "compute_weights",
    "ConfigError",
    "DegenerateDistribution",
    "EmptyGridWarning",
    "evaluate_ray",
    "image_to_camera",
    "interpolate_camera_grid",
    "InvalidDepth",
    "load_rig",
    "logistic_density",
    "MarginalTables",
    "mix_fraction",
    "MixSchedule",
    "near_sigma",
    "NoIntersection",
    "normalize",
    "OUT_OF_SURFACE",
    "partition_cells",
    "project",
    "ray_from_sample",
    "sample_depth_for_pixel",
    "sample_guided",
    "sample_ray_points",
    "sample_rays",
    "SamplerError",
    "SceneBoundary",
    "SceneGrid",
    "sigmoid_cdf",
    "Slab",
    "Source",
    "Sphere",
    "total_surface_loss",
    "transmittance",
    "uniform_count",
    "Union",
    "unproject",
    "world_to_camera",
]
