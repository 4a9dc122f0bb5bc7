"""Raster image pipeline: rendering, filtering, contours, Hough rows, and spot detection."""
from .color import color_band_mask, hsv_threshold, rgb_to_hsv
from .contours import ClassifierThresholds, Contour, classify_contours, find_contours, label
from .filters import box_kernel, canny, closing, dilate, erode, gaussian_blur, gaussian_kernel
from .hough import DetectedRow, hough_lines, select_row
from .image import crop, read_pnm, to_gray, write_pnm
from .pipeline import (Calibration, VisionConfig, WeedDetections, detect_laser_spot, detect_rows,
                       detect_weeds, gantry_to_pixel, mirror_transform, pixel_to_gantry)
from .render import CameraModel, motion_blur_length, render_view, row_camera, weed_camera

__all__ = [
    "Calibration", "CameraModel", "ClassifierThresholds", "Contour", "DetectedRow",
    "VisionConfig", "WeedDetections", "box_kernel", "canny", "classify_contours", "closing",
    "color_band_mask", "crop", "detect_laser_spot", "detect_rows", "detect_weeds", "dilate",
    "erode", "find_contours", "gantry_to_pixel", "gaussian_blur", "gaussian_kernel",
    "hough_lines", "hsv_threshold", "label", "mirror_transform", "motion_blur_length",
    "pixel_to_gantry", "read_pnm", "render_view", "rgb_to_hsv", "row_camera", "select_row",
    "to_gray", "weed_camera", "write_pnm",
]
