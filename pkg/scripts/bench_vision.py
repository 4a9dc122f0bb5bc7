"""Time the per-frame vision stages on a rendered weed-camera frame (ms per call)."""
import timeit

import numpy as np

from laserweed.vision.pipeline import detect_rows, detect_weeds, green_mask
from laserweed.vision.render import finish, render_clean, row_camera, weed_camera, render_view
from laserweed.world import RobotState, ScenarioSpec, generate_scenario

world = generate_scenario(ScenarioSpec(), 1)
robot = RobotState(position=(2.5, 0.25), linear_speed_cm_s=42.5)
rng = np.random.default_rng(0)
cam = weed_camera()
clean = render_clean(world, robot, cam)
img = finish(clean, cam, 42.5, rng)
green_mask(img)  # builds the colour lookup table once
front = render_view(world, robot, row_camera(), rng)

for name, fn in [("render", lambda: render_clean(world, robot, cam)),
                 ("finish", lambda: finish(clean, cam, 42.5, rng)),
                 ("detect_weeds", lambda: detect_weeds(img)),
                 ("detect_rows", lambda: detect_rows(front))]:
    n = 20
    print(f"{name:<14}{timeit.timeit(fn, number=n) / n * 1000:8.2f}")
