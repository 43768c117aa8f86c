"""
Selecting through a viewfinder panel
====================================

A walk through the panel life cycle: the head-attached default panel, the
grab that freezes the captured view, zoom and panel scaling, and the touch
selection that maps a fingertip on the panel back to a point 5 m away.
"""

import numpy as np

from viewfinder.geometry import Plane, Pose, panel_uv_to_world, visual_angle
from viewfinder.taskgen import TechniqueKind, layout_targets
from viewfinder.technique import (
    Grab, Reset, SetPanelScale, SetViewZoom, adjusted_visual_angle, configure, default_panel,
    proxy_uv, selection_point,
)
from viewfinder.geometry import quat_look

# The user stands at the origin looking down +z. Before configuration the
# panel rides along with the head, below and in front of the eyes.
head = Pose([0.0, 0.0, 0.0])
cfg = default_panel(head)
print("default panel centre:", cfg.panel.center, "state:", cfg.panel.state)

# Grabbing freezes the view at the current head pose. Here the panel is
# moved 0.4 m straight ahead, facing the user.
pose = Pose([0.0, 0.0, 0.4], quat_look([0.0, 0.0, 1.0]))
cfg = configure(cfg, Grab(pose), head)
print("captured view origin:", cfg.view.origin, "h_fov:", cfg.view.h_fov)

# A 1 degree target at 5 m is tiny. Zooming the captured view by 3 and
# enlarging the panel by 1.5 makes its proxy on the panel much larger.
layout = layout_targets(11, 1.0, 0.0873, 5.0)
target = layout.centers[3]
print(f"true visual angle: {visual_angle(0.0873, 5.0):.2f} deg")
for cmd in (SetViewZoom(3.0), SetPanelScale(1.5)):
    cfg = configure(cfg, cmd, head)
    angle = adjusted_visual_angle(TechniqueKind.ViewfinderTouch, cfg, 0.0873, target, head)
    print(f"after {type(cmd).__name__}: proxy visual angle {angle:.2f} deg")

# Touch selection: put the fingertip 1 mm through the panel at the proxy of
# the target. The selection ray goes from the captured view origin through
# the matching point of the control plane and lands on the target itself.
uv = proxy_uv(cfg, target)
fingertip = panel_uv_to_world(cfg.panel, *uv) - 0.001 * cfg.panel.front_normal
hit = selection_point(TechniqueKind.ViewfinderTouch, cfg, fingertip, Plane([0, 0, 5], [0, 0, -1]))
print("proxy uv:", np.round(uv, 4), " selection error (m):", np.linalg.norm(hit - target))

# Reset puts the panel back on the head.
cfg = configure(cfg, Reset(), head)
print("after reset:", cfg.panel.state, cfg.panel.center)
