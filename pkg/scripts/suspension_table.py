"""Print climb limits and the predicted outcome for every field-trial obstacle."""
from laserweed.experiments.stability import FIELD_TRIALS
from laserweed.kinematics import SuspensionConfig, climb_limit_cm, effective_height_cm, traversal_outcome
from laserweed.world import Obstacle

config = SuspensionConfig()
print(f"climb limit {climb_limit_cm(config):.1f} cm")
print(f"{'obstacle':<18} {'cm':>4} {'eff cm':>7}  climb    nav                    image")
for case in FIELD_TRIALS:
    ob = Obstacle(position=(0.0, 0.0), height_cm=case.height_cm, kind=case.kind)
    out = traversal_outcome(ob, config)
    print(f"{case.label:<18} {case.height_cm:>4g} {effective_height_cm(ob):>7.2f}  "
          f"{out.climb:<8} {out.nav_effect:<22} {out.image_effect}")
