# v1.0.0 - Tabletop Rearrangement Planner
# Package initializer for the baselines module.
