# v1.0.0 - Tabletop Rearrangement Planner
# Package initializer for the world module (table geometry and plan types).
