# Self-guided diffusion toolkit
# Diffusion models guided by self-annotated cluster labels, boxes and segmentations
