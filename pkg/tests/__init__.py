# Test package for cascade-feature-learner
