# Solutore all-at-once parallel-in-time
