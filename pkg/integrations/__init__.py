# Import/export adapters for event logs and trust edge lists
