"""ugv-uav-planner - cooperative UGV/UAV path planning simulator and strategy library"""

__version__ = "0.1.0"
