"""Periodic centroidal Voronoi tessellations on flat 2D torii."""
