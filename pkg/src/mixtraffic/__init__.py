"""Car-following simulation with TD3 and IDM drivers, Edie fundamental
diagrams and VT-CPFM fuel accounting."""

__version__ = "0.1.0"
