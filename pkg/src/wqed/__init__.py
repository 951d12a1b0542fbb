"""Few-photon scattering solutions for a waveguide-coupled driven emitter."""

__version__ = "0.1.0"
