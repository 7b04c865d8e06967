"""Joint velocity-acceleration estimation from WiFi CSI and fall detection on the resulting traces."""

__version__ = "0.1.0"
