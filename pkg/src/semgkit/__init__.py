"""Surface-EMG filtering, amplitude-ratio analysis, windowed features and intent classifiers."""

__version__ = "0.1.0"
