"""Notification-log affect inference: ingestion, features, discretization and learning."""

__version__ = "0.1.0"
