"""Simulated pub/sub service with a combined proactive/reactive auto-scaler."""
