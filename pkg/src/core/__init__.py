"""Core infrastructure and configuration"""