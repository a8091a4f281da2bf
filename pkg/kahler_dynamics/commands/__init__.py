"""Command blueprints: each registers its click commands on the application CLI."""
