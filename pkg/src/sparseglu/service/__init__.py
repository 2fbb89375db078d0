"""Service subpackage; see app.create_app."""
