"""Fixed text assets for the evaluation bench."""
