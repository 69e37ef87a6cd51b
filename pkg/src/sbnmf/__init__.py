"""Mean-field theory for sigmoid belief networks."""
