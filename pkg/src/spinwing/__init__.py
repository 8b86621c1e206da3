"""Spinning-wing robot drivetrain simulator."""
