"""Fair customer allocation among oligopoly firms."""
