//! Monte Carlo validation simulator (implementation below).
