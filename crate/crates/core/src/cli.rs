//! Command-line front end (implementation below).
