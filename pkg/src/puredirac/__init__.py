"""Linear and group-level Dirac geometry with pure spinors."""
