"""Insertion systems: model, enumeration, kinetics, grammar compilation and counter constructions."""

__version__ = "0.1.0"
