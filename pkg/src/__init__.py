"""Inverse-graphics workbench: scene programs, numeric-head decoding and evaluation"""
__version__ = '1.0.0'
