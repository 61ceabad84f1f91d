"""Shared utilities: settings, logging, errors"""
