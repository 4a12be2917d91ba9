"""Test suite for the ePCA toolkit"""
