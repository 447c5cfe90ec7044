"""Test suite for twitter-articlenator."""
