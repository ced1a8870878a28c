"""Retweet-network toolkit for detecting strategic hashtag co-opting."""

__version__ = "0.1.0"

MANIFEST_SCHEMA_VERSION = "1"
