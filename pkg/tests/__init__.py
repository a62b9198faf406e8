"""doc2edag tests."""
