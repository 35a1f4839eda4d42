"""Квазивероятности Кирквуда-Дирака и KD-когерентность."""
