"""Пакет тестов для kd_coherence."""
