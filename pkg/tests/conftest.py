import helpers  # noqa: F401  (registers the quadratic surrogate model)
