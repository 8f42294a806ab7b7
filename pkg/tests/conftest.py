import hypothesis

hypothesis.settings.register_profile(
    "pkg", deadline=None, max_examples=60
)
hypothesis.settings.load_profile("pkg")
