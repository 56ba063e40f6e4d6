import hypothesis

hypothesis.settings.register_profile("fast", max_examples=25)
hypothesis.settings.register_profile("default", max_examples=100)
hypothesis.settings.register_profile("thorough", max_examples=400)
hypothesis.settings.load_profile("default")
