from setuptools import Extension, setup

setup(
    ext_modules=[
        Extension(
            "zkaudit._ristretto",
            sources=["src/zkaudit/_ristretto.c"],
            extra_compile_args=["-O3", "-std=c11"],
            optional=True,
        )
    ]
)
