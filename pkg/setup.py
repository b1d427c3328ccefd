from setuptools import setup, find_packages


setup(name='pysturm',
      version='0.1.1',
      author='pysturm developers',
      description='pysturm counts and verifies the zeros of linear combinations of Sturm-Liouville eigenfunctions.',
      long_description=open('README.md', encoding='utf8').read(),
      long_description_content_type='text/markdown',
      classifiers=[
        'Programming Language :: Python :: 3',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering :: Mathematics'
      ],
      license='BSL',
      packages=find_packages(exclude=['tests', 'examples', 'examples.*']),
      python_requires='>=3.9',
      install_requires=[
          'numpy',
          'pytest',
          'scipy>=1.12',
          'sympy',
          'tqdm',
          'typing_extensions',
      ],
      extras_require={
          'test': ['hypothesis'],
      },
      entry_points={
          'console_scripts': ['pysturm = pysturm.cli:run'],
      },
      )
