import setuptools

with open('README.md', 'r', encoding='utf-8') as fh:
    long_description = fh.read()

setuptools.setup(
    name='NOMFsim',
    version='1.0.0',
    author='Stefano Demarchi',
    author_email='stefano.demarchi@edu.unige.it',
    license='GNU General Public License with Commons Clause License Condition v1.0',
    description='Non-overlap median filtering of event-based binary images and a behavioral model '
                'of the SRAM in-memory array that executes it.',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=setuptools.find_packages(exclude=['tests']),
    package_data={'nomfsim': ['resources/json/*.json']},
    classifiers=[
        'Programming Language:: Python:: 3.11',
        'Development Status:: 4 - Beta',
        'Topic:: Scientific/Engineering:: Electronic Design Automation (EDA)',
        'Operating System:: OS Independent',
    ],
    python_requires='>=3.10',
    install_requires=['numpy>=1.24', 'scipy>=1.10'],
    extras_require={'test': ['pytest>=7']},
    entry_points={'console_scripts': ['nomfsim=nomfsim.main:main']},
)
