"""Hybrid precoding and combining for full-duplex mmWave joint radar/communication.

Modules map onto the processing chain:

- ``numkernels``   dense linear algebra and padded transforms
- ``propagation``  arrays, channels, random scenarios
- ``metrics``      spectral efficiency, radar gains, radar SINR
- ``txdesign``     fully digital precoders and MS combiners
- ``hybridize``    analog/digital decomposition (PE-AltMin)
- ``rxcombiner``   BS analog combiner (BCD) and the NSP benchmark
- ``radarproc``    OFDM range/velocity processing
- ``harness``      configs, experiments, CSV output, CLI
"""

__version__ = "0.1.0"
