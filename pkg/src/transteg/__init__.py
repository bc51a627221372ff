"""TranSteg: hiding data in RTP voice streams by covert G.711 to G.726 transcoding."""

__version__ = "0.1.0"
