"""Block-level G.726 (32 kbit/s) model used only to generate frozen test vectors.

Written independently of ``transteg.codec.g726``: every quantity is kept as an
unsigned machine word of the width the recommendation gives it (two's
complement or sign-magnitude), and each function mirrors one named block of
the recommendation's computational description.  It is slow and is never
imported by the package.
"""

MASK = {n: (1 << n) - 1 for n in range(1, 25)}


def sign(word, bits):
    return (word >> (bits - 1)) & 1


def to_word(value, bits):
    return value & MASK[bits]


def bitlen(mag):
    return mag.bit_length()


# quantizer decision levels, normalized log domain, 12-bit two's complement
def QUAN(DLN, DS):
    dln = DLN - 4096 if DLN & 0x800 else DLN
    bounds = [-124, 80, 178, 246, 300, 349, 400]
    mag = 0
    for b in bounds:
        if dln >= b:
            mag += 1
    if mag == 0:
        return 15
    return (15 - mag) if DS else mag


DQLN_TABLE = [2048, 4, 135, 213, 273, 323, 373, 425]
WI_TABLE = [4084, 18, 41, 64, 112, 198, 355, 1122]
FI_TABLE = [0, 0, 0, 1, 1, 1, 3, 7]


def magnitude_index(I):
    return (15 - I) if I & 8 else I


def LOG(D):
    DS = sign(D, 16)
    DQM = ((65536 - D) & 32767) if DS else D
    EXP = bitlen(DQM >> 1)
    MANT = ((DQM << 7) >> EXP) & 127
    return (EXP << 7) + MANT, DS


def SUBTB(DL, Y):
    return (DL + 4096 - (Y >> 2)) & 4095


def ADDA(DQLN, Y):
    return (DQLN + (Y >> 2)) & 4095


def ANTILOG(DQL, DQS):
    DS = DQL >> 11
    DEX = (DQL >> 7) & 15
    DQT = 128 + (DQL & 127)
    DQMAG = 0 if DS else (DQT << 7) >> (14 - DEX)
    return (DQS << 15) + DQMAG          # 16-bit sign-magnitude


def FLOAT(mag, s):
    EXP = bitlen(mag)
    MANT = ((mag << 6) >> EXP) if mag else 32
    return (s << 10) + (EXP << 6) + MANT  # 11-bit float


def FLOATA(DQ):
    return FLOAT(DQ & 16383, DQ >> 15)


def FLOATB(SR):
    SRS = sign(SR, 16)
    MAG = ((65536 - SR) & 32767) if SRS else SR
    return FLOAT(MAG, SRS)


def FMULT(An, SRn):
    AnS = sign(An, 16)
    AnMAG = ((16384 - (An >> 2)) & 8191) if AnS else (An >> 2)
    AnEXP = bitlen(AnMAG)
    AnMANT = ((AnMAG << 6) >> AnEXP) if AnMAG else 32
    SRnS = SRn >> 10
    SRnEXP = (SRn >> 6) & 15
    SRnMANT = SRn & 63
    WAnS = SRnS ^ AnS
    WAnEXP = SRnEXP + AnEXP
    WAnMANT = ((SRnMANT * AnMANT) + 48) >> 4
    if WAnEXP <= 26:
        WAnMAG = (WAnMANT << 7) >> (26 - WAnEXP)
    else:
        WAnMAG = ((WAnMANT << 7) << (WAnEXP - 26)) & 32767
    return ((65536 - WAnMAG) & 65535) if WAnS else WAnMAG


class Blocks:
    def __init__(self):
        self.YL = 34816
        self.YU = 544
        self.DMS = 0
        self.DML = 0
        self.AP = 0
        self.A = [0, 0]
        self.B = [0] * 6
        self.PK = [0, 0]
        self.DQ = [32] * 6
        self.SR = [32, 32]
        self.TD = 0

    def ACCUM(self):
        WB = [FMULT(self.B[n], self.DQ[n]) for n in range(6)]
        WA = [FMULT(self.A[n], self.SR[n]) for n in range(2)]
        SEZI = sum(WB) & 65535
        SEI = (SEZI + WA[0] + WA[1]) & 65535
        SEZ = SEZI >> 1                 # 15-bit
        SE = SEI >> 1
        return SE, SEZ

    def MIX(self):
        AL = 64 if self.AP >= 256 else self.AP >> 2
        DIF = (self.YU + 16384 - (self.YL >> 6)) & 16383
        DIFS = DIF >> 13
        DIFM = ((16384 - DIF) & 8191) if DIFS else DIF
        PRODM = (DIFM * AL) >> 6
        PROD = ((16384 - PRODM) & 16383) if DIFS else PRODM
        return ((self.YL >> 6) + PROD) & 8191

    def step(self, I, SE, SEZ, Y):
        """Shared back end: reconstruction and all adaptation blocks."""
        mag_i = magnitude_index(I)
        DQS = I >> 3
        DQ = ANTILOG(ADDA(DQLN_TABLE[mag_i], Y), DQS)

        # ADDB / ADDC
        DQI = ((65536 - (DQ & 16383)) & 65535) if DQS else DQ
        SEI = (SE + 32768) if SE >> 14 else SE
        SR = (DQI + SEI) & 65535
        SEZI = (SEZ + 32768) if SEZ >> 14 else SEZ
        DQSEZ = (DQI + SEZI) & 65535
        PK0 = DQSEZ >> 15
        SIGPK = 1 if DQSEZ == 0 else 0

        # TRANS
        DQMAG = DQ & 16383
        YLINT = self.YL >> 15
        YLFRAC = (self.YL >> 10) & 31
        THR1 = (32 + YLFRAC) << YLINT
        THR2 = (31 << 10) if YLINT > 9 else THR1
        DQTHR = (THR2 + (THR2 >> 1)) >> 1
        TR = 1 if (self.TD == 1 and DQMAG > DQTHR) else 0

        # FUNCTW, FILTD, LIMB, FILTE
        WI = WI_TABLE[mag_i]
        DIF = ((WI << 5) + 131072 - Y) & 131071
        DIFSX = ((DIF >> 5) + 4096) if DIF >> 16 else (DIF >> 5)
        YUT = (Y + DIFSX) & 8191
        YUP = min(max(YUT, 544), 5120)
        DIF = (YUP + ((1048576 - self.YL) >> 6)) & 16383
        DIFSX = (DIF + 507904) if DIF >> 13 else DIF
        YLP = (self.YL + DIFSX) & 524287

        # UPA2
        A1, A2 = self.A
        PKS1 = PK0 ^ self.PK[0]
        PKS2 = PK0 ^ self.PK[1]
        UGA2A = 114688 if PKS2 else 16384
        if sign(A1, 16):
            FA1 = ((A1 << 2) & 131071) if A1 >= 57345 else (24577 << 2)
        else:
            FA1 = (A1 << 2) if A1 <= 8191 else (8191 << 2)
        FA = FA1 if PKS1 else (131072 - FA1) & 131071
        UGA2B = (UGA2A + FA) & 131071
        if SIGPK:
            UGA2 = 0
        else:
            UGA2 = (UGA2B >> 7) + 64512 if UGA2B >> 16 else UGA2B >> 7
        ULA2 = ((65536 - ((A2 >> 7) + 65024)) & 65535) if sign(A2, 16) else ((65536 - (A2 >> 7)) & 65535)
        A2T = (A2 + ((UGA2 + ULA2) & 65535)) & 65535
        # LIMC
        a2t = A2T - 65536 if sign(A2T, 16) else A2T
        A2P = to_word(min(max(a2t, -12288), 12288), 16)

        # UPA1, LIMD
        UGA1 = 0 if SIGPK else (65344 if PKS1 else 192)
        ULA1 = ((65536 - ((A1 >> 8) + 65280)) & 65535) if sign(A1, 16) else ((65536 - (A1 >> 8)) & 65535)
        A1T = (A1 + ((UGA1 + ULA1) & 65535)) & 65535
        a2p = A2P - 65536 if sign(A2P, 16) else A2P
        a1t = A1T - 65536 if sign(A1T, 16) else A1T
        A1P = to_word(min(max(a1t, a2p - 15360), 15360 - a2p), 16)

        # UPB
        BP = []
        for n in range(6):
            Bn = self.B[n]
            DQnS = self.DQ[n] >> 10
            UGBn = 0 if DQMAG == 0 else (65408 if (DQS ^ DQnS) else 128)
            ULBn = ((65536 - ((Bn >> 8) + 65280)) & 65535) if sign(Bn, 16) else ((65536 - (Bn >> 8)) & 65535)
            BP.append((Bn + ((UGBn + ULBn) & 65535)) & 65535)

        # TONE, TRIGB
        TDP = 1 if (sign(A2P, 16) and A2P < 53760) else 0
        if TR:
            A1P = A2P = 0
            BP = [0] * 6
        TDR = 0 if TR else TDP

        # FILTA, FILTB, SUBTC, FILTC, TRIGA
        FI = FI_TABLE[mag_i]
        DIF = ((FI << 9) + 8192 - self.DMS) & 8191
        DIFSX = ((DIF >> 5) + 3840) if DIF >> 12 else (DIF >> 5)
        DMSP = (DIFSX + self.DMS) & 4095
        DIF = ((FI << 11) + 32768 - self.DML) & 32767
        DIFSX = ((DIF >> 7) + 16128) if DIF >> 14 else (DIF >> 7)
        DMLP = (DIFSX + self.DML) & 16383
        DIF = ((DMSP << 2) + 32768 - DMLP) & 32767
        DIFM = ((32768 - DIF) & 16383) if DIF >> 14 else DIF
        DTHR = DMLP >> 3
        AX = 0 if (Y >= 1536 and DIFM < DTHR and TDP == 0) else 1
        DIF = ((AX << 9) + 2048 - self.AP) & 2047
        DIFSX = ((DIF >> 4) + 896) if DIF >> 10 else (DIF >> 4)
        APP = (DIFSX + self.AP) & 1023
        APR = 256 if TR else APP

        # DELAY everything
        self.YU, self.YL = YUP, YLP
        self.A = [A1P, A2P]
        self.B = BP
        self.DQ = [FLOATA(DQ)] + self.DQ[:5]
        self.SR = [FLOATB(SR)] + self.SR[:1]
        self.PK = [PK0, self.PK[0]]
        self.TD = TDR
        self.DMS, self.DML, self.AP = DMSP, DMLP, APR
        return SR

    def encode(self, sample):
        SL = to_word(sample >> 2, 16)   # 14-bit uniform PCM, sign-extended
        SE, SEZ = self.ACCUM()
        Y = self.MIX()
        SEI = (SE + 32768) if SE >> 14 else SE
        D = (SL + 65536 - SEI) & 65535
        DL, DS = LOG(D)
        I = QUAN(SUBTB(DL, Y), DS)
        self.step(I, SE, SEZ, Y)
        return I

    def decode(self, I):
        SE, SEZ = self.ACCUM()
        Y = self.MIX()
        SR = self.step(I & 15, SE, SEZ, Y)
        sr = SR - 65536 if SR >> 15 else SR
        return max(-32768, min(32767, sr << 2))
