"""Frozen coefficient tables shared by the compiled and pure-Python kernels.

All values were generated offline with mpmath at 50 decimal digits and are
exact double roundings.
"""

EULER_GAMMA = 0.5772156649015329

# Arguments below SHIFT_THRESHOLD are raised by the usual recurrences before
# the asymptotic series is applied; 10 keeps the first omitted term of every
# series below ~1e-16 relative.
SHIFT_THRESHOLD = 10.0

HALF_LOG_TWO_PI = 0.9189385332046727  # 0.5*ln(2*pi)

# Taylor coefficients of the reduced series around the zeros of ln(Gamma):
#   ln G(1+t) = -g*t + (t - log1p(t)) + sum_k ZETA_REDUCED[k-2] * t^k
#   ln G(2+t) = (1-g)*t            + sum_k ZETA_REDUCED[k-2] * t^k
# where ZETA_REDUCED[k-2] = (-1)^k (zeta(k)-1)/k, k = 2..32.  Valid |t| <= 0.5.
ZETA_REDUCED = (
    0.32246703342411321824,
    -0.067352301053198095133,
    0.020580808427784547879,
    -0.0073855510286739852663,
    0.0028905103307415232858,
    -0.0011927539117032609771,
    0.00050966952474304242234,
    -0.00022315475845357937976,
    9.9457512781808533715e-05,
    -4.49262367381331417e-05,
    2.0507212775670691553e-05,
    -9.439488275268395904e-06,
    4.3748667899074878042e-06,
    -2.0392157538013662368e-06,
    9.5514121304074198329e-07,
    -4.4924691987645660433e-07,
    2.1207184805554665869e-07,
    -1.0043224823968099609e-07,
    4.7698101693639805658e-08,
    -2.271109460894316491e-08,
    1.0838659214896954091e-08,
    -5.1834750419700466551e-09,
    2.4836745438024783172e-09,
    -1.1921401405860912074e-09,
    5.7313672416788620133e-10,
    -2.7595228851242331452e-10,
    1.3304764374244489481e-10,
    -6.4229645638381000221e-11,
    3.1044247747322272762e-11,
    -1.5021384080754142171e-11,
    7.2759744802390796625e-12,
)

# Stirling series for ln(Gamma): B_2n / (2n(2n-1)), n = 1..7.
LGAMMA_STIRLING = (
    0.08333333333333333,
    -0.002777777777777778,
    0.0007936507936507937,
    -0.0005952380952380953,
    0.0008417508417508417,
    -0.0019175269175269176,
    0.00641025641025641,
)

# Asymptotic series for digamma: B_2n / (2n), n = 1..7.
DIGAMMA_ASYMP = (
    0.08333333333333333,
    -0.008333333333333333,
    0.003968253968253968,
    -0.004166666666666667,
    0.007575757575757576,
    -0.021092796092796094,
    0.08333333333333333,
)

# Asymptotic series for trigamma: B_2n, n = 1..7.
TRIGAMMA_ASYMP = (
    0.16666666666666666,
    -0.03333333333333333,
    0.023809523809523808,
    -0.03333333333333333,
    0.07575757575757576,
    -0.2531135531135531,
    1.1666666666666667,
)
