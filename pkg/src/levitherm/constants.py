"""Physical constants (SI) and unit conversions used at I/O boundaries."""

K_B = 1.380649e-23        # J/K
R_GAS = 8.314462618       # J/(mol K), N_A * k_B

HPA_TO_PA = 100.0
GHZ_TO_HZ = 1e9


def pa_from_hpa(p_hpa: float) -> float:
    return p_hpa * HPA_TO_PA
