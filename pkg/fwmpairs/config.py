# fwmpairs/config.py
from scipy.constants import c as SPEED_OF_LIGHT  # noqa: F401  (re-exported)

# -----------------------------
# Unit scales (key unit -> SI)
# -----------------------------
NM = 1e-9
UM = 1e-6
PS = 1e-12
MW = 1e-3
MHZ = 1e6
KHZ = 1e3
PER_W_KM = 1e-3          # 1/(W·km) -> 1/(W·m)
PS2_PER_KM = 1e-27       # ps²/km -> s²/m
PS3_PER_KM = 1e-39
PS4_PER_KM = 1e-51

# -----------------------------
# Operating point
# -----------------------------
REFERENCE_FIBER = {
    "length_m": 1.8,
    "gamma_per_W_km": 110.0,
    "zero_dispersion_wavelength_nm": 735.7,
    "mode_diameter_um": 1.2,
    "refractive_index": 1.45,
}

REFERENCE_PUMP = {
    "wavelength_nm": 735.7,
    "bandwidth_nm": 0.1,
    "average_power_mW": 1.0,
    "repetition_rate_MHz": 80.0,
    "pulse_width_ps": 8.0,
}

REFERENCE_COLLECTION = {
    "signal_wavelength_nm": 688.5,
    "bandwidth_nm": 0.7,
}

REFERENCE_DETECTION = {
    "eta_s": 0.097,
    "eta_i": 0.076,
    "eta_pair": 0.0074,
}

# idler-later walkoff; see DESIGN.md for the sign choice
REFERENCE_CALIBRATION = {
    "matched_signal_nm": 688.5,
    "walkoff_ps": -2.0,
    "dispersion_power_mW": 0.5,
    "reference_power_mW": 1.0,
    "coincidence_rate_kHz": 37.6,
    "contrast": 10.0,
    "pair_ratio_signal": 0.96,
    "pair_ratio_idler": 0.50,
    "crosscheck_power_mW": 0.05,
    "crosscheck_pair_ratio_signal": 0.58,
    "crosscheck_pair_ratio_idler": 0.04,
    # cw-theory coincidence rate quoted for the reference power, unit pair efficiency
    "theory_coincidence_rate_kHz": 160.0,
}

DEFAULT_POWERS_MW = [0.05, 0.2, 0.4, 0.6, 0.8, 1.0]
DEFAULT_OFFSETS_NM = [round(-2.0 + 0.2 * k, 1) for k in range(21)]
DEFAULT_SCAN_POWER_MW = 0.5

# integration policy: short above the threshold, long below
SHORT_INTEGRATION_S = 30.0
LONG_INTEGRATION_S = 600.0
INTEGRATION_THRESHOLD_MW = 0.4

DEFAULT_SEED = 20050501
DEFAULT_BATCH_PULSES = 1_000_000
DEFAULT_WORKERS = 1

# -----------------------------
# Numerics
# -----------------------------
SHORTEST_SEARCH_WAVELENGTH = 400e-9
ROOT_GRID_POINTS = 2049
ROOT_RTOL = 1e-13
FIT_XTOL = 1e-8
FIT_MAX_ITERATIONS = 200
PASSBANDS = ("gaussian", "rect")
PAIR_BANDWIDTH_ARMS = ("idler", "signal")

# -----------------------------
# Output contracts
# -----------------------------
SWEEP_ANALYTIC_COLUMNS = [
    "an_D_s_Hz", "an_D_s_sigma_Hz", "an_D_i_Hz", "an_D_i_sigma_Hz",
    "an_D_c_Hz", "an_D_c_sigma_Hz", "an_D_a_Hz", "an_D_a_sigma_Hz",
    "an_contrast", "an_contrast_sigma", "an_R_s", "an_R_i",
]
SWEEP_COLUMNS = ["power_mW", "seconds"] + SWEEP_ANALYTIC_COLUMNS + [
    "pulses",
    "mc_D_s_Hz", "mc_D_s_sigma_Hz", "mc_D_i_Hz", "mc_D_i_sigma_Hz",
    "mc_D_c_Hz", "mc_D_c_sigma_Hz", "mc_D_a_Hz", "mc_D_a_sigma_Hz",
    "mc_contrast", "mc_contrast_sigma", "mc_R_s", "mc_R_i",
]

SCAN_COLUMNS = [
    "offset_nm", "weight", "model_contrast",
    "an_D_s_Hz", "an_D_c_Hz", "an_D_a_Hz", "an_contrast", "an_contrast_sigma",
    "pulses",
    "mc_D_s_Hz", "mc_D_c_Hz", "mc_D_a_Hz", "mc_contrast", "mc_contrast_sigma",
]

ZWM_COLUMNS = [
    "power_mW", "seconds",
    "an_D_c_Hz", "an_D_a_Hz", "an_self_s_contrast", "an_self_i_contrast",
    "an_V_Hz", "an_sigma_V_Hz", "an_V_over_sigma",
    "pulses",
    "mc_D_c_Hz", "mc_D_a_Hz", "mc_self_s_contrast", "mc_self_s_contrast_sigma",
    "mc_self_i_contrast", "mc_self_i_contrast_sigma",
    "mc_V_Hz", "mc_sigma_V_Hz", "mc_V_over_sigma",
]

# -----------------------------
# CLI
# -----------------------------
OUTPUT_DIR_ENV = "FWMPAIRS_OUTPUT_DIR"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_NUMERICAL = 4
