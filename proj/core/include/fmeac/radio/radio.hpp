#pragma once

#include <span>

namespace fmeac::radio {

inline constexpr double kSpeedOfLight = 3e8;
inline constexpr double kBoltzmann = 1.38e-23;

enum class AttenuationForm {
  squared_3gpp,  // -min(12 * (d/width)^2, 30)
  as_printed,    // -min(12 * (d/width), 30)
};

// One sector antenna: an m x n uniform planar array behind a 3GPP element pattern.
struct AntennaConfig {
  int m_ula = 8;
  int n_ula = 8;
  double d_ula = 0.05;          // element spacing, m
  double theta_main_deg = 0.0;  // horizontal main lobe
  double phi_main_deg = 80.0;   // vertical main lobe
  double theta_3db_deg = 65.0;
  double phi_3db_deg = 65.0;
  double g_element_db = 5.0;
  double f_bs_hz = 3.5e9;
  double attenuation_cap_db = 30.0;
  double af_floor = 1e-12;
  AttenuationForm attenuation_form = AttenuationForm::squared_3gpp;
};

// Wrap an angle difference into [-180, 180).
double wrap_degrees(double deg);

double horizontal_attenuation_db(double theta_deg, const AntennaConfig& cfg);
double vertical_attenuation_db(double phi_deg, const AntennaConfig& cfg);
// A_T = A_H + A_V
double element_attenuation_db(double theta_deg, double phi_deg, const AntennaConfig& cfg);

// |sum_m sum_n exp(j k d (m sin(theta) cos(phi) + n sin(theta) sin(phi)))|^2, k = 2 pi f / c.
// Evaluated as the product of the two one-dimensional array sums.
double array_factor(double theta_deg, double phi_deg, const AntennaConfig& cfg);

// G_max = G_element + 10 log10(m n)
double max_gain_db(const AntennaConfig& cfg);
// G = G_max + A_T + 10 log10(max(AF, floor))
double antenna_gain_db(double theta_deg, double phi_deg, const AntennaConfig& cfg);

struct PathLossParams {
  double nlos_coefficient = 71.0;  // multiplies log10(H_TS) in the NLoS slope
};

// Urban macro path loss in dB. f_c enters the logs in GHz. Throws DomainError for
// non-positive distance, or non-positive height on the NLoS branch.
double path_loss_db(double distance_m, double carrier_hz, bool line_of_sight, double height_m,
                    const PathLossParams& params = {});

// k_B * T * Bw, in watts.
double noise_power_w(double bandwidth_hz, double temperature_k = 298.0,
                     double boltzmann = kBoltzmann);

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);
double db_to_linear(double db);
double linear_to_db(double lin);

struct SinrCapacity {
  double sinr = 0.0;      // linear
  double capacity = 0.0;  // bit/s
};

// SINR = S / (sum I + P_n) computed in watts; C = Bw log2(1 + SINR).
SinrCapacity sinr_and_capacity(double signal_dbm, std::span<const double> interference_dbm,
                               double bandwidth_hz, double noise_w);
SinrCapacity sinr_and_capacity_w(double signal_w, double interference_w, double bandwidth_hz,
                                 double noise_w);

// Q(x) ~ 0.5 exp(-x^2 / 2)
double q_function(double x);
// BPSK bit error rate Q(sqrt(2 sinr)).
double bpsk_ber(double sinr);
// 1 - (1 - ber)^L
double packet_loss_rate(double ber, double packet_bits);

}  // namespace fmeac::radio
