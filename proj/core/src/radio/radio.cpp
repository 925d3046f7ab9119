#include "fmeac/radio/radio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "fmeac/common/errors.hpp"

namespace fmeac::radio {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double attenuation(double offset_deg, double width_deg, const AntennaConfig& cfg) {
  const double ratio = wrap_degrees(offset_deg) / width_deg;
  const double raw = cfg.attenuation_form == AttenuationForm::squared_3gpp ? 12.0 * ratio * ratio
                                                                           : 12.0 * ratio;
  return -std::min(raw, cfg.attenuation_cap_db);
}

// |sum_{k<count} exp(j k psi)|^2
double linear_array_power(int count, double psi) {
  std::complex<double> sum{0.0, 0.0};
  for (int k = 0; k < count; ++k) sum += std::polar(1.0, psi * k);
  return std::norm(sum);
}

}  // namespace

double wrap_degrees(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

double horizontal_attenuation_db(double theta_deg, const AntennaConfig& cfg) {
  return attenuation(theta_deg - cfg.theta_main_deg, cfg.theta_3db_deg, cfg);
}

double vertical_attenuation_db(double phi_deg, const AntennaConfig& cfg) {
  return attenuation(phi_deg - cfg.phi_main_deg, cfg.phi_3db_deg, cfg);
}

double element_attenuation_db(double theta_deg, double phi_deg, const AntennaConfig& cfg) {
  return horizontal_attenuation_db(theta_deg, cfg) + vertical_attenuation_db(phi_deg, cfg);
}

double array_factor(double theta_deg, double phi_deg, const AntennaConfig& cfg) {
  const double k = 2.0 * std::numbers::pi * cfg.f_bs_hz / kSpeedOfLight;
  const double theta = theta_deg * kDeg;
  const double phi = phi_deg * kDeg;
  const double psi_m = k * cfg.d_ula * std::sin(theta) * std::cos(phi);
  const double psi_n = k * cfg.d_ula * std::sin(theta) * std::sin(phi);
  return linear_array_power(cfg.m_ula, psi_m) * linear_array_power(cfg.n_ula, psi_n);
}

double max_gain_db(const AntennaConfig& cfg) {
  return cfg.g_element_db + 10.0 * std::log10(static_cast<double>(cfg.m_ula) * cfg.n_ula);
}

double antenna_gain_db(double theta_deg, double phi_deg, const AntennaConfig& cfg) {
  const double af = std::max(array_factor(theta_deg, phi_deg, cfg), cfg.af_floor);
  return max_gain_db(cfg) + element_attenuation_db(theta_deg, phi_deg, cfg) + 10.0 * std::log10(af);
}

double path_loss_db(double distance_m, double carrier_hz, bool line_of_sight, double height_m,
                    const PathLossParams& params) {
  if (!(distance_m > 0.0)) throw DomainError("path_loss_db: distance must be positive");
  const double f_ghz = carrier_hz / 1e9;
  if (line_of_sight) {
    return 28.0 + 22.0 * std::log10(distance_m) + 20.0 * std::log10(f_ghz);
  }
  if (!(height_m > 0.0)) throw DomainError("path_loss_db: NLoS height must be positive");
  return -17.5 + 20.0 * std::log10(40.0 * std::numbers::pi * f_ghz / 3.0) +
         (46.0 - params.nlos_coefficient * std::log10(height_m)) * std::log10(distance_m);
}

double noise_power_w(double bandwidth_hz, double temperature_k, double boltzmann) {
  return boltzmann * temperature_k * bandwidth_hz;
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

SinrCapacity sinr_and_capacity_w(double signal_w, double interference_w, double bandwidth_hz,
                                 double noise_w) {
  SinrCapacity out;
  out.sinr = std::max(0.0, signal_w / (interference_w + noise_w));
  out.capacity = bandwidth_hz * std::log2(1.0 + out.sinr);
  return out;
}

SinrCapacity sinr_and_capacity(double signal_dbm, std::span<const double> interference_dbm,
                               double bandwidth_hz, double noise_w) {
  double interference = 0.0;
  for (double i : interference_dbm) interference += dbm_to_watt(i);
  return sinr_and_capacity_w(dbm_to_watt(signal_dbm), interference, bandwidth_hz, noise_w);
}

double q_function(double x) { return 0.5 * std::exp(-0.5 * x * x); }

double bpsk_ber(double sinr) { return q_function(std::sqrt(2.0 * std::max(sinr, 0.0))); }

double packet_loss_rate(double ber, double packet_bits) {
  return std::clamp(1.0 - std::pow(1.0 - ber, packet_bits), 0.0, 1.0);
}

}  // namespace fmeac::radio
