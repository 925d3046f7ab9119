#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fmeac/common/errors.hpp"
#include "fmeac/common/rng.hpp"
#include "fmeac/radio/radio.hpp"

using namespace fmeac;
using namespace fmeac::radio;

namespace {

// Direct double sum over all elements of the planar array.
double phasor_oracle(double theta_deg, double phi_deg, const AntennaConfig& cfg) {
  const double rad = std::numbers::pi / 180.0;
  const double k = 2.0 * std::numbers::pi * cfg.f_bs_hz / 3e8;
  const double st = std::sin(theta_deg * rad);
  std::complex<double> sum{0.0, 0.0};
  for (int m = 0; m < cfg.m_ula; ++m) {
    for (int n = 0; n < cfg.n_ula; ++n) {
      const double phase = k * cfg.d_ula * (m * st * std::cos(phi_deg * rad) + n * st * std::sin(phi_deg * rad));
      sum += std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  return std::norm(sum);
}

}  // namespace

TEST(Attenuation, MainLobeIsZero) {
  const AntennaConfig cfg;
  EXPECT_DOUBLE_EQ(element_attenuation_db(cfg.theta_main_deg, cfg.phi_main_deg, cfg), 0.0);
}

TEST(Attenuation, FarOffAxisHitsTheCap) {
  const AntennaConfig cfg;
  EXPECT_DOUBLE_EQ(horizontal_attenuation_db(150.0, cfg), -30.0);
}

TEST(Attenuation, SquaredFormAtBeamwidth) {
  const AntennaConfig cfg;
  EXPECT_DOUBLE_EQ(horizontal_attenuation_db(cfg.theta_main_deg + cfg.theta_3db_deg, cfg), -12.0);
  EXPECT_DOUBLE_EQ(horizontal_attenuation_db(cfg.theta_main_deg - cfg.theta_3db_deg, cfg), -12.0);
}

TEST(Attenuation, AsPrintedFormIsLinear) {
  AntennaConfig cfg;
  cfg.attenuation_form = AttenuationForm::as_printed;
  EXPECT_DOUBLE_EQ(horizontal_attenuation_db(cfg.theta_main_deg + cfg.theta_3db_deg / 2.0, cfg), -6.0);
  // the printed expression turns into a gain below the main lobe
  EXPECT_GT(horizontal_attenuation_db(cfg.theta_main_deg - 10.0, cfg), 0.0);
}

TEST(Attenuation, ComponentsStayInRange) {
  const AntennaConfig cfg;
  Rng rng = make_rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double h = horizontal_attenuation_db(uniform(rng, -720, 720), cfg);
    const double v = vertical_attenuation_db(uniform(rng, -720, 720), cfg);
    EXPECT_LE(h, 0.0);
    EXPECT_GE(h, -30.0);
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, -30.0);
  }
}

TEST(ArrayFactor, BoresightIsSquaredElementCount) {
  const AntennaConfig cfg;
  EXPECT_NEAR(array_factor(0.0, 0.0, cfg), 4096.0, 4096.0 * 1e-12);
  EXPECT_NEAR(array_factor(0.0, 37.0, cfg), 4096.0, 4096.0 * 1e-12);
}

TEST(ArrayFactor, SingleElementIsOne) {
  AntennaConfig cfg;
  cfg.m_ula = cfg.n_ula = 1;
  EXPECT_DOUBLE_EQ(array_factor(33.0, 71.0, cfg), 1.0);
}

TEST(ArrayFactor, MatchesPhasorOracleAtTenDegrees) {
  const AntennaConfig cfg;
  const double oracle = phasor_oracle(10.0, 0.0, cfg);
  EXPECT_LT(std::abs(array_factor(10.0, 0.0, cfg) - oracle) / oracle, 1e-12);
}

TEST(ArrayFactor, MatchesPhasorOracleAtRandomAngles) {
  const AntennaConfig cfg;
  Rng rng = make_rng(2);
  for (int i = 0; i < 100; ++i) {
    const double th = uniform(rng, -180, 180);
    const double ph = uniform(rng, 0, 180);
    const double oracle = phasor_oracle(th, ph, cfg);
    const double af = array_factor(th, ph, cfg);
    // near array nulls both values are tiny; measure relative to max(oracle, 1)
    EXPECT_LT(std::abs(af - oracle) / std::max(oracle, 1.0), 1e-12) << th << " " << ph;
    EXPECT_GE(af, 0.0);
    EXPECT_LE(af, 4096.0 * (1 + 1e-12));
  }
}

TEST(AntennaGain, GoldenValues) {
  const AntennaConfig cfg;
  EXPECT_NEAR(max_gain_db(cfg), 5.0 + 10.0 * std::log10(64.0), 1e-12);
  EXPECT_NEAR(max_gain_db(cfg), 23.062, 1e-3);
  // boresight of both the element pattern and the array
  AntennaConfig aligned = cfg;
  aligned.phi_main_deg = 0.0;
  EXPECT_NEAR(antenna_gain_db(0.0, 0.0, aligned), 23.0618 + 36.1236, 1e-3);
}

TEST(AntennaGain, NullIsFloored) {
  AntennaConfig cfg;
  cfg.m_ula = 2;
  cfg.n_ula = 1;
  // two elements half a wavelength apart cancel at theta = 90, phi = 0
  cfg.d_ula = 3e8 / cfg.f_bs_hz / 2.0;
  const double g = antenna_gain_db(90.0, 0.0, cfg);
  EXPECT_NEAR(g, max_gain_db(cfg) + element_attenuation_db(90.0, 0.0, cfg) - 120.0, 1e-9);
}

TEST(AntennaGain, PeriodicInTheta) {
  const AntennaConfig cfg;
  Rng rng = make_rng(3);
  for (int i = 0; i < 50; ++i) {
    const double th = uniform(rng, -180, 180);
    const double ph = uniform(rng, 0, 180);
    EXPECT_NEAR(antenna_gain_db(th, ph, cfg), antenna_gain_db(th + 360.0, ph, cfg), 1e-7);
  }
}

TEST(PathLoss, LosGoldenValue) {
  EXPECT_NEAR(path_loss_db(100.0, 3.5e9, true, 20.0), 28.0 + 44.0 + 20.0 * std::log10(3.5), 1e-12);
  EXPECT_NEAR(path_loss_db(100.0, 3.5e9, true, 20.0), 82.881, 1e-3);
  EXPECT_NEAR(path_loss_db(1.0, 3.5e9, true, 20.0), 28.0 + 20.0 * std::log10(3.5), 1e-12);
}

TEST(PathLoss, NlosAsPrintedIsNegative) {
  const double expected = -17.5 + 20.0 * std::log10(40.0 * std::numbers::pi * 3.5 / 3.0) +
                          (46.0 - 71.0 * std::log10(20.0)) * 2.0;
  EXPECT_NEAR(path_loss_db(100.0, 3.5e9, false, 20.0), expected, 1e-12);
  EXPECT_NEAR(path_loss_db(100.0, 3.5e9, false, 20.0), -66.93, 0.01);
}

TEST(PathLoss, NlosCoefficientOverride) {
  PathLossParams p;
  p.nlos_coefficient = 7.1;
  EXPECT_GT(path_loss_db(100.0, 3.5e9, false, 20.0, p), 90.0);
}

TEST(PathLoss, DomainErrors) {
  EXPECT_THROW(path_loss_db(0.0, 3.5e9, true, 20.0), DomainError);
  EXPECT_THROW(path_loss_db(-5.0, 3.5e9, true, 20.0), DomainError);
  EXPECT_THROW(path_loss_db(10.0, 3.5e9, false, 0.0), DomainError);
}

TEST(Noise, GoldenValues) {
  EXPECT_NEAR(noise_power_w(20e6), 8.2248e-14, 8.2248e-14 * 1e-6);
  EXPECT_NEAR(watt_to_dbm(noise_power_w(20e6)), -100.85, 0.005);
  EXPECT_DOUBLE_EQ(noise_power_w(40e6), 2.0 * noise_power_w(20e6));
}

TEST(Sinr, SignalEqualToNoise) {
  const double pn = noise_power_w(20e6);
  const auto r = sinr_and_capacity(watt_to_dbm(pn), {}, 20e6, pn);
  EXPECT_NEAR(r.sinr, 1.0, 1e-12);
  EXPECT_NEAR(r.capacity, 20e6, 20e6 * 1e-12);
  const auto z = sinr_and_capacity_w(0.0, 0.0, 20e6, pn);
  EXPECT_EQ(z.capacity, 0.0);
}

TEST(Sinr, WorkedExample) {
  const double pn = noise_power_w(20e6);
  const std::vector<double> interferers{-70.0};
  const auto r = sinr_and_capacity(-60.0, interferers, 20e6, pn);
  const double sinr = 1e-9 / (1e-10 + pn);
  EXPECT_NEAR(r.sinr, sinr, sinr * 1e-12);
  EXPECT_NEAR(r.sinr, 9.9918, 1e-3);
  EXPECT_NEAR(r.capacity, 20e6 * std::log2(1.0 + sinr), 1e-3);
  EXPECT_NEAR(r.capacity / 1e6, 69.17, 0.01);
}

TEST(Sinr, AddingAnInterfererNeverHelps) {
  const double pn = noise_power_w(20e6);
  Rng rng = make_rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> interf;
    const double s = uniform(rng, -100, -40);
    double prev = sinr_and_capacity(s, interf, 20e6, pn).sinr;
    for (int k = 0; k < 4; ++k) {
      interf.push_back(uniform(rng, -120, -40));
      const double now = sinr_and_capacity(s, interf, 20e6, pn).sinr;
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(Bpsk, QAndBerGoldenValues) {
  EXPECT_DOUBLE_EQ(q_function(0.0), 0.5);
  EXPECT_DOUBLE_EQ(bpsk_ber(0.0), 0.5);
  EXPECT_NEAR(bpsk_ber(1.0), 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(bpsk_ber(1.0), 0.18394, 1e-5);
}

TEST(Bpsk, BerMonotoneAndVanishing) {
  double prev = bpsk_ber(0.0);
  for (double s = 0.1; s < 50.0; s += 0.1) {
    const double b = bpsk_ber(s);
    EXPECT_LE(b, prev);
    prev = b;
  }
  EXPECT_LT(bpsk_ber(100.0), 1e-40);
}

TEST(Plr, GoldenValues) {
  EXPECT_EQ(packet_loss_rate(0.0, 100), 0.0);
  EXPECT_NEAR(packet_loss_rate(1e-3, 100), 1.0 - std::pow(0.999, 100), 1e-15);
  EXPECT_NEAR(packet_loss_rate(1e-3, 100), 0.09521, 1e-5);
}

TEST(Plr, MonotoneInBerAndLength) {
  for (double ber = 0.0; ber < 0.5; ber += 0.01) {
    EXPECT_LE(packet_loss_rate(ber, 100), packet_loss_rate(ber + 0.01, 100));
    EXPECT_LE(packet_loss_rate(ber, 100), packet_loss_rate(ber, 101));
    const double v = packet_loss_rate(ber, 256);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Plr, MonteCarloPackets) {
  // 10^6 packets of 100 independent bit flips; count packets with any flipped bit. The
  // number of flips per packet is binomial, so draw it directly.
  Rng rng = make_rng(5);
  std::binomial_distribution<int> flips(100, 1e-3);
  const int packets = 1000000;
  int lost = 0;
  for (int i = 0; i < packets; ++i) lost += flips(rng) > 0 ? 1 : 0;
  const double empirical = static_cast<double>(lost) / packets;
  const double formula = packet_loss_rate(1e-3, 100);
  EXPECT_LT(std::abs(empirical - formula) / formula, 0.02);
}
