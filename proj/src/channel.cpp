#include "nfbt/channel.hpp"

#include <cmath>
#include <string>

namespace nfbt {

ArrayConfig ArrayConfig::half_wavelength(int num_antennas, double wavelength, int num_rf_chains,
                                         int phase_bits) {
  ArrayConfig cfg;
  cfg.num_antennas = num_antennas;
  cfg.wavelength = wavelength;
  cfg.antenna_spacing = wavelength / 2.0;
  cfg.num_rf_chains = num_rf_chains;
  cfg.phase_bits = phase_bits;
  cfg.validate();
  return cfg;
}

void ArrayConfig::validate() const {
  if (num_antennas < 1) throw DomainError("ArrayConfig: num_antennas must be >= 1");
  if (num_rf_chains < 1 || num_rf_chains > num_antennas) {
    throw DomainError("ArrayConfig: num_rf_chains must be in [1, num_antennas]");
  }
  if (!(antenna_spacing > 0.0)) throw DomainError("ArrayConfig: antenna_spacing must be > 0");
  if (!(wavelength > 0.0)) throw DomainError("ArrayConfig: wavelength must be > 0");
  if (phase_bits < 1 || phase_bits > 15) throw DomainError("ArrayConfig: phase_bits must be in [1, 15]");
}

double rayleigh_distance(const ArrayConfig& cfg) {
  const double aperture = cfg.aperture();
  return 2.0 * aperture * aperture / cfg.wavelength;
}

CVector steering_vector(const ArrayConfig& cfg, double angle, double distance) {
  if (!(distance > 0.0)) throw DomainError("steering_vector: distance must be > 0");
  if (!(std::abs(angle) <= 1.0)) throw DomainError("steering_vector: |angle| must be <= 1");
  const int n_ant = cfg.num_antennas;
  const double k = cfg.wavenumber();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ant));
  CVector b(n_ant);
  for (int n = 0; n < n_ant; ++n) {
    const double offset = cfg.element_offset(n) * cfg.antenna_spacing;
    // r_n - r computed as (r_n^2 - r^2) / (r_n + r); the direct difference
    // loses most of its digits once r is much larger than the aperture.
    const double num = offset * offset - 2.0 * distance * offset * angle;
    const double r_n = std::sqrt(distance * distance + num);
    const double path_diff = num / (r_n + distance);
    b(n) = std::polar(scale, -k * path_diff);
  }
  return b;
}

CVector far_field_vector(const ArrayConfig& cfg, double angle) {
  if (!(std::abs(angle) <= 1.0)) throw DomainError("far_field_vector: |angle| must be <= 1");
  const int n_ant = cfg.num_antennas;
  const double k = cfg.wavenumber();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ant));
  CVector b(n_ant);
  for (int n = 0; n < n_ant; ++n) {
    const double offset = cfg.element_offset(n) * cfg.antenna_spacing;
    b(n) = std::polar(scale, k * offset * angle);
  }
  return b;
}

void ChannelDistribution::validate() const {
  if (!(angle_lo < angle_hi) || angle_lo < -1.0 || angle_hi > 1.0) {
    throw DomainError("ChannelDistribution: angle range must satisfy -1 <= lo < hi <= 1");
  }
  if (!(distance_lo > 0.0) || !(distance_lo <= distance_hi)) {
    throw DomainError("ChannelDistribution: distance range must satisfy 0 < lo <= hi");
  }
  if (!(gain_variance > 0.0)) throw DomainError("ChannelDistribution: gain_variance must be > 0");
}

ChannelRealization make_channel(const ArrayConfig& cfg, Complex gain, double angle,
                                double distance) {
  ChannelRealization ch;
  ch.gain = gain;
  ch.angle = angle;
  ch.distance = distance;
  ch.vector = std::sqrt(static_cast<double>(cfg.num_antennas)) * gain *
              steering_vector(cfg, angle, distance);
  return ch;
}

ChannelRealization make_channel(const ArrayConfig& cfg, const ChannelDistribution& dist,
                                Rng& rng) {
  dist.validate();
  // Fixed draw order: angle, distance, gain.
  const double angle = rng.uniform(dist.angle_lo, dist.angle_hi);
  const double distance = dist.distance_lo == dist.distance_hi
                              ? dist.distance_lo
                              : rng.uniform(dist.distance_lo, dist.distance_hi);
  const Complex gain = rng.complex_normal(dist.gain_variance);
  return make_channel(cfg, gain, angle, distance);
}

Complex received_signal(const CVector& channel, const CVector& codeword, Complex symbol,
                        double noise_power, Rng& rng) {
  require_same_size(channel.size(), codeword.size(), "received_signal");
  if (noise_power < 0.0) throw DomainError("received_signal: noise_power must be >= 0");
  Complex y = channel.dot(codeword) * symbol;  // Eigen's dot conjugates the left operand
  if (noise_power > 0.0) y += rng.complex_normal(noise_power);
  return y;
}

Complex beamforming_gain(const CVector& codeword, double angle, double distance,
                         const ArrayConfig& cfg) {
  require_same_size(codeword.size(), cfg.num_antennas, "beamforming_gain");
  const CVector b = steering_vector(cfg, angle, distance);
  return std::sqrt(static_cast<double>(cfg.num_antennas)) * b.dot(codeword);
}

}  // namespace nfbt
