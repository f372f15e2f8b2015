#pragma once

#include "nfbt/rng.hpp"
#include "nfbt/types.hpp"

namespace nfbt {

/// Uniform linear array with a hybrid analog/digital front end.
struct ArrayConfig {
  int num_antennas = 512;
  double antenna_spacing = 0.0025;  // meters
  double wavelength = 0.005;        // meters
  int num_rf_chains = 100;
  int phase_bits = 5;

  /// Half-wavelength ULA.
  static ArrayConfig half_wavelength(int num_antennas, double wavelength, int num_rf_chains,
                                     int phase_bits);

  void validate() const;

  /// Element offset in units of the spacing, (2n - N - 1) / 2 for n = 1..N.
  double element_offset(int n) const { return (2.0 * (n + 1) - num_antennas - 1) / 2.0; }
  double aperture() const { return num_antennas * antenna_spacing; }
  double wavenumber() const { return 2.0 * kPi / wavelength; }

  bool operator==(const ArrayConfig&) const = default;
};

/// 2 D^2 / lambda with D = N d.
double rayleigh_distance(const ArrayConfig& cfg);

/// Near-field (spherical-wave) array response for a source at direction
/// cosine `angle` and range `distance` from the array center. Unit norm.
CVector steering_vector(const ArrayConfig& cfg, double angle, double distance);

/// Planar-wavefront limit of steering_vector().
CVector far_field_vector(const ArrayConfig& cfg, double angle);

struct ChannelRealization {
  Complex gain;
  double angle = 0.0;
  double distance = 0.0;
  CVector vector;  // sqrt(N) * gain * b(angle, distance)
};

struct ChannelDistribution {
  double angle_lo = -1.0;
  double angle_hi = 1.0;
  double distance_lo = 20.0;
  double distance_hi = 100.0;
  double gain_variance = 1.0;  // gain ~ CN(0, gain_variance)

  void validate() const;
};

ChannelRealization make_channel(const ArrayConfig& cfg, Complex gain, double angle,
                                double distance);
ChannelRealization make_channel(const ArrayConfig& cfg, const ChannelDistribution& dist,
                                Rng& rng);

/// y = h^H v s + n with n ~ CN(0, noise_power). Noise is only drawn when
/// noise_power > 0, so noiseless calls leave the stream untouched.
Complex received_signal(const CVector& channel, const CVector& codeword, Complex symbol,
                        double noise_power, Rng& rng);

/// G(v, theta, r) = sqrt(N) b(theta, r)^H v.
Complex beamforming_gain(const CVector& codeword, double angle, double distance,
                         const ArrayConfig& cfg);

}  // namespace nfbt
