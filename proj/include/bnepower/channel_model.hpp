#pragma once

// Physical layer: Rayleigh type priors, SINR and Shannon throughput.
//
// Gains are power gains |h|^2. Every formula here is a pure function of its
// arguments and is templated on the scalar so the same code serves double
// production runs and long double reference checks.

#include "bnepower/common.hpp"

#include <cmath>
#include <numbers>
#include <span>

namespace bnepower {

struct ChannelType {
  int type_id = 0;
  Real gain = 1.0;
  Real prior = 1.0;
};

struct PhysicalParams {
  Real bandwidth = 1.0;
  Real noise_power = 0.1;
  Real c_min = 0.5;

  void validate() const;
  // SINR at which throughput equals c_min: 2^(c_min/B) - 1.
  Real target_sinr() const;
};

class NodeChannelProfile {
 public:
  NodeChannelProfile() = default;
  NodeChannelProfile(int node_id, std::vector<ChannelType> types, Real rayleigh_coeff);

  // Gains strictly increasing; priors are derived from the Rayleigh density.
  static NodeChannelProfile from_gain_levels(int node_id, std::span<const Real> gains,
                                             Real rayleigh_coeff);
  static NodeChannelProfile with_priors(int node_id, std::span<const Real> gains,
                                        std::span<const Real> priors, Real rayleigh_coeff);

  int node_id() const noexcept { return node_id_; }
  Real rayleigh_coeff() const noexcept { return rayleigh_coeff_; }
  const std::vector<ChannelType>& types() const noexcept { return types_; }
  int num_types() const noexcept { return static_cast<int>(types_.size()); }
  Real gain(int t) const { return types_.at(static_cast<std::size_t>(t)).gain; }
  Real prior(int t) const { return types_.at(static_cast<std::size_t>(t)).prior; }

 private:
  int node_id_ = 0;
  std::vector<ChannelType> types_;
  Real rayleigh_coeff_ = 0.5;
};

template <typename Scalar>
Scalar rayleigh_pdf(Scalar x, Scalar r_coff) {
  using std::exp;
  using std::isfinite;
  if (!isfinite(x) || x < Scalar(0)) throw InvalidArgument("rayleigh_pdf: x must be finite and >= 0");
  if (!isfinite(r_coff) || r_coff <= Scalar(0)) throw InvalidArgument("rayleigh_pdf: r_coff must be > 0");
  const Scalar r2 = r_coff * r_coff;
  return (x / r2) * exp(-(x * x) / (Scalar(2) * r2));
}

// Rayleigh density at each level, renormalized to a probability vector.
std::vector<Real> discretize_prior(std::span<const Real> gain_levels, Real r_coff);

template <typename Scalar>
Scalar sinr(int k, std::span<const Scalar> gains, std::span<const Scalar> powers, Scalar noise_power) {
  if (gains.size() != powers.size()) throw InvalidArgument("sinr: gains and powers differ in length");
  if (k < 0 || static_cast<std::size_t>(k) >= gains.size()) throw InvalidArgument("sinr: node index out of range");
  if (!(noise_power > Scalar(0))) throw InvalidArgument("sinr: noise power must be > 0");
  Scalar interference = Scalar(0);
  for (std::size_t j = 0; j < gains.size(); ++j) {
    if (powers[j] < Scalar(0)) throw InvalidArgument("sinr: negative transmit power");
    if (static_cast<int>(j) != k) interference += gains[j] * powers[j];
  }
  return gains[static_cast<std::size_t>(k)] * powers[static_cast<std::size_t>(k)] /
         (interference + noise_power);
}

// log2 evaluated as ln(1 + s) / ln 2; no fast approximations.
template <typename Scalar>
Scalar throughput_from_sinr(Scalar s, Scalar bandwidth) {
  using std::log1p;
  return bandwidth * log1p(s) / std::numbers::ln2_v<Scalar>;
}

template <typename Scalar>
Scalar throughput(int k, std::span<const Scalar> gains, std::span<const Scalar> powers, Scalar bandwidth,
                  Scalar noise_power) {
  return throughput_from_sinr(sinr<Scalar>(k, gains, powers, noise_power), bandwidth);
}

inline Real throughput(int k, std::span<const Real> gains, std::span<const Real> powers,
                       const PhysicalParams& params) {
  return throughput<Real>(k, gains, powers, params.bandwidth, params.noise_power);
}

}  // namespace bnepower
