#include "bnepower/channel_model.hpp"

#include <cmath>
#include <numeric>

namespace bnepower {

void PhysicalParams::validate() const {
  require(std::isfinite(bandwidth) && bandwidth > 0, "bandwidth must be > 0");
  require(std::isfinite(noise_power) && noise_power > 0, "noise_power must be > 0");
  require(std::isfinite(c_min) && c_min >= 0, "c_min must be >= 0");
}

Real PhysicalParams::target_sinr() const { return std::exp2(c_min / bandwidth) - 1.0; }

namespace {

void check_gain_levels(std::span<const Real> gains) {
  require(!gains.empty(), "gain levels must be nonempty");
  for (std::size_t i = 0; i < gains.size(); ++i) {
    require(std::isfinite(gains[i]) && gains[i] > 0, "gain levels must be finite and > 0");
    if (i > 0) require(gains[i] > gains[i - 1], "gain levels must be strictly increasing");
  }
}

}  // namespace

std::vector<Real> discretize_prior(std::span<const Real> gain_levels, Real r_coff) {
  check_gain_levels(gain_levels);
  std::vector<Real> density;
  density.reserve(gain_levels.size());
  for (Real g : gain_levels) density.push_back(rayleigh_pdf(g, r_coff));
  const Real total = std::accumulate(density.begin(), density.end(), Real{0});
  // Far in the tail every density underflows; there is nothing to renormalize.
  require(total > 0, "Rayleigh density vanishes at every gain level");
  for (Real& d : density) {
    d /= total;
    require(d > 0, "Rayleigh density underflows at a gain level; prior would be zero");
  }
  return density;
}

NodeChannelProfile::NodeChannelProfile(int node_id, std::vector<ChannelType> types, Real rayleigh_coeff)
    : node_id_(node_id), types_(std::move(types)), rayleigh_coeff_(rayleigh_coeff) {
  require(std::isfinite(rayleigh_coeff_) && rayleigh_coeff_ > 0, "rayleigh_coeff must be > 0");
  require(!types_.empty(), "node needs at least one channel type");
  Real total = 0;
  for (std::size_t i = 0; i < types_.size(); ++i) {
    const auto& t = types_[i];
    require(std::isfinite(t.gain) && t.gain > 0, "channel type gain must be > 0");
    require(t.prior > 0 && t.prior <= 1, "channel type prior must lie in (0, 1]");
    if (i > 0) require(t.gain > types_[i - 1].gain, "type gains must be strictly increasing");
    total += t.prior;
  }
  require(std::abs(total - 1.0) <= 1e-9, "type priors must sum to 1");
}

NodeChannelProfile NodeChannelProfile::from_gain_levels(int node_id, std::span<const Real> gains,
                                                        Real rayleigh_coeff) {
  const auto priors = discretize_prior(gains, rayleigh_coeff);
  return with_priors(node_id, gains, priors, rayleigh_coeff);
}

NodeChannelProfile NodeChannelProfile::with_priors(int node_id, std::span<const Real> gains,
                                                   std::span<const Real> priors, Real rayleigh_coeff) {
  require(gains.size() == priors.size(), "gain levels and priors differ in length");
  std::vector<ChannelType> types;
  for (std::size_t i = 0; i < gains.size(); ++i)
    types.push_back({static_cast<int>(i), gains[i], priors[i]});
  return NodeChannelProfile(node_id, std::move(types), rayleigh_coeff);
}

}  // namespace bnepower
