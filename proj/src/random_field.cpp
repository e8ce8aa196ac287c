#include "pcaising/random_field.hpp"

#include <cmath>
#include <stdexcept>

namespace pcaising {

RandomField::RandomField(std::uint64_t seed, std::optional<UniformWindow> window)
    : seed_(seed), key_(mix64(seed ^ 0x5851F42D4C957F2DULL)), window_(window) {
  if (window_ && !(window_->lower >= 0.0 && window_->lower < window_->upper && window_->upper <= 1.0)) {
    throw std::invalid_argument("uniform window must be a non-empty sub-interval of (0, 1)");
  }
  if (window_) {
    inner_lower_ = std::nextafter(window_->lower, 1.0);
    inner_upper_ = std::nextafter(window_->upper, 0.0);
  }
}

RandomField RandomField::conditioned(std::uint64_t seed, double atypical_width) {
  if (!(atypical_width > 0.0 && atypical_width < 0.5)) {
    throw std::invalid_argument("zero-temperature window needs 0 < w < 1/2 (requires 2J > q)");
  }
  return RandomField(seed, UniformWindow{atypical_width, 1.0 - atypical_width});
}

}  // namespace pcaising
