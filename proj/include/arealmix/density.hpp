#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace arealmix {

/// A log-density on R^d with its gradient, plus optional generated outputs
/// recorded with every kept draw. Implementations must be safe to call
/// concurrently from several chains.
class DifferentiableDensity {
 public:
  virtual ~DifferentiableDensity() = default;

  virtual std::size_t dimension() const = 0;

  /// Returns log p(x) and writes d log p / dx into grad. A non-finite
  /// return marks a divergent state; grad is then unspecified.
  virtual double log_density_gradient(std::span<const double> x, std::span<double> grad) const = 0;

  /// Names of the values stored per kept draw. Defaults to x[1..d].
  virtual std::vector<std::string> output_names() const;

  /// Values stored per kept draw; default is the identity on x.
  virtual void write_outputs(std::span<const double> x, std::span<double> out) const;

  /// Number of pointwise log-likelihood terms recorded per draw.
  virtual std::size_t pointwise_size() const { return 0; }
  virtual void pointwise_log_likelihood(std::span<const double>, std::span<double>) const {}
};

}  // namespace arealmix
