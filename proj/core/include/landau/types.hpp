#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace landau {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a computation produces a NaN/Inf; the message names the
/// offending term (pair indices, parameter slot, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which objective trains the field and how the density update is staged.
enum class Scheme { kImplicit, kExplicit, kScore };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kImplicit: return "implicit";
    case Scheme::kExplicit: return "explicit";
    case Scheme::kScore: return "score";
  }
  return "unknown";
}

inline Scheme scheme_from_string(std::string_view name) {
  if (name == "implicit") return Scheme::kImplicit;
  if (name == "explicit") return Scheme::kExplicit;
  if (name == "score") return Scheme::kScore;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

}  // namespace landau
