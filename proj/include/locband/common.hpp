#ifndef LOCBAND_COMMON_HPP
#define LOCBAND_COMMON_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace locband {

// Invalid or inconsistent user-facing configuration (bad key, bad range,
// mismatched sizes). CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite value produced during evaluation or training. Carries enough
// context to name the offending node or phase.
class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

using Vector = std::vector<double>;

// Symmetric 2x2 tensor (plane components). 1D problems use only xx.
struct Sym2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double trace() const { return xx + yy; }
  // Full contraction a:a with both off-diagonal entries counted.
  double self_contract() const { return xx * xx + yy * yy + 2.0 * xy * xy; }
};

}  // namespace locband

#endif
