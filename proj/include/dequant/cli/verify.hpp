#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dequant::cli {

struct VerifyOptions {
  std::uint64_t seed = 42;
  std::size_t cases = 50;
  /// Test fixture: flips the sign of u_c wherever the suite uses it, to show
  /// the suite notices a wrong minimizer.
  bool inject_uc_sign_error = false;
};

struct FamilyResult {
  std::string name;
  bool passed = true;
  /// Largest residual over all cases, already divided by its scale.
  double worst = 0.0;
  double tolerance = 0.0;
  std::size_t worst_case = 0;
  std::size_t checks = 0;
};

struct VerifyReport {
  std::uint64_t seed = 0;
  std::size_t cases = 0;
  std::vector<FamilyResult> families;
  bool passed() const;
  /// Fixed-format text, byte-identical for a given seed and case count.
  std::string text() const;
};

/// Randomized invariant suite over smooth Gaussian-mixture states. Cases run
/// in parallel; results are reduced in case order.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace dequant::cli
