#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rydchain {

/// Local atomic levels of the open-system model.
enum class Level : std::uint8_t { g = 0, up = 1, down = 2 };

constexpr std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

struct LevelAlphabet {
  static constexpr std::size_t base = 3;
  static constexpr std::string_view symbols = "gud";
};

/// Ground-vs-Rydberg content of an atom; digit 1 means ground.
struct ReadoutAlphabet {
  static constexpr std::size_t base = 2;
  static constexpr std::string_view symbols = "rg";
};

/// Observed recapture outcome; digit 1 means recaptured.
struct RecaptureAlphabet {
  static constexpr std::size_t base = 2;
  static constexpr std::string_view symbols = "01";
};

/// Probability distribution over product states of N atoms, one digit per
/// atom. Atom 0 is the most significant digit, so the label of index k reads
/// left to right as atoms 0..N-1 (e.g. "100" for N = 3 recapture patterns).
template <class Alphabet>
class ProductDistribution {
 public:
  static constexpr std::size_t base = Alphabet::base;

  ProductDistribution() = default;
  explicit ProductDistribution(std::size_t n_atoms)
      : n_atoms_(n_atoms), values_(ipow(base, n_atoms), 0.0) {}
  ProductDistribution(std::size_t n_atoms, std::vector<double> values);

  std::size_t n_atoms() const noexcept { return n_atoms_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  double& operator[](std::size_t index) { return values_[index]; }
  const std::vector<double>& values() const noexcept { return values_; }

  double total() const;

  /// Digit of `atom` in basis index `index`.
  std::size_t digit(std::size_t index, std::size_t atom) const {
    return (index / ipow(base, n_atoms_ - 1 - atom)) % base;
  }
  std::size_t index_of(std::span<const std::size_t> digits) const;
  std::size_t index_of(std::string_view label) const;
  std::string label(std::size_t index) const;
  double at(std::string_view label) const { return values_[index_of(label)]; }

 private:
  std::size_t n_atoms_ = 0;
  std::vector<double> values_;
};

using LevelPopulations = ProductDistribution<LevelAlphabet>;
using ReadoutPopulations = ProductDistribution<ReadoutAlphabet>;
using RecaptureDistribution = ProductDistribution<RecaptureAlphabet>;

extern template class ProductDistribution<LevelAlphabet>;
extern template class ProductDistribution<ReadoutAlphabet>;
extern template class ProductDistribution<RecaptureAlphabet>;

}  // namespace rydchain
