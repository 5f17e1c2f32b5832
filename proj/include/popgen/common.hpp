#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace popgen {

// Error categories map 1:1 to CLI exit codes.
enum class ErrorKind { Config = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message),
        kind_(kind),
        code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error config_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Config, code, msg);
}
inline Error data_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Data, code, msg);
}
inline Error numeric_error(const std::string& code, const std::string& msg) {
  return Error(ErrorKind::Numeric, code, msg);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Derive an independent stream from a base seed, e.g. per restart or fold.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace popgen
