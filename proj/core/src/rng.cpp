#include "hsn/rng.hpp"

namespace hsn {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose, std::uint64_t index) {
  std::uint64_t h = mix64(parent ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ fnv1a64(purpose));
  return mix64(h + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace hsn
