#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace difflab {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Stateless: output depends only on (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// 64-bit FNV-1a; used to turn stream names into tags.
std::uint64_t hash_name(std::string_view name) noexcept;

// Derives a child seed from a master seed and a stream name, so adding a new
// named stream never perturbs draws of an existing one.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name) noexcept;

// Counter-based generator keyed by (seed, stream). Every draw is addressed by
// (path, step, slot), so any path can be recomputed in isolation and results do
// not depend on how paths are scheduled across workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::array<std::uint32_t, 4> block(std::uint64_t path, std::uint32_t step,
                                     std::uint32_t slot) const noexcept;

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform(std::uint64_t path, std::uint32_t step, std::uint32_t slot) const noexcept;

  // Fills `out` with iid standard normals (Box-Muller); consumes slots
  // first_slot, first_slot+1, ... one per pair of normals.
  void normals(std::uint64_t path, std::uint32_t step, std::uint32_t first_slot,
               std::span<double> out) const noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint32_t, 2> key_;
};

// Slot layout inside one (path, step) cell.
inline constexpr std::uint32_t kSlotsPerSubstep = 16;
inline constexpr std::uint32_t kBridgeSlot = 12;     // boundary-bridge uniform
inline constexpr std::uint32_t kAuxSlot = 13;        // model-specific extras

}  // namespace difflab
