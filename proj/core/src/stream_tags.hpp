#pragma once

#include <cstdint>

// Stream-id registry for counter-based RNG derivation. Every consumer mixes
// (user seed, tag, per-item coordinates) into an independent stream; keeping
// the tags in one place guarantees no two subsystems collide on a seed.
namespace scoremerge::tags {

inline constexpr std::uint64_t kOdePrior = 1;
inline constexpr std::uint64_t kSde = 2;
inline constexpr std::uint64_t kAncestral = 3;
inline constexpr std::uint64_t kPrefix = 4;

inline constexpr std::uint64_t kProbe = 10;
inline constexpr std::uint64_t kVlbTime = 11;
inline constexpr std::uint64_t kDequant = 12;

inline constexpr std::uint64_t kTrainInit = 20;
inline constexpr std::uint64_t kTrainSample = 21;
inline constexpr std::uint64_t kTrainBatch = 22;
inline constexpr std::uint64_t kLossValue = 23;

inline constexpr std::uint64_t kDataset = 30;

}  // namespace scoremerge::tags
