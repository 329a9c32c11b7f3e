#include <cmath>
#include <random>
#include <string>

#include "qudash/abr.hpp"
#include "qudash/error.hpp"

namespace qudash {

BitrateLadder::BitrateLadder(std::vector<BitrateLevel> levels, double segment_duration)
    : levels_(std::move(levels)), segment_duration_(segment_duration) {
  if (levels_.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "bitrate ladder needs at least one level");
  }
  if (!(segment_duration_ > 0.0) || !std::isfinite(segment_duration_)) {
    throw Error(ErrorCode::kInvalidConfig, "segment duration must be > 0");
  }
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (!(levels_[l].mbps > 0.0) || !std::isfinite(levels_[l].mbps)) {
      throw Error(ErrorCode::kInvalidConfig, "bitrate must be positive");
    }
    if (l > 0 && !(levels_[l].mbps > levels_[l - 1].mbps)) {
      throw Error(ErrorCode::kInvalidConfig, "bitrates must be strictly increasing");
    }
  }
}

BitrateLadder BitrateLadder::standard() {
  return BitrateLadder({{1.0, "360p"},
                        {2.5, "480p"},
                        {5.0, "720p"},
                        {8.0, "1080p"},
                        {16.0, "1440p"},
                        {40.0, "2160p"}},
                       2.0);
}

Manifest::Manifest(BitrateLadder ladder, std::size_t num_segments, std::vector<double> sizes)
    : ladder_(std::move(ladder)), num_segments_(num_segments), sizes_(std::move(sizes)) {
  if (num_segments_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "manifest needs at least one segment");
  }
  const std::size_t levels = ladder_.size();
  if (sizes_.size() != num_segments_ * levels) {
    throw Error(ErrorCode::kInvalidConfig, "manifest size table has wrong shape");
  }
  for (std::size_t n = 0; n < num_segments_; ++n) {
    for (std::size_t l = 0; l < levels; ++l) {
      const double s = sizes_[n * levels + l];
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "segment " + std::to_string(n) + " level " + std::to_string(l) +
                        " has non-positive size");
      }
      if (l > 0 && !(s > sizes_[n * levels + l - 1])) {
        throw Error(ErrorCode::kInvalidConfig,
                    "segment " + std::to_string(n) + " sizes must increase with level");
      }
    }
  }
}

Manifest Manifest::constant_bitrate(BitrateLadder ladder, std::size_t num_segments) {
  std::vector<double> sizes;
  sizes.reserve(num_segments * ladder.size());
  for (std::size_t n = 0; n < num_segments; ++n) {
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      sizes.push_back(ladder.bitrate(l) * ladder.segment_duration());
    }
  }
  return Manifest(std::move(ladder), num_segments, std::move(sizes));
}

Manifest Manifest::variable_bitrate(BitrateLadder ladder, std::size_t num_segments,
                                    double jitter, std::uint64_t seed) {
  if (!(jitter >= 0.0 && jitter < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "size jitter must be in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> sizes;
  sizes.reserve(num_segments * ladder.size());
  for (std::size_t n = 0; n < num_segments; ++n) {
    const double factor = 1.0 + jitter * unit(rng);
    for (std::size_t l = 0; l < ladder.size(); ++l) {
      sizes.push_back(ladder.bitrate(l) * ladder.segment_duration() * factor);
    }
  }
  return Manifest(std::move(ladder), num_segments, std::move(sizes));
}

double Manifest::size(std::size_t n, std::size_t l) const {
  if (n >= num_segments_ || l >= ladder_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "segment " + std::to_string(n) + " level " + std::to_string(l) +
                    " outside manifest");
  }
  return sizes_[n * ladder_.size() + l];
}

Prediction harmonic_mean_predict(std::span<const double> history, std::size_t window) {
  if (window == 0) {
    throw Error(ErrorCode::kInvalidArgument, "predictor window must be >= 1");
  }
  Prediction p;
  double inv_sum = 0.0;
  std::size_t used = 0;
  for (auto it = history.rbegin(); it != history.rend() && used < window; ++it) {
    if (!(*it > 0.0) || !std::isfinite(*it)) {
      ++p.excluded;
      continue;
    }
    inv_sum += 1.0 / *it;
    ++used;
  }
  if (used > 0) p.mbps = static_cast<double>(used) / inv_sum;
  return p;
}

std::size_t highest_level_at_most(const BitrateLadder& ladder, double mbps) {
  std::size_t best = ladder.lowest();
  for (std::size_t l = 0; l < ladder.size(); ++l) {
    if (ladder.bitrate(l) <= mbps) best = l;
  }
  return best;
}

}  // namespace qudash
