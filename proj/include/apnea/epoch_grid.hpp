/**
 * Copyright 2026 The apnea-screen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <vector>

namespace apnea {

inline constexpr double kEpochWindowS = 10.0;
inline constexpr double kEpochStrideS = 0.5;
inline constexpr double kMinRecordingS = 20.0;
/// Epochs covering a single stride-long frame away from the recording edges.
inline constexpr std::size_t kEpochsPerFrame = 20;

/// Sliding 10 s analysis windows advanced by 0.5 s (9.5 s overlap).
class EpochGrid {
 public:
  EpochGrid() = default;
  explicit EpochGrid(std::size_t count) : count_(count) {}

  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  double window_s() const noexcept { return kEpochWindowS; }
  double stride_s() const noexcept { return kEpochStrideS; }
  double start(std::size_t i) const noexcept { return static_cast<double>(i) * kEpochStrideS; }
  double end(std::size_t i) const noexcept { return start(i) + kEpochWindowS; }

  /// Frames are stride-long cells of the time axis; every epoch covers 20 of them.
  std::size_t frame_count() const noexcept { return count_ == 0 ? 0 : count_ + kEpochsPerFrame - 1; }

  std::vector<double> epoch_starts() const;

  bool operator==(const EpochGrid&) const = default;

 private:
  std::size_t count_ = 0;
};

/// Throws RecordingTooShort below 20 s.
EpochGrid build_epoch_grid(double recording_duration_s);

}  // namespace apnea
