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

#include "apnea/epoch_grid.hpp"

#include <cmath>
#include <string>

#include "apnea/error.hpp"

namespace apnea {

std::vector<double> EpochGrid::epoch_starts() const {
  std::vector<double> starts(count_);
  for (std::size_t i = 0; i < count_; ++i) starts[i] = start(i);
  return starts;
}

EpochGrid build_epoch_grid(double recording_duration_s) {
  if (!(recording_duration_s >= kMinRecordingS)) {
    raise(ErrorKind::kRecordingTooShort,
          "recording of " + std::to_string(recording_duration_s) + " s is shorter than 20 s");
  }
  const auto count =
      static_cast<std::size_t>(std::floor((recording_duration_s - kEpochWindowS) / kEpochStrideS)) + 1;
  return EpochGrid(count);
}

}  // namespace apnea
