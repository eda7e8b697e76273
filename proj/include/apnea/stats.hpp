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

#include <span>

namespace apnea::stats {

double mean(std::span<const double> values);
/// Population variance (divides by n).
double variance(std::span<const double> values);
double median(std::span<const double> values);
/// Median absolute deviation from the median, unscaled.
double mad(std::span<const double> values);
/// Linear-interpolation quantile (R type 7), q in [0, 1].
double quantile(std::span<const double> values, double q);
double interquartile_range(std::span<const double> values);
/// Pearson correlation; returns 0 when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace apnea::stats
