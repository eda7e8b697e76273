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

#include "apnea/error.hpp"

namespace apnea {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kMalformedManifest: return "MalformedManifest";
    case ErrorKind::kMalformedCsv: return "MalformedCsv";
    case ErrorKind::kInvariantViolation: return "InvariantViolation";
    case ErrorKind::kNoAnnotations: return "NoAnnotations";
    case ErrorKind::kMissingAnnotations: return "MissingAnnotations";
    case ErrorKind::kRecordingTooShort: return "RecordingTooShort";
    case ErrorKind::kDatabaseTooSmall: return "DatabaseTooSmall";
    case ErrorKind::kUnknownSubject: return "UnknownSubject";
    case ErrorKind::kSingleClassInput: return "SingleClassInput";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kGridMismatch: return "GridMismatch";
    case ErrorKind::kUnsortedInput: return "UnsortedInput";
    case ErrorKind::kEmptyCohort: return "EmptyCohort";
    case ErrorKind::kEmptyMatrix: return "EmptyMatrix";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace apnea
