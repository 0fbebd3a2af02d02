// Copyright 2026 The hintaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hintaug {

// Mirrors hintaug_status in hintaug.h; keep the numeric values in sync.
enum class ErrorCode : int {
    config = 1,
    dimension = 2,
    numeric = 3,
    io = 4,
    parse = 5,
    dataset = 6,
    label = 7,
    index = 8,
    attach = 9,
    training = 10,
    contract = 11,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define HINTAUG_DECLARE_ERROR(Name, value)                                      \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(ErrorCode::value, what) {} \
    }

HINTAUG_DECLARE_ERROR(ConfigError, config);
HINTAUG_DECLARE_ERROR(DimensionError, dimension);
HINTAUG_DECLARE_ERROR(NumericError, numeric);
HINTAUG_DECLARE_ERROR(IoError, io);
HINTAUG_DECLARE_ERROR(ParseError, parse);
HINTAUG_DECLARE_ERROR(DatasetError, dataset);
HINTAUG_DECLARE_ERROR(LabelError, label);
HINTAUG_DECLARE_ERROR(IndexError, index);
HINTAUG_DECLARE_ERROR(AttachError, attach);
HINTAUG_DECLARE_ERROR(TrainingError, training);
HINTAUG_DECLARE_ERROR(ContractError, contract);

#undef HINTAUG_DECLARE_ERROR

} // namespace hintaug
