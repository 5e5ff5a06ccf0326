/*
 * Copyright 2026 The sumtrain Authors
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

#include <stdexcept>
#include <string>

namespace sumtrain
{

enum class ErrorKind
{
    validation,  // bad input value or shape
    config,      // inconsistent configuration
    numerical,   // solver failure, non-finite result, degenerate formula
    io,          // file access or malformed file
};

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message)
{
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message)
{
    if (!condition)
    {
        throw Error(kind, message);
    }
}

}  // namespace sumtrain
