/*
 * Copyright (C) 2026 The mixsafe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef MIXSAFE__ERRORS_HPP
#define MIXSAFE__ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mixsafe {

//==============================================================================
/// Argument outside the admissible range of an operation (path arc lengths,
/// agent indices).
class RangeError : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};

//==============================================================================
/// Non-finite or malformed input values.
class ValidationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//==============================================================================
/// Incompatible tensor or layer dimensions.
class ShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

//==============================================================================
/// A caller broke an operation's contract (missing actions, backward on a
/// non-scalar, empty horizons).
class ContractError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

//==============================================================================
class LookupError : public std::out_of_range
{
public:
  using std::out_of_range::out_of_range;
};

//==============================================================================
class SpawnError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//==============================================================================
class TrainingError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//==============================================================================
/// Configuration documents that cannot be parsed or fail validation.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//==============================================================================
class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace mixsafe

#endif // MIXSAFE__ERRORS_HPP
