/*
* Copyright (C) 2026 The vsir authors
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
*/
#pragma once

#include <stdexcept>
#include <string>

namespace vsir
{

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A point was passed outside the domain D.
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// A broken internal invariant (e.g. thinning bound dominated by the rate).
class InternalError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Missing snapshot or time node.
class LookupError : public std::out_of_range
{
public:
    using std::out_of_range::out_of_range;
};

/// Unreadable input or unwritable output.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point iteration did not reach its tolerance.
class NonConvergenceError : public std::runtime_error
{
public:
    NonConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what)
        , m_residual(residual)
    {
    }

    double residual() const
    {
        return m_residual;
    }

private:
    double m_residual;
};

} // namespace vsir
