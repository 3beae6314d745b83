// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vitalwire {

/// Base class for every error raised by the vitalwire library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vitalwire
