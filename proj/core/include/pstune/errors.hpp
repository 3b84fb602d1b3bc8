// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pstune {

/* Base for all library errors so callers can catch one type. */
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

/* A value fails a documented precondition (range, finiteness, shape). */
class validation_error : public error {
 public:
  using error::error;
};

/* Records arrived out of order, or an operation ran in the wrong phase. */
class sequencing_error : public error {
 public:
  using error::error;
};

/* Malformed or inconsistent experiment configuration. */
class config_error : public error {
 public:
  using error::error;
};

/* Curve fit rejected its input (e.g. a loss at or above the bound d). */
class fit_error : public error {
 public:
  using error::error;
};

/* Not enough usable points to fit or estimate. */
class insufficient_data_error : public error {
 public:
  using error::error;
};

/* Linear algebra failed beyond recovery (jitter exhausted, singular system). */
class numerical_error : public error {
 public:
  using error::error;
};

/* Training run left the stable regime (non-finite or exploding loss). */
class divergence_error : public error {
 public:
  using error::error;
};

/* Reconfiguration protocol violation (e.g. relocation message with no plan). */
class protocol_error : public error {
 public:
  using error::error;
};

}  // namespace pstune
