#pragma once

#include <doctest.h>

#include "dfx/core/error.hpp"

// Asserts that `expr` throws dfx::Error of the given kind.
#define CHECK_THROWS_KIND(expr, expected_kind)                                       \
  do {                                                                               \
    bool dfx_thrown_ = false;                                                        \
    try {                                                                            \
      static_cast<void>(expr);                                                       \
    } catch (const ::dfx::Error& dfx_error_) {                                       \
      dfx_thrown_ = true;                                                            \
      CHECK_MESSAGE(dfx_error_.kind() == (expected_kind), dfx_error_.what());        \
    }                                                                                \
    CHECK_MESSAGE(dfx_thrown_, "expected dfx::Error from " #expr);                   \
  } while (false)
