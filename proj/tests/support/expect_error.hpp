#pragma once

#include <gtest/gtest.h>

#include "glips/error.hpp"

// Runs `stmt` and checks it throws glips::Error with the given code.
#define EXPECT_GLIPS_ERROR(stmt, expected_code)                                               \
  do {                                                                                      \
    try {                                                                                   \
      stmt;                                                                                 \
      ADD_FAILURE() << "expected " << glips::to_string(expected_code) << ", nothing thrown"; \
    } catch (const glips::Error& e_) {                                                      \
      EXPECT_EQ(glips::to_string(e_.code()), glips::to_string(expected_code)) << e_.what(); \
    }                                                                                       \
  } while (0)
