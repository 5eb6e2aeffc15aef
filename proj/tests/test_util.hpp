#ifndef BAYGAZE_TESTS_TEST_UTIL_HPP_
#define BAYGAZE_TESTS_TEST_UTIL_HPP_

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "baygaze/error.hpp"

namespace baygaze::testing {

inline std::string golden_path(const std::string& name) {
  return std::string(BAYGAZE_GOLDEN_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Compares `actual` against a checked-in file. BAYGAZE_UPDATE_GOLDEN=1
// rewrites the file instead.
inline void expect_golden(const std::string& name, const std::string& actual) {
  const std::string path = golden_path(name);
  if (const char* u = std::getenv("BAYGAZE_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  const std::string expected = read_file(path);
  ASSERT_FALSE(expected.empty()) << "missing golden file " << path;
  EXPECT_TRUE(expected == actual) << "golden mismatch for " << name;
}

#define EXPECT_ERROR_CODE(stmt, expected_code)                        \
  do {                                                                \
    try {                                                             \
      stmt;                                                           \
      ADD_FAILURE() << "expected " << ::baygaze::error_code_name(expected_code); \
    } catch (const ::baygaze::Error& e) {                             \
      EXPECT_EQ(e.code(), expected_code) << e.what();                 \
    }                                                                 \
  } while (0)

}  // namespace baygaze::testing

#endif  // BAYGAZE_TESTS_TEST_UTIL_HPP_
