#include <gtest/gtest.h>
#include "vulnboost/vulnboost.hpp"
TEST(Placeholder_ovr, Compiles) { SUCCEED(); }
